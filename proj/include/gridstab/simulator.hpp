#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridstab/ingest.hpp"
#include "gridstab/inverter.hpp"
#include "gridstab/netmodel.hpp"
#include "gridstab/powerflow.hpp"
#include "gridstab/stability.hpp"

namespace gridstab {

/// Timed override of an inverter's live droop parameters; models the
/// cyber-attack as a parameter rewrite plus optional loss of the policy.
struct ScenarioEvent {
    double time = 0.0;
    int bus = 0; // internal bus index once resolved
    std::map<std::string, double> overrides;
    std::optional<bool> disable_policy;
};

enum class CaseMode { NoInverters = 1, NoPolicy = 2, Policy = 3 };

/// Fully resolved simulation input: normalized network, internal bus ids.
struct Scenario {
    NetworkModel network;
    std::vector<InverterConfig> inverters;
    ProfileSet profiles; // keyed by internal bus index
    double horizon = 3600.0;
    double dt = 1.0;
    std::uint64_t seed = 0;
    std::vector<ScenarioEvent> events;
    double envelope_window = 50.0;
    double stability_margin = 1e-6; // epsilon in the policy
    CaseMode case_mode = CaseMode::Policy;
};

struct PolicyFiring {
    double t = 0.0;
    int bus = 0;
    PolicyAdjustment adjustment;
    bool applied = false; // false when CannotStabilize left best-effort params
};

/// One record per step.
struct StepRecord {
    double t = 0.0;
    Eigen::VectorXd v;             // per non-substation bus
    std::vector<double> p_g, q_g;  // per inverter
    std::vector<double> eps_p, eps_q_plus;
    std::vector<double> flicker;   // 0 until enough history
    std::vector<char> policy_fired;
    double P_sub = 0.0, Q_sub = 0.0;
    bool diverged = false; // linear solve flagged v^2 <= 0
};

struct TimeSeries {
    std::vector<int> inverter_buses; // internal indices, column order
    std::vector<StepRecord> records;
    std::vector<PolicyFiring> firings;
};

/// Live per-run state. Ring buffers hold the trailing voltage window per
/// inverter; live configs start as copies of the scenario configs and are
/// mutated only by events and the policy.
struct SimulationState {
    double t = 0.0;
    Eigen::VectorXd s_g; // stacked [p_g; q_g], length 2(n-1)
    Eigen::VectorXd v;
    std::vector<std::vector<double>> history; // per inverter
    std::vector<InverterConfig> live;
    std::vector<char> policy_enabled;
};

struct FixedPoint {
    Eigen::VectorXd s_star; // stacked [p_g; q_g]
    Eigen::VectorXd v_star;
    bool converged = false;
    int iterations = 0;
};

/// Damped fixed-point iteration s <- (1-gamma) s + gamma f_S(v(s) - v_nom).
/// Non-convergence is reported in the result, not thrown: it is the
/// expected signature of unstable dynamics.
FixedPoint find_fixed_point(const NetworkModel& network, const SensitivityMatrices& mat,
                            const std::vector<std::pair<InverterConfig, OperatingPoint>>& inverters,
                            const InjectionVector& loads, double v0, double tol = 1e-12,
                            int max_iter = 5000, double gamma = 0.5);

/// Apply one event to the live state. Throws UnknownParameterError or
/// NotAnInverterBusError.
void apply_event(SimulationState& state, const std::vector<int>& inverter_buses,
                 const ScenarioEvent& event);

/// Advance one step: solve voltages, update ring buffers, evaluate droop
/// targets with live parameters, first-order filter update.
void step(SimulationState& state, const SensitivityMatrices& mat, const NetworkModel& network,
          const std::vector<OperatingPoint>& ops, const InjectionVector& loads, double dt,
          StepRecord& record);

/// Full scenario run per the local-control flowchart: events first, then
/// per-inverter policy at multiples of its T_d, then dispatch. Deterministic
/// for a fixed scenario.
TimeSeries run(const Scenario& scenario, const SensitivityMatrices& mat);

struct EnvelopeStats {
    std::vector<int> buses; // internal indices 1..n-1
    Eigen::VectorXd spread_mean;  // per bus: time-avg (upper - lower)
    Eigen::VectorXd var_upper;    // per bus: variance of the upper envelope
    Eigen::VectorXd var_lower;
    std::vector<double> avg_upper; // per step: mean over buses
    std::vector<double> avg_lower;
};

/// Sliding-window (window seconds) max/min envelopes of each bus voltage.
EnvelopeStats envelope_stats(const TimeSeries& series, double window, double dt);

/// Longest run, in seconds, of flicker > threshold at one inverter.
double longest_flicker_exceedance(const TimeSeries& series, int inverter_index,
                                  double threshold, double dt);

}  // namespace gridstab
