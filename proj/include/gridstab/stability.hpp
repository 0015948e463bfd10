#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gridstab/inverter.hpp"
#include "gridstab/netmodel.hpp"

namespace gridstab {

struct StabilityEntry {
    int bus = 0;
    double C_p = 0.0;
    double C_q = 0.0;
    double lhs = 0.0;    // C_p^2 + C_q^2
    double eta = 0.0;    // 2 v*^2 / rowsum_zzt
    double margin = 0.0; // eta - lhs
    bool satisfied = false;
};

/// Per-inverter criterion evaluation; verdict = all satisfied.
struct StabilityReport {
    std::vector<StabilityEntry> entries;
    bool verdict = true;
};

/// Result of the local stabilization policy for one inverter.
struct PolicyAdjustment {
    int bus = 0;
    double eps_p_closed_form = 0.0; // p_bar / sqrt((1-mu^2)(eta-eps)) before widening
    double eps_p_new = 0.0;         // delivered value (after any widening)
    double eps_q_plus_new = 0.0;    // always 2 (V_q+ - v_nom)
    double eta_used = 0.0;
    double v_star_estimate = 0.0;
    bool post_check_passed = false;
    int widen_iterations = 0;
};

/// Per-bus stability budget eta_i = 2 v*_i^2 / rowsum_zzt_i.
Eigen::VectorXd eta(const SensitivityMatrices& mat, const Eigen::VectorXd& v_star);

/// Evaluate C_p^2 + C_q^2 < eta_i per inverter (mu clamped internally).
/// `eta_full` is indexed by non-substation bus (length n-1).
StabilityReport check_criterion(
    const std::vector<std::pair<InverterConfig, OperatingPoint>>& inverters,
    const Eigen::VectorXd& eta_full);

/// Mean absolute step-to-step voltage change over the trailing T_d seconds.
/// `history` is sampled every dt seconds, most recent last; requires at
/// least T_d/dt + 1 samples (throws InsufficientHistoryError otherwise).
double flicker(const std::vector<double>& history, double T_d, double dt = 1.0);

/// Moving average of the samples spanning the last T_d seconds (all samples
/// if fewer are held). Conservative local v* estimate for the policy.
double estimate_v_star(const std::vector<double>& history, double T_d, double dt = 1.0);

/// Local policy: eps_p' from the closed form, eps_q+' = 2(V_q+ - v_nom),
/// then re-verify the criterion with the new parameters and widen eps_p'
/// geometrically (x1.5, up to 60 times) until it holds.
/// Throws CannotStabilizeError if 60 widenings are insufficient.
PolicyAdjustment stabilize(const InverterConfig& cfg, const OperatingPoint& op, double eta_i,
                           double eps, double v_star);

}  // namespace gridstab
