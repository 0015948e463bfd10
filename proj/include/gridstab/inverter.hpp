#pragma once

#include <utility>

namespace gridstab {

/// Ceiling applied to mu wherever 1/mu^2-1 or 1-mu^2 appears; the Lipschitz
/// and policy expressions diverge at mu = 1.
inline constexpr double kMuMax = 0.999;

/// Volt-Watt / Volt-Var droop settings for one inverter.
///
/// Breakpoints are absolute per-unit voltages; the curves operate on the
/// deviation dv = v - v_nom, so e.g. V_p = 1.035 with v_nom = 1 puts the
/// Volt-Watt ramp centre at dv = 0.035. The Volt-Var dead-band is derived,
/// not configured: its half-width is (V_q_plus - v_nom) - eps_q_plus/2,
/// which makes the ramp pieces meet the dead-band continuously.
struct InverterConfig {
    int bus = 0;
    double s_rated = 0.0;    // per-unit apparent power rating
    double q_lim = 0.0;      // per-unit reactive hardware limit, 0 < q_lim <= s_rated
    double V_p = 1.035;      // Volt-Watt ramp centre (absolute pu)
    double eps_p = 0.03;     // Volt-Watt ramp width (pu)
    double V_q_plus = 1.035; // Volt-Var positive ramp centre (absolute pu)
    double V_q_minus = 0.965;
    double eps_q_plus = 0.03;
    double eps_q_minus = 0.03;
    double T_p = 25.0; // low-pass time constant, seconds
    double T_q = 25.0;
    double v_T = 0.01;  // flicker threshold (pu) triggering the local policy
    double v_nom = 1.0; // nominal voltage (pu)
    double min_power_factor = 0.2;

    double T_d() const { return T_p < T_q ? T_p : T_q; } // policy period

    // dv-domain breakpoints
    double vp() const { return V_p - v_nom; }
    double vqp() const { return V_q_plus - v_nom; }
    double vqm() const { return V_q_minus - v_nom; }

    /// Throws Error if the section-3.3 constraints are violated.
    void validate() const;
};

/// Irradiance-dependent operating point: p_bar = mu * s_rated.
struct OperatingPoint {
    double p_bar = 0.0;
    double mu = 0.0;

    static OperatingPoint from_mu(double mu, double s_rated) {
        return OperatingPoint{mu * s_rated, mu};
    }
    double mu_clamped() const { return mu < kMuMax ? mu : kMuMax; }
};

/// Volt-Watt curve: p_bar below the ramp, linear ramp of slope -p_bar/eps_p
/// around V_p, zero above. Continuous; ties evaluate the ramp piece.
double volt_watt(const InverterConfig& cfg, const OperatingPoint& op, double dv);

/// Reactive capability min(q_lim, sqrt(s^2 - f_p(dv)^2)).
double q_bar(const InverterConfig& cfg, const OperatingPoint& op, double dv);

/// Five-piece Volt-Var curve: +q_bar / ramp / dead-band / ramp / -q_bar.
/// The negative side uses the constant capability (f_p = p_bar); the
/// positive ramp and saturation use the voltage-dependent q_bar(dv).
double volt_var(const InverterConfig& cfg, const OperatingPoint& op, double dv);

/// Lipschitz constants (C_p, C_q) bounding the droop slopes:
/// C_p = p_bar/eps_p, C_q = p_bar/(eps_p*sqrt(1/mu^2-1)) + q_lim/eps_q_plus.
/// Throws MuSaturatedError when mu exceeds kMuMax; clamp first.
std::pair<double, double> lipschitz_constants(const InverterConfig& cfg,
                                              const OperatingPoint& op);

/// Analytic piece-wise derivative (dp/dv, dq/dv); one-sided at breakpoints.
/// Test oracle for the Lipschitz bound.
std::pair<double, double> droop_derivative(const InverterConfig& cfg, const OperatingPoint& op,
                                           double dv);

/// Minimum-power-factor dispatch cap: when p > 0, |q| is limited to
/// p*tan(acos(pf_min)); inactive when p = 0 or pf_min = 0. Applied where
/// targets are committed (simulator, fixed point), not inside the curves.
double apply_power_factor_cap(const InverterConfig& cfg, double p, double q);

}  // namespace gridstab
