#include "gridstab/inverter.hpp"

#include <algorithm>
#include <cmath>

#include "gridstab/errors.hpp"

namespace gridstab {

void InverterConfig::validate() const {
    if (!(vp() - eps_p / 2.0 > 0.0)) throw Error("require V_p - eps_p/2 > v_nom");
    if (!(vqp() - eps_q_plus / 2.0 > 0.0)) throw Error("require V_q+ - eps_q+/2 > v_nom");
    if (!(vqm() + eps_q_minus / 2.0 < 0.0)) throw Error("require V_q- + eps_q-/2 < v_nom");
    if (!(eps_q_plus <= 2.0 * vqp())) throw Error("require eps_q+ <= 2(V_q+ - v_nom)");
    if (!(eps_q_minus <= -2.0 * vqm())) throw Error("require eps_q- <= -2(V_q- - v_nom)");
    if (!(q_lim > 0.0 && q_lim <= s_rated)) throw Error("require 0 < q_lim <= s_rated");
    if (!(eps_p > 0.0 && eps_q_plus > 0.0 && eps_q_minus > 0.0))
        throw Error("ramp widths must be positive");
    if (!(T_p > 0.0 && T_q > 0.0)) throw Error("time constants must be positive");
}

double volt_watt(const InverterConfig& cfg, const OperatingPoint& op, double dv) {
    const double lo = cfg.vp() - cfg.eps_p / 2.0;
    const double hi = cfg.vp() + cfg.eps_p / 2.0;
    if (dv < lo) return op.p_bar;
    if (dv > hi) return 0.0;
    return (op.p_bar / -cfg.eps_p) * (dv - hi);
}

double q_bar(const InverterConfig& cfg, const OperatingPoint& op, double dv) {
    const double fp = volt_watt(cfg, op, dv);
    const double head = cfg.s_rated * cfg.s_rated - fp * fp;
    return std::min(cfg.q_lim, std::sqrt(std::max(head, 0.0)));
}

double volt_var(const InverterConfig& cfg, const OperatingPoint& op, double dv) {
    // constant capability on the negative side (f_p = p_bar there)
    const double headConst = cfg.s_rated * cfg.s_rated - op.p_bar * op.p_bar;
    const double qConst = std::min(cfg.q_lim, std::sqrt(std::max(headConst, 0.0)));

    const double mLo = cfg.vqm() - cfg.eps_q_minus / 2.0;
    const double mHi = cfg.vqm() + cfg.eps_q_minus / 2.0;
    const double pLo = cfg.vqp() - cfg.eps_q_plus / 2.0;
    const double pHi = cfg.vqp() + cfg.eps_q_plus / 2.0;

    if (dv < mLo) return qConst;
    if (dv < mHi) return (qConst / -cfg.eps_q_minus) * (dv - mHi);
    if (dv <= pLo) return 0.0; // dead-band [mHi, pLo]
    if (dv < pHi) return (q_bar(cfg, op, dv) / -cfg.eps_q_plus) * (dv - pLo);
    return -q_bar(cfg, op, dv);
}

std::pair<double, double> lipschitz_constants(const InverterConfig& cfg,
                                              const OperatingPoint& op) {
    if (op.mu > kMuMax)
        throw MuSaturatedError("mu = " + std::to_string(op.mu) +
                               " exceeds the clamp ceiling; clamp before calling");
    if (op.mu <= 0.0) return {0.0, cfg.q_lim / cfg.eps_q_plus};
    const double cp = op.p_bar / cfg.eps_p;
    const double root = std::sqrt(1.0 / (op.mu * op.mu) - 1.0);
    const double cq = op.p_bar / (cfg.eps_p * root) + cfg.q_lim / cfg.eps_q_plus;
    return {cp, cq};
}

std::pair<double, double> droop_derivative(const InverterConfig& cfg, const OperatingPoint& op,
                                           double dv) {
    double dp = 0.0;
    if (std::abs(dv - cfg.vp()) < cfg.eps_p / 2.0) dp = -op.p_bar / cfg.eps_p;

    double dq = 0.0;
    if (std::abs(dv - cfg.vqm()) < cfg.eps_q_minus / 2.0) {
        const double headConst = cfg.s_rated * cfg.s_rated - op.p_bar * op.p_bar;
        const double qConst = std::min(cfg.q_lim, std::sqrt(std::max(headConst, 0.0)));
        dq = -qConst / cfg.eps_q_minus;
    } else if (std::abs(dv - cfg.vqp()) < cfg.eps_q_plus / 2.0) {
        // product rule on q_bar(dv) * ramp(dv); the step function kills the
        // first term where the hardware limit is binding
        const double fp = volt_watt(cfg, op, dv);
        const double head = std::sqrt(
            std::max(cfg.s_rated * cfg.s_rated - fp * fp, 0.0));
        const double qb = std::min(cfg.q_lim, head);
        double dqbar = 0.0;
        if (head < cfg.q_lim && head > 0.0) dqbar = -fp * dp / head;
        const double pLo = cfg.vqp() - cfg.eps_q_plus / 2.0;
        dq = -(dqbar * (dv - pLo) + qb) / cfg.eps_q_plus;
    } else if (dv > cfg.vqp() + cfg.eps_q_plus / 2.0) {
        // saturated -q_bar(dv) still varies while the Volt-Watt ramp is active
        const double fp = volt_watt(cfg, op, dv);
        const double head = std::sqrt(
            std::max(cfg.s_rated * cfg.s_rated - fp * fp, 0.0));
        if (head < cfg.q_lim && head > 0.0) dq = fp * dp / head;
    }
    return {dp, dq};
}

double apply_power_factor_cap(const InverterConfig& cfg, double p, double q) {
    if (cfg.min_power_factor <= 0.0 || p <= 0.0) return q;
    const double cap = p * std::tan(std::acos(cfg.min_power_factor));
    return std::clamp(q, -cap, cap);
}

}  // namespace gridstab
