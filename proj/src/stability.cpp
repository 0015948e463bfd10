#include "gridstab/stability.hpp"

#include <cmath>

#include "gridstab/errors.hpp"

namespace gridstab {

Eigen::VectorXd eta(const SensitivityMatrices& mat, const Eigen::VectorXd& v_star) {
    return 2.0 * v_star.array().square() / mat.rowsum_zzt.array();
}

StabilityReport check_criterion(
    const std::vector<std::pair<InverterConfig, OperatingPoint>>& inverters,
    const Eigen::VectorXd& eta_full) {
    StabilityReport report;
    for (const auto& [cfg, op] : inverters) {
        OperatingPoint clamped{op.p_bar, op.mu_clamped()};
        auto [cp, cq] = lipschitz_constants(cfg, clamped);
        StabilityEntry e;
        e.bus = cfg.bus;
        e.C_p = cp;
        e.C_q = cq;
        e.lhs = cp * cp + cq * cq;
        e.eta = eta_full(cfg.bus - 1);
        e.margin = e.eta - e.lhs;
        e.satisfied = e.lhs < e.eta;
        report.verdict = report.verdict && e.satisfied;
        report.entries.push_back(e);
    }
    return report;
}

double flicker(const std::vector<double>& history, double T_d, double dt) {
    const int steps = static_cast<int>(std::lround(T_d / dt));
    if (steps < 1) throw Error("flicker: T_d must span at least one step");
    if (static_cast<int>(history.size()) < steps + 1)
        throw InsufficientHistoryError("flicker needs " + std::to_string(steps + 1) +
                                       " samples, have " + std::to_string(history.size()));
    double sum = 0.0;
    const std::size_t last = history.size() - 1;
    for (int k = 0; k < steps; ++k) sum += std::abs(history[last - k] - history[last - k - 1]);
    return sum / T_d;
}

double estimate_v_star(const std::vector<double>& history, double T_d, double dt) {
    if (history.empty()) throw Error("estimate_v_star: empty history");
    const int want = static_cast<int>(std::lround(T_d / dt)) + 1;
    const int take = std::min<int>(want, static_cast<int>(history.size()));
    double sum = 0.0;
    for (int k = 0; k < take; ++k) sum += history[history.size() - 1 - k];
    return sum / take;
}

PolicyAdjustment stabilize(const InverterConfig& cfg, const OperatingPoint& op, double eta_i,
                           double eps, double v_star) {
    if (!(eta_i > eps && eps > 0.0))
        throw CannotStabilizeError("stabilize requires eta > eps > 0 (eta = " +
                                   std::to_string(eta_i) + ")");
    const double mu = op.mu_clamped();
    const double budget = eta_i - eps;

    PolicyAdjustment adj;
    adj.bus = cfg.bus;
    adj.eta_used = eta_i;
    adj.v_star_estimate = v_star;
    adj.eps_q_plus_new = 2.0 * cfg.vqp();
    adj.eps_p_closed_form = op.p_bar / std::sqrt((1.0 - mu * mu) * budget);

    // The closed form alone can leave the criterion violated (its bounding
    // step drops the q_lim cross terms); verify and widen until it holds.
    InverterConfig trial = cfg;
    trial.eps_q_plus = adj.eps_q_plus_new;
    double ep = adj.eps_p_closed_form;
    for (int k = 0; k <= 60; ++k) {
        trial.eps_p = ep;
        auto [cp, cq] = lipschitz_constants(trial, OperatingPoint{op.p_bar, mu});
        if (cp * cp + cq * cq <= budget) {
            adj.eps_p_new = ep;
            adj.post_check_passed = true;
            adj.widen_iterations = k;
            return adj;
        }
        ep *= 1.5;
    }
    throw CannotStabilizeError("60 widenings insufficient: eta - eps = " +
                               std::to_string(budget) + " too small for q_lim = " +
                               std::to_string(cfg.q_lim));
}

}  // namespace gridstab
