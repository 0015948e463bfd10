#include "gridstab/powerflow.hpp"

#include <cmath>

#include "gridstab/errors.hpp"

namespace gridstab {

namespace {

Eigen::VectorXd safeSqrt(const Eigen::VectorXd& v2, bool& flagged) {
    Eigen::VectorXd v(v2.size());
    for (Eigen::Index i = 0; i < v2.size(); ++i) {
        if (v2(i) <= 0.0) {
            flagged = true;
            v(i) = 0.0;
        } else {
            v(i) = std::sqrt(v2(i));
        }
    }
    return v;
}

// children[b] = buses fed from b; branch k feeds bus k+1 (normalized)
std::vector<std::vector<int>> childTable(const NetworkModel& net) {
    std::vector<std::vector<int>> children(net.n_buses());
    for (int e = 0; e < net.n_branches(); ++e)
        children[net.branches[e].from_bus].push_back(net.branches[e].to_bus);
    return children;
}

}  // namespace

FlowSolution solve_linear(const SensitivityMatrices& mat, const NetworkModel& network,
                          const InjectionVector& inj, double v0) {
    const int m = network.n_branches();
    FlowSolution sol;
    sol.v2 = Eigen::VectorXd::Constant(m, v0 * v0) + mat.R * (inj.p_c - inj.p_g) +
             mat.X * (inj.q_c - inj.q_g);
    sol.v = safeSqrt(sol.v2, sol.negative_v2);
    sol.c2 = Eigen::VectorXd::Zero(m);

    // lossless flow accumulation, leaves first (children have larger index)
    sol.P = Eigen::VectorXd::Zero(m);
    sol.Q = Eigen::VectorXd::Zero(m);
    auto children = childTable(network);
    for (int b = network.n_buses() - 1; b >= 1; --b) {
        const int e = b - 1;
        sol.P(e) = inj.p_c(e) - inj.p_g(e);
        sol.Q(e) = inj.q_c(e) - inj.q_g(e);
        for (int c : children[b]) {
            sol.P(e) += sol.P(c - 1);
            sol.Q(e) += sol.Q(c - 1);
        }
    }
    sol.iterations = 1;
    return sol;
}

FlowSolution solve_nonlinear_sweep(const NetworkModel& network, const InjectionVector& inj,
                                   double v0, double tol, int max_iter) {
    if (tol <= 0.0) throw Error("solve_nonlinear_sweep: tol must be positive");
    const int n = network.n_buses();
    const int m = n - 1;
    auto children = childTable(network);

    Eigen::VectorXd v2 = Eigen::VectorXd::Constant(n, v0 * v0); // includes substation at 0
    Eigen::VectorXd c2 = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd P = Eigen::VectorXd::Zero(m), Q = Eigen::VectorXd::Zero(m);

    for (int it = 1; it <= max_iter; ++it) {
        // backward: accumulate sending-end flows with current c2
        for (int b = n - 1; b >= 1; --b) {
            const int e = b - 1;
            P(e) = inj.p_c(e) - inj.p_g(e) + network.branches[e].r * c2(e);
            Q(e) = inj.q_c(e) - inj.q_g(e) + network.branches[e].x * c2(e);
            for (int c : children[b]) {
                P(e) += P(c - 1);
                Q(e) += Q(c - 1);
            }
        }
        // forward: propagate squared voltages from the root
        double delta = 0.0;
        for (int b = 1; b < n; ++b) {
            const int e = b - 1;
            const Branch& br = network.branches[e];
            double next = v2(br.from_bus) - 2.0 * (br.r * P(e) + br.x * Q(e)) +
                          (br.r * br.r + br.x * br.x) * c2(e);
            delta = std::max(delta, std::abs(next - v2(b)));
            v2(b) = next;
        }
        if (!(v2.minCoeff() > 0.0) || !v2.allFinite())
            throw NonConvergenceError("sweep produced non-positive squared voltage: "
                                      "operating point infeasible",
                                      it);
        // squared current from the sending-end voltage
        for (int e = 0; e < m; ++e)
            c2(e) = (P(e) * P(e) + Q(e) * Q(e)) / v2(network.branches[e].from_bus);

        if (delta <= tol) {
            FlowSolution sol;
            sol.v2 = v2.tail(m);
            sol.v = sol.v2.array().sqrt();
            sol.P = P;
            sol.Q = Q;
            sol.c2 = c2;
            sol.iterations = it;
            return sol;
        }
    }
    throw NonConvergenceError("backward/forward sweep did not converge", max_iter);
}

Eigen::VectorXd loss_term(const SensitivityMatrices& mat, const Eigen::VectorXd& c2) {
    return mat.L * c2;
}

}  // namespace gridstab
