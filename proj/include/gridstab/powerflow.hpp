#pragma once

#include <Eigen/Dense>

#include "gridstab/netmodel.hpp"

namespace gridstab {

/// Per-unit injections over the non-substation buses (length n-1 each).
/// p_g/q_g are zero at buses without an inverter.
struct InjectionVector {
    Eigen::VectorXd p_c, q_c, p_g, q_g;

    static InjectionVector zeros(int m) {
        InjectionVector v;
        v.p_c = Eigen::VectorXd::Zero(m);
        v.q_c = Eigen::VectorXd::Zero(m);
        v.p_g = Eigen::VectorXd::Zero(m);
        v.q_g = Eigen::VectorXd::Zero(m);
        return v;
    }
    Eigen::VectorXd s_c() const {
        Eigen::VectorXd s(p_c.size() + q_c.size());
        s << p_c, q_c;
        return s;
    }
    Eigen::VectorXd s_g() const {
        Eigen::VectorXd s(p_g.size() + q_g.size());
        s << p_g, q_g;
        return s;
    }
};

struct FlowSolution {
    Eigen::VectorXd v2; // squared voltage magnitudes, non-substation buses
    Eigen::VectorXd v;  // element-wise sqrt of max(v2, 0)
    Eigen::VectorXd P;  // sending-end branch real flows
    Eigen::VectorXd Q;  // sending-end branch reactive flows
    Eigen::VectorXd c2; // squared branch currents (nonlinear solve only)
    bool negative_v2 = false; // v2 <= 0 somewhere: operating point far outside
                              // linearization validity; flagged, not fatal
    int iterations = 0;
};

/// Lossless linearized solve: v2 = v0^2*1 + Z*s_c - Z*s_g.
/// Branch flows are the c^2 = 0 accumulation down the tree.
FlowSolution solve_linear(const SensitivityMatrices& mat, const NetworkModel& network,
                          const InjectionVector& inj, double v0);

/// Exact DistFlow via backward/forward sweep, loss terms included.
/// Converges when max |delta v^2| <= tol; throws NonConvergenceError after
/// max_iter sweeps.
FlowSolution solve_nonlinear_sweep(const NetworkModel& network, const InjectionVector& inj,
                                   double v0, double tol = 1e-10, int max_iter = 200);

/// L*c2: the exact voltage correction dropped by the linearization.
Eigen::VectorXd loss_term(const SensitivityMatrices& mat, const Eigen::VectorXd& c2);

}  // namespace gridstab
