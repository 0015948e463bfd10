#include "gridstab/netmodel.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "gridstab/errors.hpp"

namespace gridstab {

NetworkModel normalize_orientation(const NetworkModel& network) {
    const int n = network.n_buses();
    if (n == 0) throw NoSubstationError("empty network");

    std::map<int, int> pos; // bus id -> position in input vector
    for (int i = 0; i < n; ++i) {
        if (!pos.emplace(network.buses[i].id, i).second)
            throw NotRadialError("duplicate bus id " + std::to_string(network.buses[i].id));
    }
    if (pos.find(network.substation_id) == pos.end())
        throw NoSubstationError("substation bus " + std::to_string(network.substation_id) +
                                " not present");
    if (network.n_branches() != n - 1)
        throw NotRadialError("radial network requires |branches| = |buses|-1, got " +
                             std::to_string(network.n_branches()) + " branches for " +
                             std::to_string(n) + " buses");
    if (network.v0 <= 0.0) throw NotRadialError("v0 must be positive");

    // adjacency on bus ids
    std::map<int, std::vector<std::pair<int, int>>> adj; // id -> (neighbour id, branch idx)
    for (int k = 0; k < network.n_branches(); ++k) {
        const Branch& b = network.branches[k];
        if (pos.find(b.from_bus) == pos.end() || pos.find(b.to_bus) == pos.end())
            throw UnknownBusError("branch references unknown bus");
        if (b.r < 0.0 || b.x < 0.0) throw NotRadialError("negative branch impedance");
        adj[b.from_bus].push_back({b.to_bus, k});
        adj[b.to_bus].push_back({b.from_bus, k});
    }
    for (auto& [id, v] : adj) std::sort(v.begin(), v.end());

    // BFS from the substation; discovery order fixes the internal index.
    std::vector<int> order;
    std::map<int, int> parent_branch; // bus id -> branch idx feeding it
    std::map<int, int> parent_id;
    std::set<int> seen{network.substation_id};
    std::deque<int> queue{network.substation_id};
    order.push_back(network.substation_id);
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        for (auto [v, k] : adj[u]) {
            if (seen.insert(v).second) {
                parent_branch[v] = k;
                parent_id[v] = u;
                order.push_back(v);
                queue.push_back(v);
            }
        }
    }
    if (static_cast<int>(order.size()) != n)
        throw NotConnectedError("network is not connected: reached " +
                                std::to_string(order.size()) + " of " + std::to_string(n) +
                                " buses");

    std::map<int, int> internal; // original id -> internal index
    for (int i = 0; i < n; ++i) internal[order[i]] = i;

    NetworkModel out;
    out.base_mva = network.base_mva;
    out.v0 = network.v0;
    out.substation_id = 0;
    out.normalized = true;
    out.buses.resize(n);
    out.original_ids.resize(n);
    for (int i = 0; i < n; ++i) {
        const Bus& src = network.buses[pos[order[i]]];
        out.buses[i] = Bus{i, src.p_load, src.q_load};
        out.original_ids[i] = network.normalized && !network.original_ids.empty()
                                  ? network.original_ids[pos[order[i]]]
                                  : order[i];
    }
    out.branches.resize(n - 1);
    for (int i = 1; i < n; ++i) {
        const Branch& src = network.branches[parent_branch[order[i]]];
        out.branches[i - 1] = Branch{internal[parent_id[order[i]]], i, src.r, src.x};
    }
    return out;
}

void build_incidence(const NetworkModel& network, SensitivityMatrices& out) {
    const int n = network.n_buses();
    const int m = n - 1;
    out.T = Eigen::MatrixXd::Zero(m, n);
    out.F = Eigen::MatrixXd::Zero(m, n);
    for (int e = 0; e < m; ++e) {
        out.T(e, network.branches[e].to_bus) = 1.0;
        out.F(e, network.branches[e].from_bus) = 1.0;
    }
    out.M0 = out.F - out.T;
    out.M = out.M0.rightCols(m);
}

SensitivityMatrices build_sensitivity(const NetworkModel& network) {
    const int m = network.n_branches();
    SensitivityMatrices s;
    build_incidence(network, s);

    Eigen::VectorXd r(m), x(m);
    for (int e = 0; e < m; ++e) {
        r(e) = network.branches[e].r;
        x(e) = network.branches[e].x;
    }

    // Root-outward orientation zeroes the substation column of T; the
    // reduced T keeps the dimensions of Eq-style R = 2 M^-1 diag(r) (I-TF^T)^-1 T.
    Eigen::MatrixXd Tred = s.T.rightCols(m);
    Eigen::MatrixXd ITFt = Eigen::MatrixXd::Identity(m, m) - s.T * s.F.transpose();

    Eigen::PartialPivLU<Eigen::MatrixXd> luM(s.M);
    Eigen::PartialPivLU<Eigen::MatrixXd> luI(ITFt);
    const double detM = std::abs(luM.determinant());
    const double detI = std::abs(luI.determinant());
    if (detM < 1e-12 || detI < 1e-12 || !std::isfinite(detM) || !std::isfinite(detI))
        throw SingularMatrixError("incidence matrix singular: network is not radial");

    Eigen::MatrixXd inner = luI.solve(Tred);
    s.R = 2.0 * luM.solve(r.asDiagonal() * inner);
    s.X = 2.0 * luM.solve(x.asDiagonal() * inner);

    Eigen::MatrixXd lossCore =
        2.0 * (r.asDiagonal() * luI.solve(Eigen::MatrixXd(r.asDiagonal()))) +
        2.0 * (x.asDiagonal() * luI.solve(Eigen::MatrixXd(x.asDiagonal())));
    lossCore -= Eigen::MatrixXd((r.array().square() + x.array().square()).matrix().asDiagonal());
    s.L = luM.solve(lossCore);

    s.Z.resize(m, 2 * m);
    s.Z << s.R, s.X;
    s.rowsum_zzt = (s.Z * s.Z.transpose()).rowwise().sum();
    return s;
}

std::pair<double, double> common_path_impedance(const NetworkModel& network, int i, int j) {
    const int n = network.n_buses();
    if (i <= 0 || i >= n || j <= 0 || j >= n)
        throw UnknownBusError("common_path_impedance: bus index out of range");

    // branch k feeds bus k+1; walk both buses up to equal depth, then in lockstep
    auto parent = [&](int b) { return network.branches[b - 1].from_bus; };
    std::vector<char> onPathI(n, 0);
    for (int b = i; b != 0; b = parent(b)) onPathI[b] = 1;
    double rs = 0.0, xs = 0.0;
    for (int b = j; b != 0; b = parent(b)) {
        if (onPathI[b]) {
            // b and everything above it is shared
            for (int c = b; c != 0; c = parent(c)) {
                rs += network.branches[c - 1].r;
                xs += network.branches[c - 1].x;
            }
            break;
        }
    }
    return {rs, xs};
}

}  // namespace gridstab
