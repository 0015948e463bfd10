#pragma once

#include <Eigen/Dense>
#include <vector>

namespace gridstab {

struct Bus {
    int id = 0;          // contiguous internal index after normalization
    double p_load = 0.0; // per-unit real power demand
    double q_load = 0.0; // per-unit reactive power demand
};

struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0; // per-unit resistance
    double x = 0.0; // per-unit reactance
};

/// Radial feeder: buses, branches, base quantities.
///
/// After normalize_orientation() the substation is index 0, every branch
/// points parent -> child in BFS order, and branch i feeds bus i+1.
/// `original_ids` maps internal index -> id from the source file.
struct NetworkModel {
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    double base_mva = 100.0;
    int substation_id = 0;
    double v0 = 1.0; // per-unit substation voltage magnitude
    std::vector<int> original_ids;
    bool normalized = false;

    int n_buses() const { return static_cast<int>(buses.size()); }
    int n_branches() const { return static_cast<int>(branches.size()); }
};

/// Incidence and voltage-sensitivity matrices of the linearized branch flow.
///
/// T, F, M0 are branch x bus; M, R, X, L are reduced (n-1) x (n-1);
/// Z = [R X]; rowsum_zzt[i] is the i-th row sum of Z*Z^T.
struct SensitivityMatrices {
    Eigen::MatrixXd T;  // to-matrix, branch x bus
    Eigen::MatrixXd F;  // from-matrix, branch x bus
    Eigen::MatrixXd M0; // incidence F - T, branch x bus
    Eigen::MatrixXd M;  // M0 with the substation column removed
    Eigen::MatrixXd R;
    Eigen::MatrixXd X;
    Eigen::MatrixXd L;
    Eigen::MatrixXd Z;
    Eigen::VectorXd rowsum_zzt;
};

/// Reorient every branch parent->child from the substation and re-index
/// buses so the substation is 0 and bus k+1 is fed by branch k (BFS order,
/// neighbours visited in ascending original id). Idempotent.
///
/// Throws NoSubstationError, NotRadialError, NotConnectedError.
NetworkModel normalize_orientation(const NetworkModel& network);

/// Build T, F, M0 and the reduced M for a normalized network.
void build_incidence(const NetworkModel& network, SensitivityMatrices& out);

/// Build the full sensitivity set (R, X, L, Z, row sums of ZZ^T).
/// Throws SingularMatrixError if the incidence factorization fails.
SensitivityMatrices build_sensitivity(const NetworkModel& network);

/// Sum of r and x over branches shared by the root->i and root->j paths.
/// i, j are internal non-substation bus indices. Throws UnknownBusError.
std::pair<double, double> common_path_impedance(const NetworkModel& network, int i, int j);

}  // namespace gridstab
