#pragma once

#include <istream>
#include <map>
#include <string>
#include <vector>

#include "gridstab/netmodel.hpp"

namespace gridstab {

/// Uniformly sampled multiplier series starting at t0 with step dt.
struct Profile {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<double> values;

    double duration() const { return dt * static_cast<double>(values.size()); }
    /// Value at time t, which must land on the grid within [t0, t0 + duration).
    double at(double t) const;
};

/// Load multipliers per bus and generation multipliers per inverter bus.
struct ProfileSet {
    std::map<int, Profile> load;       // bus id -> series
    std::map<int, Profile> generation; // bus id -> series
    double dt = 1.0;
};

/// Parse the MATPOWER subset: mpc.baseMVA, mpc.bus (BUS_I, type, PD, QD,
/// baseKV), mpc.branch (F_BUS, T_BUS, BR_R, BR_X). Loads are converted to
/// per-unit on baseMVA; the type-3 bus becomes the substation; radiality is
/// validated. Comment lines beginning '%' are skipped (trailing comments
/// stripped). The returned model is NOT normalized.
///
/// Throws SyntaxError, MissingSectionError, MultipleSlackBusesError,
/// NoSubstationError, NonRadialCaseError (all carrying a line number).
NetworkModel parse_matpower(std::istream& text);
NetworkModel parse_matpower_file(const std::string& path);

/// Natural cubic spline through (t, value) knots evaluated on the half-open
/// grid [t_first, t_last) with step dt; outputs clamped at >= 0.
/// Throws DegenerateKnotsError for < 2 knots or non-increasing t.
Profile spline_resample(const std::vector<std::pair<double, double>>& knots, double dt);

/// Divide each series by its own maximum (peak becomes 1); all-zero series
/// pass through unchanged. Idempotent.
ProfileSet normalize_profiles(const ProfileSet& raw);

/// Sub-series on [start, end), re-based to t = 0.
/// Throws OutOfRangeError if the window is empty or not covered.
Profile slice_window(const Profile& p, double start, double end);
ProfileSet slice_window(const ProfileSet& profiles, double start, double end);

/// Profile CSV: header "t,value", decimal-point numbers, one pair per line.
std::vector<std::pair<double, double>> read_profile_csv(const std::string& path);

/// Internal network JSON form; parse-serialize round-trips are identity.
std::string network_to_json(const NetworkModel& network);
NetworkModel network_from_json(const std::string& json_text);

}  // namespace gridstab
