#pragma once

#include <string>

#include "gridstab/simulator.hpp"

namespace gridstab {

/// Overrides taken from the command line; unset fields keep scenario values.
struct RunOverrides {
    std::optional<double> dt;
    std::optional<double> horizon;
    std::optional<double> T_d;  // rewrites every inverter's T_p and T_q
    std::optional<double> v_T;
    std::optional<double> stability_margin;
    std::optional<double> envelope_window;
    std::optional<std::uint64_t> seed;
    std::optional<int> case_mode;
};

/// Load a versioned scenario JSON file (schema v1, unknown fields rejected),
/// resolve the referenced case file, build profiles (synthetic pieces, CSV
/// references or inline knots), sample heterogeneous delays when requested,
/// and remap all bus ids to internal indices.
///
/// `base_dir` resolves relative paths inside the scenario file.
Scenario load_scenario(const std::string& path, const RunOverrides& overrides);

/// One row per step: t, v_bus_*, p_inv_*, q_inv_*, epsp_inv_*,
/// flicker_inv_*, policy_inv_*, P_sub, Q_sub. Bus/inverter columns are
/// labelled with original bus ids.
void write_timeseries_csv(const std::string& path, const TimeSeries& series,
                          const NetworkModel& network);

/// Run summary: firings, final flicker, per-bus envelope statistics,
/// sustained-oscillation flags, divergence flag.
void write_summary_json(const std::string& path, const Scenario& scenario,
                        const TimeSeries& series, const EnvelopeStats& env);

std::string summary_json(const Scenario& scenario, const TimeSeries& series,
                         const EnvelopeStats& env);

}  // namespace gridstab
