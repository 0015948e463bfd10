#include "gridstab/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "gridstab/errors.hpp"
#include "gridstab/rng.hpp"

namespace gridstab {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key()))
            throw Error("scenario schema: unknown field '" + it.key() + "' in " + where);
    }
}

double piecewise_linear(const std::vector<std::pair<double, double>>& pieces, double t) {
    if (pieces.empty()) return 1.0;
    if (t <= pieces.front().first) return pieces.front().second;
    if (t >= pieces.back().first) return pieces.back().second;
    for (std::size_t i = 1; i < pieces.size(); ++i) {
        if (t <= pieces[i].first) {
            const auto& [t0, v0] = pieces[i - 1];
            const auto& [t1, v1] = pieces[i];
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        }
    }
    return pieces.back().second;
}

// Build one multiplier series on the [0, horizon) grid from a profile spec.
Profile build_profile(const json& spec, double dt, double horizon, std::uint64_t seed,
                      const std::filesystem::path& base_dir, const std::string& where) {
    check_keys(spec,
               {"constant", "csv", "knots", "pieces", "jitter", "dips", "normalize", "window"},
               where);
    const auto count = static_cast<std::size_t>(std::llround(horizon / dt));

    Profile out;
    out.t0 = 0.0;
    out.dt = dt;

    if (spec.contains("csv") || spec.contains("knots")) {
        std::vector<std::pair<double, double>> knots;
        if (spec.contains("csv")) {
            knots = read_profile_csv((base_dir / spec.at("csv").get<std::string>()).string());
        } else {
            for (const auto& kv : spec.at("knots"))
                knots.emplace_back(kv.at(0).get<double>(), kv.at(1).get<double>());
        }
        Profile resampled = spline_resample(knots, dt);
        if (spec.value("normalize", false)) {
            double peak = 0.0;
            for (double v : resampled.values) peak = std::max(peak, v);
            if (peak > 0.0)
                for (double& v : resampled.values) v /= peak;
        }
        if (spec.contains("window")) {
            const auto& w = spec.at("window");
            check_keys(w, {"start", "end"}, where + ".window");
            resampled = slice_window(resampled, w.at("start").get<double>(),
                                     w.at("end").get<double>());
        }
        if (resampled.values.size() < count)
            throw Error("scenario: profile in " + where + " covers " +
                        std::to_string(resampled.duration()) + " s but horizon is " +
                        std::to_string(horizon) + " s");
        resampled.values.resize(count);
        resampled.t0 = 0.0;
        out = resampled;
    } else {
        std::vector<std::pair<double, double>> pieces;
        if (spec.contains("pieces")) {
            for (const auto& kv : spec.at("pieces"))
                pieces.emplace_back(kv.at(0).get<double>(), kv.at(1).get<double>());
        } else {
            pieces.emplace_back(0.0, spec.value("constant", 1.0));
        }
        out.values.resize(count);
        for (std::size_t k = 0; k < count; ++k)
            out.values[k] = piecewise_linear(pieces, static_cast<double>(k) * dt);
    }

    if (spec.contains("dips")) {
        const auto& d = spec.at("dips");
        check_keys(d, {"start", "end", "period", "width", "level"}, where + ".dips");
        const double start = d.at("start").get<double>();
        const double end = d.at("end").get<double>();
        const double period = d.at("period").get<double>();
        const double width = d.at("width").get<double>();
        const double level = d.at("level").get<double>();
        for (std::size_t k = 0; k < count; ++k) {
            const double t = static_cast<double>(k) * dt;
            if (t < start || t >= end) continue;
            if (std::fmod(t - start, period) < width) out.values[k] = level;
        }
    }
    if (spec.contains("jitter")) {
        const double amp = spec.at("jitter").get<double>();
        Rng rng(seed);
        for (double& v : out.values) v *= 1.0 + amp * (2.0 * rng.uniform() - 1.0);
    }
    for (double& v : out.values) v = std::max(v, 0.0);
    return out;
}

InverterConfig parse_inverter(const json& j) {
    check_keys(j,
               {"bus", "s_rated", "q_lim", "V_p", "eps_p", "V_q_plus", "V_q_minus", "eps_q_plus",
                "eps_q_minus", "T_p", "T_q", "v_T", "v_nom", "min_power_factor"},
               "inverters[]");
    InverterConfig c;
    c.bus = j.at("bus").get<int>();
    c.s_rated = j.at("s_rated").get<double>();
    c.q_lim = j.at("q_lim").get<double>();
    c.V_p = j.value("V_p", 1.035);
    c.eps_p = j.value("eps_p", 0.03);
    c.V_q_plus = j.value("V_q_plus", 1.035);
    c.V_q_minus = j.value("V_q_minus", 0.965);
    c.eps_q_plus = j.value("eps_q_plus", 0.03);
    c.eps_q_minus = j.value("eps_q_minus", 0.03);
    c.T_p = j.value("T_p", 25.0);
    c.T_q = j.value("T_q", 25.0);
    c.v_T = j.value("v_T", 0.01);
    c.v_nom = j.value("v_nom", 1.0);
    c.min_power_factor = j.value("min_power_factor", 0.2);
    return c;
}

std::uint64_t stream_seed(std::uint64_t seed, int bus, int kind) {
    // distinct deterministic stream per (seed, bus, kind)
    Rng mix(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(bus * 4 + kind + 1)));
    return mix.next_u64();
}

}  // namespace

Scenario load_scenario(const std::string& path, const RunOverrides& overrides) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error("scenario JSON parse error: " + std::string(e.what()));
    }
    check_keys(j,
               {"version", "name", "case_file", "v0", "dt", "horizon", "seed", "envelope_window",
                "stability_margin", "delay_sampling", "inverters", "load_profile",
                "load_profile_per_bus", "generation_profiles", "events"},
               "top level");
    if (j.value("version", 0) != 1) throw Error("scenario schema: expected version 1");

    const std::filesystem::path base_dir = std::filesystem::path(path).parent_path();

    Scenario sc;
    sc.dt = overrides.dt.value_or(j.value("dt", 1.0));
    sc.horizon = overrides.horizon.value_or(j.value("horizon", 3600.0));
    sc.seed = overrides.seed.value_or(j.value("seed", 0ULL));
    sc.envelope_window = overrides.envelope_window.value_or(j.value("envelope_window", 50.0));
    sc.stability_margin = overrides.stability_margin.value_or(j.value("stability_margin", 1e-6));
    if (overrides.case_mode) sc.case_mode = static_cast<CaseMode>(*overrides.case_mode);

    NetworkModel raw = parse_matpower_file((base_dir / j.at("case_file").get<std::string>()).string());
    raw.v0 = j.value("v0", 1.0);
    sc.network = normalize_orientation(raw);

    // original id -> internal index
    std::map<int, int> internal;
    for (int i = 0; i < sc.network.n_buses(); ++i) internal[sc.network.original_ids[i]] = i;
    auto to_internal = [&](int orig, const std::string& where) {
        auto it = internal.find(orig);
        if (it == internal.end())
            throw Error("scenario: unknown bus " + std::to_string(orig) + " in " + where);
        return it->second;
    };

    std::vector<int> original_inverter_bus;
    if (j.contains("inverters")) {
        for (const auto& ji : j.at("inverters")) {
            InverterConfig c = parse_inverter(ji);
            original_inverter_bus.push_back(c.bus);
            c.bus = to_internal(c.bus, "inverters");
            if (c.bus == 0) throw Error("scenario: inverter at the substation is not supported");
            sc.inverters.push_back(c);
        }
    }

    if (j.contains("delay_sampling")) {
        const auto& d = j.at("delay_sampling");
        check_keys(d, {"mean", "std", "min", "max"}, "delay_sampling");
        const double mean = d.value("mean", 5.0);
        const double std_ = d.value("std", 10.0);
        const double lo = d.value("min", 1.0);
        const double hi = d.value("max", 60.0);
        Rng rng(sc.seed);
        for (auto& c : sc.inverters) {
            double T = std::clamp(rng.normal(mean, std_), lo, hi);
            T = std::max(sc.dt, std::round(T / sc.dt) * sc.dt); // whole steps
            c.T_p = T;
            c.T_q = T;
        }
    }
    if (overrides.T_d) {
        for (auto& c : sc.inverters) {
            c.T_p = *overrides.T_d;
            c.T_q = *overrides.T_d;
        }
    }
    if (overrides.v_T) {
        for (auto& c : sc.inverters) c.v_T = *overrides.v_T;
    }
    for (const auto& c : sc.inverters) c.validate();

    sc.profiles.dt = sc.dt;
    if (j.contains("load_profile")) {
        for (int b = 1; b < sc.network.n_buses(); ++b) {
            sc.profiles.load[b] =
                build_profile(j.at("load_profile"), sc.dt, sc.horizon,
                              stream_seed(sc.seed, sc.network.original_ids[b], 0), base_dir,
                              "load_profile");
        }
    }
    if (j.contains("load_profile_per_bus")) {
        for (auto it = j.at("load_profile_per_bus").begin();
             it != j.at("load_profile_per_bus").end(); ++it) {
            const int orig = std::stoi(it.key());
            const int b = to_internal(orig, "load_profile_per_bus");
            sc.profiles.load[b] = build_profile(it.value(), sc.dt, sc.horizon,
                                                stream_seed(sc.seed, orig, 0), base_dir,
                                                "load_profile_per_bus");
        }
    }
    if (j.contains("generation_profiles")) {
        for (auto it = j.at("generation_profiles").begin(); it != j.at("generation_profiles").end();
             ++it) {
            const int orig = std::stoi(it.key());
            const int b = to_internal(orig, "generation_profiles");
            const bool has_inverter =
                std::find_if(sc.inverters.begin(), sc.inverters.end(),
                             [&](const InverterConfig& c) { return c.bus == b; }) !=
                sc.inverters.end();
            if (!has_inverter)
                throw NotAnInverterBusError("generation profile for bus " + std::to_string(orig) +
                                            " which hosts no inverter");
            sc.profiles.generation[b] = build_profile(it.value(), sc.dt, sc.horizon,
                                                      stream_seed(sc.seed, orig, 1), base_dir,
                                                      "generation_profiles");
        }
    }

    if (j.contains("events")) {
        for (const auto& je : j.at("events")) {
            check_keys(je, {"time", "bus", "overrides", "disable_policy"}, "events[]");
            ScenarioEvent ev;
            ev.time = je.at("time").get<double>();
            if (ev.time < 0.0 || ev.time > sc.horizon)
                throw Error("scenario: event time outside horizon");
            ev.bus = to_internal(je.at("bus").get<int>(), "events");
            const bool hosts =
                std::find_if(sc.inverters.begin(), sc.inverters.end(),
                             [&](const InverterConfig& c) { return c.bus == ev.bus; }) !=
                sc.inverters.end();
            if (!hosts)
                throw NotAnInverterBusError("event bus " + std::to_string(je.at("bus").get<int>()) +
                                            " hosts no inverter");
            if (je.contains("overrides")) {
                static const std::set<std::string> known = {
                    "V_p", "eps_p", "V_q_plus", "V_q_minus", "eps_q_plus",
                    "eps_q_minus", "q_lim", "v_T", "T_p", "T_q"};
                for (auto it = je.at("overrides").begin(); it != je.at("overrides").end(); ++it) {
                    if (!known.count(it.key()))
                        throw UnknownParameterError("unknown droop parameter '" + it.key() +
                                                    "' in event overrides");
                    ev.overrides[it.key()] = it.value().get<double>();
                }
            }
            if (je.contains("disable_policy")) ev.disable_policy = je.at("disable_policy").get<bool>();
            sc.events.push_back(ev);
        }
    }
    return sc;
}

void write_timeseries_csv(const std::string& path, const TimeSeries& series,
                          const NetworkModel& network) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Error("cannot open output csv: " + path);

    const int m = network.n_branches();
    std::fputs("t", f);
    for (int b = 1; b <= m; ++b) std::fprintf(f, ",v_bus_%d", network.original_ids[b]);
    for (int b : series.inverter_buses) {
        const int orig = network.original_ids[b];
        std::fprintf(f, ",p_inv_%d,q_inv_%d,epsp_inv_%d,flicker_inv_%d,policy_inv_%d", orig, orig,
                     orig, orig, orig);
    }
    std::fputs(",P_sub,Q_sub\n", f);

    for (const auto& rec : series.records) {
        std::fprintf(f, "%.10g", rec.t);
        for (int b = 0; b < m; ++b) std::fprintf(f, ",%.10g", rec.v(b));
        for (std::size_t i = 0; i < series.inverter_buses.size(); ++i) {
            std::fprintf(f, ",%.10g,%.10g,%.10g,%.10g,%d", rec.p_g[i], rec.q_g[i], rec.eps_p[i],
                         rec.flicker[i], static_cast<int>(rec.policy_fired[i]));
        }
        std::fprintf(f, ",%.10g,%.10g\n", rec.P_sub, rec.Q_sub);
    }
    std::fclose(f);
}

std::string summary_json(const Scenario& scenario, const TimeSeries& series,
                         const EnvelopeStats& env) {
    using nlohmann::json;
    json j;
    j["case_mode"] = static_cast<int>(scenario.case_mode);
    j["seed"] = scenario.seed;
    j["dt"] = scenario.dt;
    j["horizon"] = scenario.horizon;
    j["steps"] = series.records.size();

    json firings = json::array();
    for (const auto& f : series.firings) {
        firings.push_back({{"t", f.t},
                           {"bus", scenario.network.original_ids[f.bus]},
                           {"eps_p_new", f.adjustment.eps_p_new},
                           {"eps_q_plus_new", f.adjustment.eps_q_plus_new},
                           {"eta_used", f.adjustment.eta_used},
                           {"v_star_estimate", f.adjustment.v_star_estimate},
                           {"widen_iterations", f.adjustment.widen_iterations},
                           {"post_check_passed", f.adjustment.post_check_passed},
                           {"applied", f.applied}});
    }
    j["policy_firings"] = firings;

    json flick = json::object();
    json sustained = json::object();
    json maxfl = json::object();
    bool any_sustained = false;
    for (std::size_t i = 0; i < series.inverter_buses.size(); ++i) {
        const int orig = scenario.network.original_ids[series.inverter_buses[i]];
        const std::string key = std::to_string(orig);
        flick[key] = series.records.empty() ? 0.0 : series.records.back().flicker[i];
        double vt = 0.01;
        for (const auto& c : scenario.inverters)
            if (c.bus == series.inverter_buses[i]) vt = c.v_T;
        const double run =
            longest_flicker_exceedance(series, static_cast<int>(i), vt, scenario.dt);
        double mx = 0.0;
        for (const auto& rec : series.records) mx = std::max(mx, rec.flicker[i]);
        maxfl[key] = mx;
        sustained[key] = run >= 60.0;
        any_sustained = any_sustained || run >= 60.0;
    }
    j["final_flicker"] = flick;
    j["max_flicker"] = maxfl;
    j["sustained_oscillation_per_bus"] = sustained;
    j["sustained_oscillation"] = any_sustained;

    bool diverged = false;
    for (const auto& rec : series.records) diverged = diverged || rec.diverged;
    j["diverged"] = diverged;

    json per_bus = json::array();
    for (Eigen::Index b = 0; b < env.spread_mean.size(); ++b) {
        per_bus.push_back({{"bus", scenario.network.original_ids[b + 1]},
                           {"spread_mean", env.spread_mean(b)},
                           {"var_upper", env.var_upper(b)},
                           {"var_lower", env.var_lower(b)}});
    }
    j["envelope"] = {{"window", scenario.envelope_window}, {"per_bus", per_bus}};
    return j.dump(2);
}

void write_summary_json(const std::string& path, const Scenario& scenario,
                        const TimeSeries& series, const EnvelopeStats& env) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open output json: " + path);
    out << summary_json(scenario, series, env) << "\n";
}

}  // namespace gridstab
