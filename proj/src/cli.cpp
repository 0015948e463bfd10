#include "gridstab/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gridstab/errors.hpp"
#include "gridstab/powerflow.hpp"
#include "gridstab/stability.hpp"

namespace gridstab {

namespace {

int log_level() {
    const char* env = std::getenv("GRIDSTAB_LOG");
    if (!env) return 1;
    const std::string v(env);
    if (v == "quiet" || v == "0") return 0;
    if (v == "debug" || v == "2") return 2;
    return 1;
}

}  // namespace

int cmd_validate(const std::string& case_path, std::ostream& out, std::ostream& err) {
    try {
        NetworkModel raw = parse_matpower_file(case_path);
        NetworkModel net = normalize_orientation(raw);
        double p = 0.0, q = 0.0;
        for (const auto& b : net.buses) {
            p += b.p_load;
            q += b.q_load;
        }
        out << net.n_buses() << " buses, " << net.n_branches() << " branches, radial: yes\n";
        out << "total load: " << p * net.base_mva << " MW, " << q * net.base_mva << " MVar\n";
        return kOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
}

int cmd_analyze(const std::string& case_path, const std::string& inverters_path,
                const std::string& v_star_mode, std::ostream& out, std::ostream& err) {
    try {
        NetworkModel net = normalize_orientation(parse_matpower_file(case_path));
        SensitivityMatrices mat = build_sensitivity(net);
        const int m = net.n_branches();

        std::map<int, int> internal;
        for (int i = 0; i < net.n_buses(); ++i) internal[net.original_ids[i]] = i;

        std::vector<std::pair<InverterConfig, OperatingPoint>> inverters;
        if (!inverters_path.empty()) {
            std::ifstream in(inverters_path);
            if (!in) throw Error("cannot open inverters file: " + inverters_path);
            nlohmann::json j = nlohmann::json::parse(in);
            for (const auto& ji : j) {
                InverterConfig c;
                c.bus = ji.at("bus").get<int>();
                c.s_rated = ji.at("s_rated").get<double>();
                c.q_lim = ji.at("q_lim").get<double>();
                c.V_p = ji.value("V_p", 1.035);
                c.eps_p = ji.value("eps_p", 0.03);
                c.V_q_plus = ji.value("V_q_plus", 1.035);
                c.V_q_minus = ji.value("V_q_minus", 0.965);
                c.eps_q_plus = ji.value("eps_q_plus", 0.03);
                c.eps_q_minus = ji.value("eps_q_minus", 0.03);
                c.T_p = ji.value("T_p", 25.0);
                c.T_q = ji.value("T_q", 25.0);
                c.v_T = ji.value("v_T", 0.01);
                c.v_nom = ji.value("v_nom", 1.0);
                c.min_power_factor = ji.value("min_power_factor", 0.2);
                const double mu = ji.value("mu", 1.0);
                auto it = internal.find(c.bus);
                if (it == internal.end())
                    throw Error("inverter bus " + std::to_string(c.bus) + " not in case");
                c.bus = it->second;
                c.validate();
                inverters.push_back({c, OperatingPoint::from_mu(mu, c.s_rated)});
            }
        }

        InjectionVector loads = InjectionVector::zeros(m);
        for (int b = 1; b <= m; ++b) {
            loads.p_c(b - 1) = net.buses[b].p_load;
            loads.q_c(b - 1) = net.buses[b].q_load;
        }

        Eigen::VectorXd v_star;
        if (v_star_mode == "flat") {
            v_star = Eigen::VectorXd::Ones(m);
        } else if (v_star_mode == "loadflow") {
            v_star = solve_linear(mat, net, loads, net.v0).v;
        } else if (v_star_mode == "fixedpoint") {
            FixedPoint fp = find_fixed_point(net, mat, inverters, loads, net.v0);
            if (!fp.converged) {
                err << "error: fixed-point iteration did not converge "
                    << "(dynamics likely unstable)\n";
                return kNumericalError;
            }
            v_star = fp.v_star;
        } else {
            throw Error("unknown --v-star mode '" + v_star_mode + "'");
        }

        Eigen::VectorXd etas = eta(mat, v_star);
        StabilityReport report = check_criterion(inverters, etas);

        nlohmann::json j;
        j["v_star_mode"] = v_star_mode;
        j["verdict"] = report.verdict;
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : report.entries) {
            entries.push_back({{"bus", net.original_ids[e.bus]},
                               {"C_p", e.C_p},
                               {"C_q", e.C_q},
                               {"lhs", e.lhs},
                               {"eta", e.eta},
                               {"margin", e.margin},
                               {"satisfied", e.satisfied}});
        }
        j["inverters"] = entries;
        out << j.dump(2) << "\n";
        return kOk;
    } catch (const NonConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return kNumericalError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
}

int cmd_simulate(const std::string& scenario_path, const RunOverrides& overrides,
                 const std::string& out_dir, std::ostream& out, std::ostream& err) {
    try {
        Scenario sc = load_scenario(scenario_path, overrides);
        SensitivityMatrices mat = build_sensitivity(sc.network);
        TimeSeries ts = run(sc, mat);
        EnvelopeStats env = envelope_stats(ts, sc.envelope_window, sc.dt);

        std::filesystem::create_directories(out_dir);
        const auto dir = std::filesystem::path(out_dir);
        write_timeseries_csv((dir / "timeseries.csv").string(), ts, sc.network);
        write_summary_json((dir / "summary.json").string(), sc, ts, env);

        if (log_level() >= 1) {
            out << "simulated " << ts.records.size() << " steps (case-mode "
                << static_cast<int>(sc.case_mode) << ", seed " << sc.seed << ")\n";
            out << "policy firings: " << ts.firings.size() << "\n";
            out << "wrote " << (dir / "timeseries.csv").string() << " and "
                << (dir / "summary.json").string() << "\n";
        }
        return kOk;
    } catch (const NonConvergenceError& e) {
        err << "error: " << e.what() << "\n";
        return kNumericalError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
}

}  // namespace gridstab
