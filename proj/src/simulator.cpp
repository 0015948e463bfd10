#include "gridstab/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "gridstab/errors.hpp"

namespace gridstab {

namespace {

// droop dispatch targets with the power-factor cap applied
std::pair<double, double> dispatch_targets(const InverterConfig& cfg, const OperatingPoint& op,
                                           double dv) {
    const double p = volt_watt(cfg, op, dv);
    const double q = apply_power_factor_cap(cfg, p, volt_var(cfg, op, dv));
    return {p, q};
}

FlowSolution solve_with_state(const SimulationState& state, const SensitivityMatrices& mat,
                              const NetworkModel& network, const InjectionVector& loads) {
    const int m = network.n_branches();
    InjectionVector inj = loads;
    inj.p_g = state.s_g.head(m);
    inj.q_g = state.s_g.tail(m);
    return solve_linear(mat, network, inj, network.v0);
}

void record_solution(const NetworkModel& network, const FlowSolution& sol, StepRecord& rec) {
    rec.v = sol.v;
    rec.diverged = sol.negative_v2;
    rec.P_sub = 0.0;
    rec.Q_sub = 0.0;
    for (int e = 0; e < network.n_branches(); ++e) {
        if (network.branches[e].from_bus == 0) {
            rec.P_sub += sol.P(e);
            rec.Q_sub += sol.Q(e);
        }
    }
}

void append_history(SimulationState& state, const FlowSolution& sol, std::size_t cap) {
    for (std::size_t i = 0; i < state.live.size(); ++i) {
        auto& h = state.history[i];
        h.push_back(sol.v(state.live[i].bus - 1));
        if (cap > 0 && h.size() > cap) h.erase(h.begin());
    }
}

// first-order exponential filter toward the droop targets; the record keeps
// the injections that produced this step's voltages
void dispatch_update(SimulationState& state, const std::vector<OperatingPoint>& ops,
                     const FlowSolution& sol, int m, double dt, StepRecord& rec) {
    for (std::size_t i = 0; i < state.live.size(); ++i) {
        const InverterConfig& cfg = state.live[i];
        rec.p_g[i] = state.s_g(cfg.bus - 1);
        rec.q_g[i] = state.s_g(m + cfg.bus - 1);
        rec.eps_p[i] = cfg.eps_p;
        rec.eps_q_plus[i] = cfg.eps_q_plus;
        const double dv = sol.v(cfg.bus - 1) - cfg.v_nom;
        auto [pt, qt] = dispatch_targets(cfg, ops[i], dv);
        const double ap = 1.0 - std::exp(-dt / cfg.T_p);
        const double aq = 1.0 - std::exp(-dt / cfg.T_q);
        state.s_g(cfg.bus - 1) += ap * (pt - state.s_g(cfg.bus - 1));
        state.s_g(m + cfg.bus - 1) += aq * (qt - state.s_g(m + cfg.bus - 1));
    }
}

void size_record(StepRecord& rec, std::size_t n_inv) {
    rec.p_g.assign(n_inv, 0.0);
    rec.q_g.assign(n_inv, 0.0);
    rec.eps_p.assign(n_inv, 0.0);
    rec.eps_q_plus.assign(n_inv, 0.0);
    rec.flicker.assign(n_inv, 0.0);
    rec.policy_fired.assign(n_inv, 0);
}

}  // namespace

FixedPoint find_fixed_point(const NetworkModel& network, const SensitivityMatrices& mat,
                            const std::vector<std::pair<InverterConfig, OperatingPoint>>& inverters,
                            const InjectionVector& loads, double v0, double tol, int max_iter,
                            double gamma) {
    const int m = network.n_branches();
    const Eigen::VectorXd vbar2 =
        Eigen::VectorXd::Constant(m, v0 * v0) + mat.R * loads.p_c + mat.X * loads.q_c;

    FixedPoint fp;
    fp.s_star = Eigen::VectorXd::Zero(2 * m);
    Eigen::VectorXd v2(m);
    for (int it = 1; it <= max_iter; ++it) {
        v2 = vbar2 - mat.Z * fp.s_star;
        Eigen::VectorXd target = Eigen::VectorXd::Zero(2 * m);
        for (const auto& [cfg, op] : inverters) {
            const double vb = std::sqrt(std::max(v2(cfg.bus - 1), 0.0));
            auto [p, q] = dispatch_targets(cfg, op, vb - cfg.v_nom);
            target(cfg.bus - 1) = p;
            target(m + cfg.bus - 1) = q;
        }
        const Eigen::VectorXd next = (1.0 - gamma) * fp.s_star + gamma * target;
        const double delta = (next - fp.s_star).cwiseAbs().maxCoeff();
        fp.s_star = next;
        fp.iterations = it;
        if (delta <= tol) {
            fp.converged = true;
            break;
        }
    }
    v2 = vbar2 - mat.Z * fp.s_star;
    fp.v_star = v2.cwiseMax(0.0).cwiseSqrt();
    return fp;
}

void apply_event(SimulationState& state, const std::vector<int>& inverter_buses,
                 const ScenarioEvent& event) {
    auto it = std::find(inverter_buses.begin(), inverter_buses.end(), event.bus);
    if (it == inverter_buses.end())
        throw NotAnInverterBusError("event bus " + std::to_string(event.bus) +
                                    " hosts no inverter");
    const auto k = static_cast<std::size_t>(it - inverter_buses.begin());
    InverterConfig& cfg = state.live[k];
    for (const auto& [name, value] : event.overrides) {
        if (name == "V_p") cfg.V_p = value;
        else if (name == "eps_p") cfg.eps_p = value;
        else if (name == "V_q_plus") cfg.V_q_plus = value;
        else if (name == "V_q_minus") cfg.V_q_minus = value;
        else if (name == "eps_q_plus") cfg.eps_q_plus = value;
        else if (name == "eps_q_minus") cfg.eps_q_minus = value;
        else if (name == "q_lim") cfg.q_lim = value;
        else if (name == "v_T") cfg.v_T = value;
        else if (name == "T_p") cfg.T_p = value;
        else if (name == "T_q") cfg.T_q = value;
        else throw UnknownParameterError("unknown droop parameter '" + name + "'");
    }
    if (event.disable_policy) state.policy_enabled[k] = !*event.disable_policy;
}

void step(SimulationState& state, const SensitivityMatrices& mat, const NetworkModel& network,
          const std::vector<OperatingPoint>& ops, const InjectionVector& loads, double dt,
          StepRecord& record) {
    size_record(record, state.live.size());
    record.t = state.t;
    FlowSolution sol = solve_with_state(state, mat, network, loads);
    state.v = sol.v;
    record_solution(network, sol, record);
    append_history(state, sol, 0);
    dispatch_update(state, ops, sol, network.n_branches(), dt, record);
    state.t += dt;
}

TimeSeries run(const Scenario& scenario, const SensitivityMatrices& mat) {
    const NetworkModel& net = scenario.network;
    const int m = net.n_branches();
    const double dt = scenario.dt;
    const auto steps = static_cast<int>(std::llround(scenario.horizon / dt));

    std::vector<InverterConfig> inverters = scenario.inverters;
    if (scenario.case_mode == CaseMode::NoInverters) inverters.clear();

    TimeSeries ts;
    for (const auto& cfg : inverters) ts.inverter_buses.push_back(cfg.bus);
    ts.records.reserve(static_cast<std::size_t>(steps));

    SimulationState st;
    st.t = 0.0;
    st.s_g = Eigen::VectorXd::Zero(2 * m);
    st.live = inverters;
    st.history.resize(inverters.size());
    st.policy_enabled.assign(inverters.size(),
                             scenario.case_mode == CaseMode::Policy ? 1 : 0);

    std::size_t cap = 2;
    for (const auto& cfg : inverters)
        cap = std::max(cap, static_cast<std::size_t>(std::lround(cfg.T_d() / dt)) + 2);

    auto loads_at = [&](double t) {
        InjectionVector inj = InjectionVector::zeros(m);
        for (int b = 1; b <= m; ++b) {
            double mult = 1.0;
            auto it = scenario.profiles.load.find(b);
            if (it != scenario.profiles.load.end()) mult = it->second.at(t);
            inj.p_c(b - 1) = net.buses[b].p_load * mult;
            inj.q_c(b - 1) = net.buses[b].q_load * mult;
        }
        return inj;
    };
    auto ops_at = [&](double t) {
        std::vector<OperatingPoint> ops(inverters.size());
        for (std::size_t k = 0; k < inverters.size(); ++k) {
            double g = 1.0;
            auto it = scenario.profiles.generation.find(inverters[k].bus);
            if (it != scenario.profiles.generation.end()) g = it->second.at(t);
            const double mu = std::clamp(g, 1e-6, 1.0);
            ops[k] = OperatingPoint::from_mu(mu, inverters[k].s_rated);
        }
        return ops;
    };

    // initial s_g: open-loop droop outputs at the load-only voltage profile
    if (!inverters.empty()) {
        FlowSolution base = solve_linear(mat, net, loads_at(0.0), net.v0);
        auto ops = ops_at(0.0);
        for (std::size_t k = 0; k < inverters.size(); ++k) {
            const InverterConfig& cfg = inverters[k];
            auto [p, q] = dispatch_targets(cfg, ops[k], base.v(cfg.bus - 1) - cfg.v_nom);
            st.s_g(cfg.bus - 1) = p;
            st.s_g(m + cfg.bus - 1) = q;
        }
    }

    auto events = scenario.events;
    std::sort(events.begin(), events.end(),
              [](const ScenarioEvent& a, const ScenarioEvent& b) { return a.time < b.time; });
    std::size_t next_event = 0;

    for (int k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;

        // ties between events and policy at the same step: events first
        while (next_event < events.size() && events[next_event].time <= t + dt / 2.0) {
            apply_event(st, ts.inverter_buses, events[next_event]);
            ++next_event;
        }

        StepRecord rec;
        size_record(rec, inverters.size());
        rec.t = t;

        InjectionVector loads = loads_at(t);
        auto ops = ops_at(t);

        FlowSolution sol = solve_with_state(st, mat, net, loads);
        st.v = sol.v;
        record_solution(net, sol, rec);
        append_history(st, sol, cap);

        for (std::size_t i = 0; i < st.live.size(); ++i) {
            const int need = static_cast<int>(std::lround(st.live[i].T_d() / dt)) + 1;
            if (static_cast<int>(st.history[i].size()) >= need)
                rec.flicker[i] = flicker(st.history[i], st.live[i].T_d(), dt);
        }

        // per-inverter policy at positive multiples of its own T_d
        if (scenario.case_mode == CaseMode::Policy) {
            for (std::size_t i = 0; i < st.live.size(); ++i) {
                if (!st.policy_enabled[i]) continue;
                InverterConfig& cfg = st.live[i];
                const double td = cfg.T_d();
                const double ticks = t / td;
                if (!(t > 0.0 && std::abs(ticks - std::lround(ticks)) < 1e-9)) continue;
                const int need = static_cast<int>(std::lround(td / dt)) + 1;
                if (static_cast<int>(st.history[i].size()) < need) continue;
                const double fl = flicker(st.history[i], td, dt);
                if (!(fl > cfg.v_T)) continue;

                const double vs = estimate_v_star(st.history[i], td, dt);
                const double eta_i = 2.0 * vs * vs / mat.rowsum_zzt(cfg.bus - 1);
                PolicyFiring firing;
                firing.t = t;
                firing.bus = cfg.bus;
                try {
                    firing.adjustment =
                        stabilize(cfg, ops[i], eta_i, scenario.stability_margin, vs);
                    firing.applied = true;
                } catch (const CannotStabilizeError&) {
                    // deliver the fully widened ramp as the best local effort
                    const double mu = ops[i].mu_clamped();
                    firing.adjustment.bus = cfg.bus;
                    firing.adjustment.eta_used = eta_i;
                    firing.adjustment.v_star_estimate = vs;
                    firing.adjustment.eps_q_plus_new = 2.0 * cfg.vqp();
                    firing.adjustment.eps_p_closed_form =
                        ops[i].p_bar /
                        std::sqrt((1.0 - mu * mu) *
                                  std::max(eta_i - scenario.stability_margin, 1e-300));
                    firing.adjustment.eps_p_new =
                        firing.adjustment.eps_p_closed_form * std::pow(1.5, 60);
                    firing.adjustment.widen_iterations = 60;
                    firing.applied = false;
                }
                cfg.eps_p = firing.adjustment.eps_p_new;
                cfg.eps_q_plus = firing.adjustment.eps_q_plus_new;
                rec.policy_fired[i] = 1;
                ts.firings.push_back(firing);
            }
        }

        dispatch_update(st, ops, sol, m, dt, rec);
        st.t = t + dt;
        ts.records.push_back(std::move(rec));
    }
    return ts;
}

EnvelopeStats envelope_stats(const TimeSeries& series, double window, double dt) {
    EnvelopeStats out;
    if (series.records.empty()) return out;
    const auto T = series.records.size();
    const auto nb = static_cast<std::size_t>(series.records[0].v.size());
    const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(window / dt)));

    out.buses.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) out.buses[b] = static_cast<int>(b) + 1;
    out.spread_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb));
    out.var_upper = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb));
    out.var_lower = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb));
    out.avg_upper.assign(T, 0.0);
    out.avg_lower.assign(T, 0.0);

    // monotone deques give O(T) per bus
    std::vector<double> col(T), up(T), lo(T);
    for (std::size_t b = 0; b < nb; ++b) {
        for (std::size_t t = 0; t < T; ++t) col[t] = series.records[t].v(static_cast<int>(b));
        std::deque<std::size_t> mx, mn;
        for (std::size_t t = 0; t < T; ++t) {
            while (!mx.empty() && col[mx.back()] <= col[t]) mx.pop_back();
            mx.push_back(t);
            while (!mn.empty() && col[mn.back()] >= col[t]) mn.pop_back();
            mn.push_back(t);
            const std::size_t a = t + 1 >= w ? t + 1 - w : 0;
            while (mx.front() < a) mx.pop_front();
            while (mn.front() < a) mn.pop_front();
            up[t] = col[mx.front()];
            lo[t] = col[mn.front()];
        }
        double sSpread = 0.0, sU = 0.0, sL = 0.0, sU2 = 0.0, sL2 = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            sSpread += up[t] - lo[t];
            sU += up[t];
            sL += lo[t];
            sU2 += up[t] * up[t];
            sL2 += lo[t] * lo[t];
            out.avg_upper[t] += up[t];
            out.avg_lower[t] += lo[t];
        }
        const double n = static_cast<double>(T);
        out.spread_mean(static_cast<Eigen::Index>(b)) = sSpread / n;
        out.var_upper(static_cast<Eigen::Index>(b)) = sU2 / n - (sU / n) * (sU / n);
        out.var_lower(static_cast<Eigen::Index>(b)) = sL2 / n - (sL / n) * (sL / n);
    }
    for (std::size_t t = 0; t < T; ++t) {
        out.avg_upper[t] /= static_cast<double>(nb);
        out.avg_lower[t] /= static_cast<double>(nb);
    }
    return out;
}

double longest_flicker_exceedance(const TimeSeries& series, int inverter_index, double threshold,
                                  double dt) {
    double best = 0.0, cur = 0.0;
    for (const auto& rec : series.records) {
        if (rec.flicker[static_cast<std::size_t>(inverter_index)] > threshold) {
            cur += dt;
            best = std::max(best, cur);
        } else {
            cur = 0.0;
        }
    }
    return best;
}

}  // namespace gridstab
