#include <doctest.h>

#include <cmath>

#include "gridstab/errors.hpp"
#include "gridstab/ingest.hpp"
#include "gridstab/simulator.hpp"

using namespace gridstab;

namespace {

NetworkModel two_bus(double r = 0.1, double x = 0.2) {
    NetworkModel n;
    n.buses = {{0, 0.0, 0.0}, {1, 0.0, 0.0}};
    n.branches = {{0, 1, r, x}};
    n.substation_id = 0;
    n.v0 = 1.0;
    return normalize_orientation(n);
}

// Table-geometry curves, fast filter
InverterConfig table_cfg() {
    InverterConfig c;
    c.bus = 1;
    c.s_rated = 1.0;
    c.q_lim = 0.02;
    c.T_p = 1.0;
    c.T_q = 1.0;
    c.min_power_factor = 0.0;
    return c;
}

// wide-ramp variant placed above the operating band: criterion satisfied
InverterConfig stable_cfg() {
    InverterConfig c = table_cfg();
    c.V_p = 1.2;
    c.eps_p = 0.3;
    return c;
}

Profile constant_profile(double value, int steps) {
    Profile p;
    p.t0 = 0.0;
    p.dt = 1.0;
    p.values.assign(static_cast<std::size_t>(steps), value);
    return p;
}

Scenario two_bus_scenario(const InverterConfig& cfg, double mu, int horizon,
                          CaseMode mode = CaseMode::NoPolicy) {
    Scenario sc;
    sc.network = two_bus();
    sc.inverters = {cfg};
    sc.horizon = horizon;
    sc.dt = 1.0;
    sc.case_mode = mode;
    sc.profiles.load[1] = constant_profile(1.0, horizon);
    sc.profiles.generation[1] = constant_profile(mu, horizon);
    return sc;
}

}  // namespace

TEST_CASE("step: first-order response hand values") {
    NetworkModel net = two_bus();
    SensitivityMatrices mat = build_sensitivity(net);

    // inverter far inside the flat region: constant target p_bar
    InverterConfig cfg = table_cfg();
    cfg.T_p = 25.0;
    cfg.T_q = 25.0;
    SimulationState st;
    st.t = 0.0;
    st.s_g = Eigen::VectorXd::Zero(2);
    st.live = {cfg};
    st.history.resize(1);
    st.policy_enabled = {0};
    std::vector<OperatingPoint> ops = {OperatingPoint::from_mu(0.05, cfg.s_rated)};

    StepRecord rec;
    step(st, mat, net, ops, InjectionVector::zeros(1), 1.0, rec);
    const double alpha = 1.0 - std::exp(-1.0 / 25.0);
    CHECK(st.s_g(0) == doctest::Approx(alpha * ops[0].p_bar).epsilon(1e-12));
    CHECK(st.t == 1.0);
    CHECK(st.history[0].size() == 1);

    // dt = T_p gives alpha = 1 - 1/e
    InverterConfig fast = cfg;
    fast.T_p = 1.0;
    SimulationState st2;
    st2.t = 0.0;
    st2.s_g = Eigen::VectorXd::Zero(2);
    st2.live = {fast};
    st2.history.resize(1);
    st2.policy_enabled = {0};
    StepRecord rec2;
    step(st2, mat, net, ops, InjectionVector::zeros(1), 1.0, rec2);
    CHECK(st2.s_g(0) == doctest::Approx((1.0 - std::exp(-1.0)) * ops[0].p_bar).epsilon(1e-12));

    // enormous time constant freezes the output
    InverterConfig frozen = cfg;
    frozen.T_p = 1e12;
    frozen.T_q = 1e12;
    SimulationState st3 = st2;
    st3.live = {frozen};
    st3.s_g.setZero();
    StepRecord rec3;
    step(st3, mat, net, ops, InjectionVector::zeros(1), 1.0, rec3);
    CHECK(std::abs(st3.s_g(0)) < 1e-10);
}

TEST_CASE("find_fixed_point: no inverters gives s* = 0, v* = load flow") {
    NetworkModel net = two_bus();
    SensitivityMatrices mat = build_sensitivity(net);
    InjectionVector loads = InjectionVector::zeros(1);
    loads.p_c(0) = 0.1;
    FixedPoint fp = find_fixed_point(net, mat, {}, loads, 1.0);
    CHECK(fp.converged);
    CHECK(fp.s_star.cwiseAbs().maxCoeff() == 0.0);
    CHECK(fp.v_star(0) == doctest::Approx(std::sqrt(0.98)).epsilon(1e-12));
}

TEST_CASE("find_fixed_point: flat-region inverter settles at its constant output") {
    NetworkModel net = two_bus();
    SensitivityMatrices mat = build_sensitivity(net);
    InverterConfig cfg = stable_cfg();
    OperatingPoint op = OperatingPoint::from_mu(0.05, cfg.s_rated); // tiny injection: stays flat
    InjectionVector loads = InjectionVector::zeros(1);
    loads.p_c(0) = 0.05;
    FixedPoint fp = find_fixed_point(net, mat, {{cfg, op}}, loads, 1.0);
    CHECK(fp.converged);
    CHECK(fp.s_star(0) == doctest::Approx(op.p_bar).epsilon(1e-9));
}

TEST_CASE("closed loop converges to the independently computed fixed point") {
    InverterConfig cfg = stable_cfg();
    const double mu = 0.5;
    Scenario sc = two_bus_scenario(cfg, mu, 600);
    SensitivityMatrices mat = build_sensitivity(sc.network);

    InjectionVector loads = InjectionVector::zeros(1);
    loads.p_c(0) = 0.0;
    OperatingPoint op = OperatingPoint::from_mu(mu, cfg.s_rated);
    FixedPoint fp = find_fixed_point(sc.network, mat, {{cfg, op}}, loads, 1.0);
    REQUIRE(fp.converged);

    TimeSeries ts = run(sc, mat);
    double worst = 0.0;
    double mean_p = 0.0;
    for (std::size_t k = ts.records.size() - 100; k < ts.records.size(); ++k) {
        worst = std::max(worst, std::abs(ts.records[k].v(0) - fp.v_star(0)));
        mean_p += ts.records[k].p_g[0];
    }
    mean_p /= 100.0;
    CHECK(worst < 1e-6);
    CHECK(mean_p == doctest::Approx(fp.s_star(0)).epsilon(1e-6));
}

TEST_CASE("stability dichotomy on the 2-bus feeder") {
    SensitivityMatrices mat = build_sensitivity(two_bus());
    Eigen::VectorXd etas = eta(mat, Eigen::VectorXd::Ones(1));

    // satisfied side
    InverterConfig good = stable_cfg();
    OperatingPoint op = OperatingPoint::from_mu(0.5, good.s_rated);
    REQUIRE(check_criterion({{good, op}}, etas).verdict);

    // violated side: lhs > 50 eta
    InverterConfig bad = good;
    bad.eps_p = 0.005;
    StabilityReport rep = check_criterion({{bad, op}}, etas);
    REQUIRE_FALSE(rep.verdict);
    REQUIRE(rep.entries[0].lhs > 50.0 * rep.entries[0].eta);

    Scenario sc = two_bus_scenario(bad, 0.5, 600);
    TimeSeries ts = run(sc, build_sensitivity(sc.network));
    double lo = 1e9, hi = -1e9;
    for (std::size_t k = ts.records.size() - 100; k < ts.records.size(); ++k) {
        lo = std::min(lo, ts.records[k].v(0));
        hi = std::max(hi, ts.records[k].v(0));
    }
    CHECK(hi - lo > 0.005); // sustained oscillation
}

TEST_CASE("run with no inverters reproduces solve_linear step by step") {
    Scenario sc;
    sc.network = two_bus();
    sc.horizon = 50;
    sc.dt = 1.0;
    sc.case_mode = CaseMode::NoInverters;
    sc.inverters = {stable_cfg()}; // stripped by case mode
    Profile ramp;
    ramp.t0 = 0.0;
    ramp.dt = 1.0;
    for (int k = 0; k < 50; ++k) ramp.values.push_back(0.5 + 0.01 * k);
    sc.profiles.load[1] = ramp;
    sc.network.buses[1].p_load = 0.1;
    sc.network.buses[1].q_load = 0.05;

    SensitivityMatrices mat = build_sensitivity(sc.network);
    TimeSeries ts = run(sc, mat);
    REQUIRE(ts.records.size() == 50);
    for (int k = 0; k < 50; ++k) {
        InjectionVector inj = InjectionVector::zeros(1);
        inj.p_c(0) = 0.1 * ramp.values[k];
        inj.q_c(0) = 0.05 * ramp.values[k];
        FlowSolution sol = solve_linear(mat, sc.network, inj, 1.0);
        CHECK(ts.records[k].v(0) == sol.v(0));
        CHECK(ts.records[k].P_sub == doctest::Approx(inj.p_c(0)));
        CHECK(ts.records[k].Q_sub == doctest::Approx(inj.q_c(0)));
    }
}

TEST_CASE("energy sanity: substation power equals load minus generation") {
    Scenario sc = two_bus_scenario(stable_cfg(), 0.4, 100);
    sc.network.buses[1].p_load = 0.2;
    sc.network.buses[1].q_load = 0.1;
    SensitivityMatrices mat = build_sensitivity(sc.network);
    TimeSeries ts = run(sc, mat);
    for (const auto& rec : ts.records) {
        CHECK(rec.P_sub == doctest::Approx(0.2 - rec.p_g[0]).epsilon(1e-12));
        CHECK(rec.Q_sub == doctest::Approx(0.1 - rec.q_g[0]).epsilon(1e-12));
    }
}

TEST_CASE("zero-variance profiles: flicker stays zero, no policy firings") {
    InverterConfig cfg = stable_cfg();
    cfg.T_p = 5.0;
    cfg.T_q = 5.0;
    Scenario sc = two_bus_scenario(cfg, 0.5, 200, CaseMode::Policy);
    TimeSeries ts = run(sc, build_sensitivity(sc.network));
    CHECK(ts.firings.empty());
    for (const auto& rec : ts.records) CHECK(rec.flicker[0] < cfg.v_T);
    // outputs constant after the initial transient
    const double p_end = ts.records.back().p_g[0];
    for (std::size_t k = ts.records.size() - 50; k < ts.records.size(); ++k)
        CHECK(ts.records[k].p_g[0] == doctest::Approx(p_end).epsilon(1e-9));
}

TEST_CASE("apply_event: overrides and policy flags") {
    InverterConfig cfg = stable_cfg();
    SimulationState st;
    st.live = {cfg};
    st.policy_enabled = {1};
    std::vector<int> buses = {1};

    ScenarioEvent ev;
    ev.time = 0.0;
    ev.bus = 1;
    ev.overrides = {{"V_p", 1.02}, {"eps_p", 0.2}};
    ev.disable_policy = true;
    apply_event(st, buses, ev);
    CHECK(st.live[0].V_p == 1.02);
    CHECK(st.live[0].eps_p == 0.2);
    CHECK_FALSE(st.policy_enabled[0]);

    // empty override only touches flags
    ScenarioEvent enable;
    enable.bus = 1;
    enable.disable_policy = false;
    apply_event(st, buses, enable);
    CHECK(st.policy_enabled[0]);
    CHECK(st.live[0].V_p == 1.02);

    ScenarioEvent wrongBus;
    wrongBus.bus = 7;
    CHECK_THROWS_AS(apply_event(st, buses, wrongBus), NotAnInverterBusError);

    ScenarioEvent typo;
    typo.bus = 1;
    typo.overrides = {{"epsilonp", 0.1}};
    CHECK_THROWS_AS(apply_event(st, buses, typo), UnknownParameterError);
}

TEST_CASE("events apply at their step: live eps_p visible in the record") {
    InverterConfig cfg = stable_cfg();
    Scenario sc = two_bus_scenario(cfg, 0.3, 40);
    ScenarioEvent ev;
    ev.time = 10.0;
    ev.bus = 1;
    ev.overrides = {{"eps_p", 0.25}};
    sc.events = {ev};
    TimeSeries ts = run(sc, build_sensitivity(sc.network));
    CHECK(ts.records[9].eps_p[0] == doctest::Approx(1.0));
    CHECK(ts.records[10].eps_p[0] == doctest::Approx(0.25));
    CHECK(ts.records.back().eps_p[0] == doctest::Approx(0.25));
}

TEST_CASE("determinism: identical scenarios give bit-identical series") {
    InverterConfig cfg = stable_cfg();
    cfg.eps_p = 0.01; // oscillatory: exercises a nontrivial trajectory
    Scenario sc = two_bus_scenario(cfg, 0.5, 300);
    SensitivityMatrices mat = build_sensitivity(sc.network);
    TimeSeries a = run(sc, mat);
    TimeSeries b = run(sc, mat);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k) {
        CHECK(a.records[k].v(0) == b.records[k].v(0));
        CHECK(a.records[k].p_g[0] == b.records[k].p_g[0]);
        CHECK(a.records[k].q_g[0] == b.records[k].q_g[0]);
    }
}

TEST_CASE("envelope_stats: constant series and sinusoid") {
    TimeSeries ts;
    ts.inverter_buses = {};
    const int T = 400;
    for (int k = 0; k < T; ++k) {
        StepRecord rec;
        rec.t = k;
        rec.v = Eigen::VectorXd(2);
        rec.v << 1.0, 1.0 + 0.02 * std::sin(2.0 * M_PI * k / 40.0);
        ts.records.push_back(rec);
    }
    EnvelopeStats env = envelope_stats(ts, 50.0, 1.0);
    CHECK(env.spread_mean(0) == doctest::Approx(0.0));
    CHECK(env.var_upper(0) == doctest::Approx(0.0));
    // once the window spans a full period the envelopes pin at the extremes
    CHECK(env.spread_mean(1) == doctest::Approx(0.04).epsilon(0.05));
    const std::size_t tail = 100;
    double worst_up = 0.0, worst_lo = 0.0;
    for (std::size_t k = ts.records.size() - tail; k < ts.records.size(); ++k) {
        worst_up = std::max(worst_up, std::abs(env.avg_upper[k] - (1.0 + 1.02) / 2.0));
        worst_lo = std::max(worst_lo, std::abs(env.avg_lower[k] - (1.0 + 0.98) / 2.0));
    }
    CHECK(worst_up < 1e-9);
    CHECK(worst_lo < 1e-9);
}

TEST_CASE("policy efficacy: a firing leaves parameters satisfying the criterion") {
    // destabilized inverter with a q_lim small enough to stabilize
    InverterConfig cfg = stable_cfg();
    cfg.eps_p = 0.005;
    cfg.q_lim = 0.02;
    cfg.T_p = 1.0;
    cfg.T_q = 1.0;
    Scenario sc = two_bus_scenario(cfg, 0.5, 400, CaseMode::Policy);
    SensitivityMatrices mat = build_sensitivity(sc.network);
    TimeSeries ts = run(sc, mat);
    REQUIRE_FALSE(ts.firings.empty());
    const PolicyFiring& f = ts.firings.front();
    CHECK(f.applied);
    CHECK(f.adjustment.post_check_passed);
    CHECK(f.adjustment.eps_q_plus_new == doctest::Approx(2.0 * cfg.vqp()));

    InverterConfig adjusted = cfg;
    adjusted.eps_p = f.adjustment.eps_p_new;
    adjusted.eps_q_plus = f.adjustment.eps_q_plus_new;
    OperatingPoint op = OperatingPoint::from_mu(0.5, cfg.s_rated);
    auto [cp, cq] = lipschitz_constants(adjusted, op);
    CHECK(cp * cp + cq * cq <= f.adjustment.eta_used - sc.stability_margin);

    // post-firing flicker decays below threshold
    double late = 0.0;
    for (std::size_t k = ts.records.size() - 50; k < ts.records.size(); ++k)
        late = std::max(late, ts.records[k].flicker[0]);
    CHECK(late < cfg.v_T);
}
