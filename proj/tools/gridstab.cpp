#include <iostream>

#include <CLI11.hpp>

#include "gridstab/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"gridstab: radial-feeder smart-inverter stability toolkit"};
    app.require_subcommand(1);

    std::string case_path;
    auto* validate = app.add_subcommand("validate", "parse and validate a MATPOWER case");
    validate->add_option("case", case_path, "MATPOWER .m case file")->required();

    std::string an_case, an_inverters, v_star_mode = "flat";
    auto* analyze = app.add_subcommand("analyze", "static stability criterion per inverter");
    analyze->add_option("case", an_case, "MATPOWER .m case file")->required();
    analyze->add_option("--inverters", an_inverters, "inverter config JSON (array)");
    analyze->add_option("--v-star", v_star_mode, "flat|loadflow|fixedpoint")
        ->check(CLI::IsMember({"flat", "loadflow", "fixedpoint"}));

    std::string sim_config, sim_out = "out";
    gridstab::RunOverrides ov;
    int case_mode = 0;
    double dt = 0, horizon = 0, td = 0, vt = 0, eps = 0, win = 0;
    std::uint64_t seed = 0;
    auto* simulate = app.add_subcommand("simulate", "closed-loop scenario run");
    simulate->add_option("--config", sim_config, "scenario JSON")->required();
    simulate->add_option("--case-mode", case_mode, "1 no inverters | 2 no policy | 3 policy")
        ->check(CLI::Range(1, 3));
    simulate->add_option("--out", sim_out, "output directory");
    auto* o_seed = simulate->add_option("--seed", seed, "override scenario seed");
    auto* o_dt = simulate->add_option("--dt", dt, "override step (s)");
    auto* o_hor = simulate->add_option("--horizon", horizon, "override horizon (s)");
    auto* o_td = simulate->add_option("--td", td, "override every inverter's T_p = T_q (s)");
    auto* o_vt = simulate->add_option("--vt", vt, "override flicker threshold (pu)");
    auto* o_eps = simulate->add_option("--epsilon", eps, "stability margin");
    auto* o_win = simulate->add_option("--envelope-window", win, "envelope window (s)");

    CLI11_PARSE(app, argc, argv);

    if (validate->parsed()) return gridstab::cmd_validate(case_path, std::cout, std::cerr);
    if (analyze->parsed())
        return gridstab::cmd_analyze(an_case, an_inverters, v_star_mode, std::cout, std::cerr);
    if (simulate->parsed()) {
        if (case_mode != 0) ov.case_mode = case_mode;
        if (o_seed->count()) ov.seed = seed;
        if (o_dt->count()) ov.dt = dt;
        if (o_hor->count()) ov.horizon = horizon;
        if (o_td->count()) ov.T_d = td;
        if (o_vt->count()) ov.v_T = vt;
        if (o_eps->count()) ov.stability_margin = eps;
        if (o_win->count()) ov.envelope_window = win;
        return gridstab::cmd_simulate(sim_config, ov, sim_out, std::cout, std::cerr);
    }
    return 1;
}
