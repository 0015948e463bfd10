#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gridstab/cli.hpp"
#include "gridstab/errors.hpp"
#include "gridstab/ingest.hpp"
#include "gridstab/inverter.hpp"
#include "gridstab/netmodel.hpp"
#include "gridstab/powerflow.hpp"
#include "gridstab/scenario_io.hpp"
#include "gridstab/simulator.hpp"
#include "gridstab/stability.hpp"

namespace py = pybind11;
using namespace gridstab;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Radial-feeder smart-inverter stability toolkit (C++ core)";

    py::register_exception<Error>(m, "GridstabError");

    py::class_<Bus>(m, "Bus")
        .def(py::init<>())
        .def_readwrite("id", &Bus::id)
        .def_readwrite("p_load", &Bus::p_load)
        .def_readwrite("q_load", &Bus::q_load);

    py::class_<Branch>(m, "Branch")
        .def(py::init<>())
        .def_readwrite("from_bus", &Branch::from_bus)
        .def_readwrite("to_bus", &Branch::to_bus)
        .def_readwrite("r", &Branch::r)
        .def_readwrite("x", &Branch::x);

    py::class_<NetworkModel>(m, "NetworkModel")
        .def(py::init<>())
        .def_readwrite("buses", &NetworkModel::buses)
        .def_readwrite("branches", &NetworkModel::branches)
        .def_readwrite("base_mva", &NetworkModel::base_mva)
        .def_readwrite("substation_id", &NetworkModel::substation_id)
        .def_readwrite("v0", &NetworkModel::v0)
        .def_readonly("original_ids", &NetworkModel::original_ids)
        .def_readonly("normalized", &NetworkModel::normalized)
        .def("n_buses", &NetworkModel::n_buses)
        .def("n_branches", &NetworkModel::n_branches);

    py::class_<SensitivityMatrices>(m, "SensitivityMatrices")
        .def_readonly("T", &SensitivityMatrices::T)
        .def_readonly("F", &SensitivityMatrices::F)
        .def_readonly("M0", &SensitivityMatrices::M0)
        .def_readonly("M", &SensitivityMatrices::M)
        .def_readonly("R", &SensitivityMatrices::R)
        .def_readonly("X", &SensitivityMatrices::X)
        .def_readonly("L", &SensitivityMatrices::L)
        .def_readonly("Z", &SensitivityMatrices::Z)
        .def_readonly("rowsum_zzt", &SensitivityMatrices::rowsum_zzt);

    m.def("parse_matpower_file", &parse_matpower_file, py::arg("path"));
    m.def("normalize_orientation", &normalize_orientation, py::arg("network"));
    m.def("build_sensitivity", &build_sensitivity, py::arg("network"));
    m.def("common_path_impedance", &common_path_impedance, py::arg("network"), py::arg("i"),
          py::arg("j"));
    m.def("network_to_json", &network_to_json);
    m.def("network_from_json", &network_from_json);

    py::class_<InjectionVector>(m, "InjectionVector")
        .def(py::init<>())
        .def_static("zeros", &InjectionVector::zeros, py::arg("m"))
        .def_readwrite("p_c", &InjectionVector::p_c)
        .def_readwrite("q_c", &InjectionVector::q_c)
        .def_readwrite("p_g", &InjectionVector::p_g)
        .def_readwrite("q_g", &InjectionVector::q_g);

    py::class_<FlowSolution>(m, "FlowSolution")
        .def_readonly("v2", &FlowSolution::v2)
        .def_readonly("v", &FlowSolution::v)
        .def_readonly("P", &FlowSolution::P)
        .def_readonly("Q", &FlowSolution::Q)
        .def_readonly("c2", &FlowSolution::c2)
        .def_readonly("negative_v2", &FlowSolution::negative_v2)
        .def_readonly("iterations", &FlowSolution::iterations);

    m.def("solve_linear", &solve_linear, py::arg("mat"), py::arg("network"), py::arg("inj"),
          py::arg("v0"));
    m.def("solve_nonlinear_sweep", &solve_nonlinear_sweep, py::arg("network"), py::arg("inj"),
          py::arg("v0"), py::arg("tol") = 1e-10, py::arg("max_iter") = 200);
    m.def("loss_term", &loss_term, py::arg("mat"), py::arg("c2"));

    py::class_<InverterConfig>(m, "InverterConfig")
        .def(py::init<>())
        .def_readwrite("bus", &InverterConfig::bus)
        .def_readwrite("s_rated", &InverterConfig::s_rated)
        .def_readwrite("q_lim", &InverterConfig::q_lim)
        .def_readwrite("V_p", &InverterConfig::V_p)
        .def_readwrite("eps_p", &InverterConfig::eps_p)
        .def_readwrite("V_q_plus", &InverterConfig::V_q_plus)
        .def_readwrite("V_q_minus", &InverterConfig::V_q_minus)
        .def_readwrite("eps_q_plus", &InverterConfig::eps_q_plus)
        .def_readwrite("eps_q_minus", &InverterConfig::eps_q_minus)
        .def_readwrite("T_p", &InverterConfig::T_p)
        .def_readwrite("T_q", &InverterConfig::T_q)
        .def_readwrite("v_T", &InverterConfig::v_T)
        .def_readwrite("v_nom", &InverterConfig::v_nom)
        .def_readwrite("min_power_factor", &InverterConfig::min_power_factor)
        .def("T_d", &InverterConfig::T_d)
        .def("validate", &InverterConfig::validate);

    py::class_<OperatingPoint>(m, "OperatingPoint")
        .def(py::init<>())
        .def_static("from_mu", &OperatingPoint::from_mu, py::arg("mu"), py::arg("s_rated"))
        .def_readwrite("p_bar", &OperatingPoint::p_bar)
        .def_readwrite("mu", &OperatingPoint::mu)
        .def("mu_clamped", &OperatingPoint::mu_clamped);

    m.def("volt_watt", &volt_watt, py::arg("cfg"), py::arg("op"), py::arg("dv"));
    m.def("q_bar", &q_bar, py::arg("cfg"), py::arg("op"), py::arg("dv"));
    m.def("volt_var", &volt_var, py::arg("cfg"), py::arg("op"), py::arg("dv"));
    m.def("lipschitz_constants", &lipschitz_constants, py::arg("cfg"), py::arg("op"));
    m.def("droop_derivative", &droop_derivative, py::arg("cfg"), py::arg("op"), py::arg("dv"));
    m.def("apply_power_factor_cap", &apply_power_factor_cap, py::arg("cfg"), py::arg("p"),
          py::arg("q"));

    py::class_<StabilityEntry>(m, "StabilityEntry")
        .def_readonly("bus", &StabilityEntry::bus)
        .def_readonly("C_p", &StabilityEntry::C_p)
        .def_readonly("C_q", &StabilityEntry::C_q)
        .def_readonly("lhs", &StabilityEntry::lhs)
        .def_readonly("eta", &StabilityEntry::eta)
        .def_readonly("margin", &StabilityEntry::margin)
        .def_readonly("satisfied", &StabilityEntry::satisfied);

    py::class_<StabilityReport>(m, "StabilityReport")
        .def_readonly("entries", &StabilityReport::entries)
        .def_readonly("verdict", &StabilityReport::verdict);

    py::class_<PolicyAdjustment>(m, "PolicyAdjustment")
        .def_readonly("bus", &PolicyAdjustment::bus)
        .def_readonly("eps_p_closed_form", &PolicyAdjustment::eps_p_closed_form)
        .def_readonly("eps_p_new", &PolicyAdjustment::eps_p_new)
        .def_readonly("eps_q_plus_new", &PolicyAdjustment::eps_q_plus_new)
        .def_readonly("eta_used", &PolicyAdjustment::eta_used)
        .def_readonly("v_star_estimate", &PolicyAdjustment::v_star_estimate)
        .def_readonly("post_check_passed", &PolicyAdjustment::post_check_passed)
        .def_readonly("widen_iterations", &PolicyAdjustment::widen_iterations);

    m.def("eta", &eta, py::arg("mat"), py::arg("v_star"));
    m.def("check_criterion", &check_criterion, py::arg("inverters"), py::arg("eta_full"));
    m.def("flicker", &flicker, py::arg("history"), py::arg("T_d"), py::arg("dt") = 1.0);
    m.def("estimate_v_star", &estimate_v_star, py::arg("history"), py::arg("T_d"),
          py::arg("dt") = 1.0);
    m.def("stabilize", &stabilize, py::arg("cfg"), py::arg("op"), py::arg("eta_i"), py::arg("eps"),
          py::arg("v_star"));

    py::class_<ScenarioEvent>(m, "ScenarioEvent")
        .def(py::init<>())
        .def_readwrite("time", &ScenarioEvent::time)
        .def_readwrite("bus", &ScenarioEvent::bus)
        .def_readwrite("overrides", &ScenarioEvent::overrides)
        .def_readwrite("disable_policy", &ScenarioEvent::disable_policy);

    py::enum_<CaseMode>(m, "CaseMode")
        .value("NoInverters", CaseMode::NoInverters)
        .value("NoPolicy", CaseMode::NoPolicy)
        .value("Policy", CaseMode::Policy);

    py::class_<Profile>(m, "Profile")
        .def(py::init<>())
        .def_readwrite("t0", &Profile::t0)
        .def_readwrite("dt", &Profile::dt)
        .def_readwrite("values", &Profile::values)
        .def("at", &Profile::at);

    py::class_<ProfileSet>(m, "ProfileSet")
        .def(py::init<>())
        .def_readwrite("load", &ProfileSet::load)
        .def_readwrite("generation", &ProfileSet::generation)
        .def_readwrite("dt", &ProfileSet::dt);

    m.def("spline_resample", &spline_resample, py::arg("knots"), py::arg("dt"));
    m.def("normalize_profiles", &normalize_profiles, py::arg("raw"));
    m.def("slice_window",
          py::overload_cast<const Profile&, double, double>(&slice_window), py::arg("profile"),
          py::arg("start"), py::arg("end"));

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("network", &Scenario::network)
        .def_readwrite("inverters", &Scenario::inverters)
        .def_readwrite("profiles", &Scenario::profiles)
        .def_readwrite("horizon", &Scenario::horizon)
        .def_readwrite("dt", &Scenario::dt)
        .def_readwrite("seed", &Scenario::seed)
        .def_readwrite("events", &Scenario::events)
        .def_readwrite("envelope_window", &Scenario::envelope_window)
        .def_readwrite("stability_margin", &Scenario::stability_margin)
        .def_readwrite("case_mode", &Scenario::case_mode);

    py::class_<PolicyFiring>(m, "PolicyFiring")
        .def_readonly("t", &PolicyFiring::t)
        .def_readonly("bus", &PolicyFiring::bus)
        .def_readonly("adjustment", &PolicyFiring::adjustment)
        .def_readonly("applied", &PolicyFiring::applied);

    py::class_<StepRecord>(m, "StepRecord")
        .def_readonly("t", &StepRecord::t)
        .def_readonly("v", &StepRecord::v)
        .def_readonly("p_g", &StepRecord::p_g)
        .def_readonly("q_g", &StepRecord::q_g)
        .def_readonly("eps_p", &StepRecord::eps_p)
        .def_readonly("eps_q_plus", &StepRecord::eps_q_plus)
        .def_readonly("flicker", &StepRecord::flicker)
        .def_readonly("P_sub", &StepRecord::P_sub)
        .def_readonly("Q_sub", &StepRecord::Q_sub)
        .def_readonly("diverged", &StepRecord::diverged);

    py::class_<TimeSeries>(m, "TimeSeries")
        .def_readonly("inverter_buses", &TimeSeries::inverter_buses)
        .def_readonly("records", &TimeSeries::records)
        .def_readonly("firings", &TimeSeries::firings);

    py::class_<FixedPoint>(m, "FixedPoint")
        .def_readonly("s_star", &FixedPoint::s_star)
        .def_readonly("v_star", &FixedPoint::v_star)
        .def_readonly("converged", &FixedPoint::converged)
        .def_readonly("iterations", &FixedPoint::iterations);

    py::class_<EnvelopeStats>(m, "EnvelopeStats")
        .def_readonly("buses", &EnvelopeStats::buses)
        .def_readonly("spread_mean", &EnvelopeStats::spread_mean)
        .def_readonly("var_upper", &EnvelopeStats::var_upper)
        .def_readonly("var_lower", &EnvelopeStats::var_lower)
        .def_readonly("avg_upper", &EnvelopeStats::avg_upper)
        .def_readonly("avg_lower", &EnvelopeStats::avg_lower);

    m.def("find_fixed_point", &find_fixed_point, py::arg("network"), py::arg("mat"),
          py::arg("inverters"), py::arg("loads"), py::arg("v0"), py::arg("tol") = 1e-12,
          py::arg("max_iter") = 5000, py::arg("gamma") = 0.5);
    m.def("run", &run, py::arg("scenario"), py::arg("mat"));
    m.def("envelope_stats", &envelope_stats, py::arg("series"), py::arg("window"), py::arg("dt"));
    m.def("longest_flicker_exceedance", &longest_flicker_exceedance, py::arg("series"),
          py::arg("inverter_index"), py::arg("threshold"), py::arg("dt"));

    py::class_<RunOverrides>(m, "RunOverrides")
        .def(py::init<>())
        .def_readwrite("dt", &RunOverrides::dt)
        .def_readwrite("horizon", &RunOverrides::horizon)
        .def_readwrite("T_d", &RunOverrides::T_d)
        .def_readwrite("v_T", &RunOverrides::v_T)
        .def_readwrite("stability_margin", &RunOverrides::stability_margin)
        .def_readwrite("envelope_window", &RunOverrides::envelope_window)
        .def_readwrite("seed", &RunOverrides::seed)
        .def_readwrite("case_mode", &RunOverrides::case_mode);

    m.def("load_scenario", &load_scenario, py::arg("path"),
          py::arg("overrides") = RunOverrides{});
    m.def("write_timeseries_csv", &write_timeseries_csv, py::arg("path"), py::arg("series"),
          py::arg("network"));
    m.def("summary_json", &summary_json, py::arg("scenario"), py::arg("series"), py::arg("env"));
}
