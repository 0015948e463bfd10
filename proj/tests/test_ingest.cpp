#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gridstab/errors.hpp"
#include "gridstab/ingest.hpp"

using namespace gridstab;

namespace {

const char* kMinimalCase = R"(% minimal two-bus case
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	11	1	1	1;
	2	1	10	5	0	0	1	1	0	11	1	1.1	0.9;
];
mpc.branch = [
	1	2	0.05	0.1	0	999	999	999	0	0	1	-360	360;
];
)";

NetworkModel parse_str(const std::string& s) {
    std::istringstream in(s);
    return parse_matpower(in);
}

}  // namespace

TEST_CASE("minimal 2-bus case parses with per-unit loads") {
    NetworkModel net = parse_str(kMinimalCase);
    CHECK(net.n_buses() == 2);
    CHECK(net.n_branches() == 1);
    CHECK(net.substation_id == 1);
    CHECK(net.buses[1].p_load == doctest::Approx(0.1)); // 10 MW on 100 MVA
    CHECK(net.buses[1].q_load == doctest::Approx(0.05));
    CHECK(net.branches[0].r == doctest::Approx(0.05));
}

TEST_CASE("85-bus case: counts, radiality, totals within rounding") {
    NetworkModel net = parse_matpower_file(std::string(GRIDSTAB_DATA_DIR) + "/case85.m");
    CHECK(net.n_buses() == 85);
    CHECK(net.n_branches() == 84);
    CHECK_NOTHROW(normalize_orientation(net));
    double p = 0.0, q = 0.0;
    for (const auto& b : net.buses) {
        p += b.p_load;
        q += b.q_load;
    }
    CHECK(p * net.base_mva == doctest::Approx(2.571).epsilon(1e-3));
    CHECK(q * net.base_mva == doctest::Approx(2.622).epsilon(1e-3));
}

TEST_CASE("parser: five malformed files raise the five named errors with line numbers") {
    // 1. missing branch section
    {
        std::string text = "mpc.baseMVA = 100;\nmpc.bus = [\n\t1\t3\t0\t0\t0\t0\t1\t1\t0\t11\t1\t1\t1;\n];\n";
        try {
            parse_str(text);
            FAIL("expected MissingSectionError");
        } catch (const MissingSectionError& e) {
            CHECK(e.line == 4);
        }
    }
    // 2. syntax error: non-numeric token, correct line
    {
        std::string text = kMinimalCase;
        const std::string needle = "2	1	10	5";
        text.replace(text.find("10	5"), 4, "xx	5");
        try {
            parse_str(text);
            FAIL("expected SyntaxError");
        } catch (const SyntaxError& e) {
            CHECK(e.line == 5);
        }
    }
    // 3. two slack buses: reported at the second type-3 row
    {
        std::string text = kMinimalCase;
        text.replace(text.find("2	1	10"), 7, "2	3	10");
        try {
            parse_str(text);
            FAIL("expected MultipleSlackBusesError");
        } catch (const MultipleSlackBusesError& e) {
            CHECK(e.line == 5);
        }
    }
    // 4. no type-3 bus: reported at the bus section header
    {
        std::string text = kMinimalCase;
        text.replace(text.find("1	3	0"), 5, "1	1	0");
        try {
            parse_str(text);
            FAIL("expected NoSubstationError");
        } catch (const NoSubstationError& e) {
            CHECK(e.line == 3);
        }
    }
    // 5. non-radial case (extra branch forms a cycle): branch header line
    {
        std::string text = kMinimalCase;
        text.insert(text.find("];\n", text.find("mpc.branch")),
                    "\t2\t1\t0.02\t0.04\t0\t999\t999\t999\t0\t0\t1\t-360\t360;\n");
        try {
            parse_str(text);
            FAIL("expected NonRadialCaseError");
        } catch (const NonRadialCaseError& e) {
            CHECK(e.line == 7);
        }
    }
}

TEST_CASE("parser skips comments and ignores generator tables") {
    std::string text = kMinimalCase;
    text += "mpc.gen = [\n\t1\t0\t0\t10\t-10\t1\t100\t1\t10\t0;\n];\n";
    text += "% trailing comment\n";
    NetworkModel net = parse_str(text);
    CHECK(net.n_buses() == 2);
}

TEST_CASE("network JSON round-trip is the identity") {
    NetworkModel net = parse_str(kMinimalCase);
    NetworkModel back = network_from_json(network_to_json(net));
    CHECK(back.base_mva == net.base_mva);
    CHECK(back.v0 == net.v0);
    CHECK(back.substation_id == net.substation_id);
    REQUIRE(back.n_buses() == net.n_buses());
    REQUIRE(back.n_branches() == net.n_branches());
    for (int i = 0; i < net.n_buses(); ++i) {
        CHECK(back.buses[i].id == net.buses[i].id);
        CHECK(back.buses[i].p_load == net.buses[i].p_load);
        CHECK(back.buses[i].q_load == net.buses[i].q_load);
    }
    for (int e = 0; e < net.n_branches(); ++e) {
        CHECK(back.branches[e].from_bus == net.branches[e].from_bus);
        CHECK(back.branches[e].to_bus == net.branches[e].to_bus);
        CHECK(back.branches[e].r == net.branches[e].r);
        CHECK(back.branches[e].x == net.branches[e].x);
    }
    // normalized form round-trips too (original_ids preserved)
    NetworkModel norm = normalize_orientation(net);
    NetworkModel back2 = network_from_json(network_to_json(norm));
    CHECK(back2.normalized);
    CHECK(back2.original_ids == norm.original_ids);
}

TEST_CASE("spline: reproduces knots and linear data exactly") {
    std::vector<std::pair<double, double>> knots = {{0, 1}, {10, 2}, {20, 3}, {30, 4}};
    Profile p = spline_resample(knots, 1.0);
    CHECK(p.values.size() == 30);
    CHECK(p.values[0] == doctest::Approx(1.0));
    CHECK(p.values[10] == doctest::Approx(2.0).epsilon(1e-12)); // knot on grid
    CHECK(p.values[5] == doctest::Approx(1.5).epsilon(1e-12));  // linear data stay linear
    CHECK(p.values[17] == doctest::Approx(2.7).epsilon(1e-12));
}

TEST_CASE("spline: exact on interior cubic segments, clamped at zero") {
    // knots from v(t) = (t-30)^3 / 1000 + offset; natural ends distort only
    // the first and last intervals
    auto f = [](double t) { return std::pow(t - 30.0, 3) / 1000.0; };
    std::vector<std::pair<double, double>> knots;
    for (double t = 0; t <= 60; t += 10) knots.emplace_back(t, f(t) + 30.0);
    Profile p = spline_resample(knots, 1.0);
    for (int t = 20; t <= 40; ++t)
        CHECK(p.values[t] == doctest::Approx(f(t) + 30.0).epsilon(5e-3));

    Profile clamped = spline_resample({{0, 1.0}, {10, -5.0}, {20, 1.0}}, 1.0);
    for (double v : clamped.values) CHECK(v >= 0.0);
}

TEST_CASE("spline: 10-minute knots over one day give 86400 one-second points") {
    std::vector<std::pair<double, double>> knots;
    for (int k = 0; k <= 144; ++k)
        knots.emplace_back(600.0 * k, 1.0 + 0.5 * std::sin(0.1 * k));
    Profile p = spline_resample(knots, 1.0);
    CHECK(p.values.size() == 86400);
}

TEST_CASE("spline rejects degenerate knots") {
    CHECK_THROWS_AS(spline_resample({{0.0, 1.0}}, 1.0), DegenerateKnotsError);
    CHECK_THROWS_AS(spline_resample({{0.0, 1.0}, {0.0, 2.0}}, 1.0), DegenerateKnotsError);
}

TEST_CASE("normalize_profiles: peak becomes one, zero series unchanged, idempotent") {
    ProfileSet raw;
    raw.load[1] = Profile{0.0, 1.0, {1.0, 4.0, 2.0}};
    raw.load[2] = Profile{0.0, 1.0, {0.0, 0.0}};
    ProfileSet out = normalize_profiles(raw);
    CHECK(out.load[1].values[1] == doctest::Approx(1.0));
    CHECK(out.load[1].values[0] == doctest::Approx(0.25));
    CHECK(out.load[2].values[0] == 0.0);
    ProfileSet again = normalize_profiles(out);
    CHECK(again.load[1].values == out.load[1].values);
}

TEST_CASE("slice_window: re-bases, full-range identity, bad ranges rejected") {
    Profile day;
    day.t0 = 0.0;
    day.dt = 1.0;
    day.values.resize(86400);
    for (std::size_t i = 0; i < day.values.size(); ++i)
        day.values[i] = static_cast<double>(i);

    Profile hour = slice_window(day, 41000.0, 44600.0);
    CHECK(hour.values.size() == 3600);
    CHECK(hour.t0 == 0.0);
    CHECK(hour.values[0] == doctest::Approx(41000.0));

    Profile full = slice_window(day, 0.0, 86400.0);
    CHECK(full.values == day.values);

    CHECK_THROWS_AS(slice_window(day, 100.0, 100.0), OutOfRangeError);
    CHECK_THROWS_AS(slice_window(day, 200.0, 100.0), OutOfRangeError);
    CHECK_THROWS_AS(slice_window(day, 86000.0, 90000.0), OutOfRangeError);
}
