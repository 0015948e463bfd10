#include "gridstab/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gridstab/errors.hpp"

namespace gridstab {

double Profile::at(double t) const {
    const double pos = (t - t0) / dt;
    const auto k = static_cast<long>(std::lround(pos));
    if (std::abs(pos - static_cast<double>(k)) > 1e-6)
        throw OutOfRangeError("profile queried off-grid at t = " + std::to_string(t));
    if (k < 0 || k >= static_cast<long>(values.size()))
        throw OutOfRangeError("profile queried outside coverage at t = " + std::to_string(t));
    return values[static_cast<std::size_t>(k)];
}

namespace {

struct Line {
    std::string text;
    int number;
};

// strip comments, keep non-empty lines with their 1-based numbers
std::vector<Line> preprocess(std::istream& in) {
    std::vector<Line> lines;
    std::string raw;
    int no = 0;
    while (std::getline(in, raw)) {
        ++no;
        auto cut = raw.find('%');
        if (cut != std::string::npos) raw.erase(cut);
        auto begin = raw.find_first_not_of(" \t\r");
        if (begin == std::string::npos) continue;
        auto end = raw.find_last_not_of(" \t\r");
        lines.push_back({raw.substr(begin, end - begin + 1), no});
    }
    return lines;
}

std::vector<double> parseRow(const std::string& text, int lineNo) {
    std::vector<double> row;
    std::istringstream ss(text);
    std::string tok;
    while (ss >> tok) {
        if (tok == ";") continue;
        if (!tok.empty() && tok.back() == ';') tok.pop_back();
        if (tok.empty()) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw SyntaxError("expected a number, got '" + tok + "'", lineNo);
        }
        if (used != tok.size()) throw SyntaxError("expected a number, got '" + tok + "'", lineNo);
        row.push_back(v);
    }
    return row;
}

struct Section {
    std::vector<std::vector<double>> rows;
    std::vector<int> rowLines;
    int headerLine = 0;
    bool found = false;
};

Section extractMatrix(const std::vector<Line>& lines, const std::string& name) {
    Section sec;
    const std::string key = "mpc." + name;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& t = lines[i].text;
        if (t.rfind(key, 0) != 0) continue;
        auto rest = t.substr(key.size());
        auto eq = rest.find('=');
        if (eq == std::string::npos) continue;
        auto open = rest.find('[', eq);
        if (open == std::string::npos)
            throw SyntaxError("expected '[' after " + key + " =", lines[i].number);
        sec.found = true;
        sec.headerLine = lines[i].number;
        std::string tail = rest.substr(open + 1);
        for (std::size_t j = i; j < lines.size(); ++j) {
            std::string body = (j == i) ? tail : lines[j].text;
            bool closed = false;
            auto close = body.find(']');
            if (close != std::string::npos) {
                body.erase(close);
                closed = true;
            }
            auto row = parseRow(body, lines[j].number);
            if (!row.empty()) {
                sec.rows.push_back(row);
                sec.rowLines.push_back(lines[j].number);
            }
            if (closed) return sec;
        }
        throw SyntaxError("unterminated " + key + " matrix", lines.back().number);
    }
    return sec;
}

}  // namespace

NetworkModel parse_matpower(std::istream& text) {
    auto lines = preprocess(text);
    const int lastLine = lines.empty() ? 1 : lines.back().number;

    double baseMVA = 0.0;
    bool haveBase = false;
    for (const auto& ln : lines) {
        if (ln.text.rfind("mpc.baseMVA", 0) != 0) continue;
        auto eq = ln.text.find('=');
        if (eq == std::string::npos) throw SyntaxError("malformed mpc.baseMVA", ln.number);
        auto row = parseRow(ln.text.substr(eq + 1), ln.number);
        if (row.size() != 1) throw SyntaxError("mpc.baseMVA expects one number", ln.number);
        baseMVA = row[0];
        haveBase = true;
        break;
    }
    if (!haveBase) throw MissingSectionError("missing mpc.baseMVA", lastLine);
    if (baseMVA <= 0.0) throw SyntaxError("baseMVA must be positive", 1);

    Section busSec = extractMatrix(lines, "bus");
    if (!busSec.found) throw MissingSectionError("missing mpc.bus", lastLine);
    Section brSec = extractMatrix(lines, "branch");
    if (!brSec.found) throw MissingSectionError("missing mpc.branch", lastLine);

    NetworkModel net;
    net.base_mva = baseMVA;
    net.v0 = 1.0;
    int slackLine = 0;
    bool haveSlack = false;
    for (std::size_t i = 0; i < busSec.rows.size(); ++i) {
        const auto& row = busSec.rows[i];
        const int lineNo = busSec.rowLines[i];
        if (row.size() < 10)
            throw SyntaxError("bus row needs at least 10 columns, got " +
                                  std::to_string(row.size()),
                              lineNo);
        Bus b;
        b.id = static_cast<int>(row[0]);
        b.p_load = row[2] / baseMVA;
        b.q_load = row[3] / baseMVA;
        net.buses.push_back(b);
        if (static_cast<int>(row[1]) == 3) {
            if (haveSlack)
                throw MultipleSlackBusesError("second type-3 bus " + std::to_string(b.id),
                                              lineNo);
            haveSlack = true;
            slackLine = lineNo;
            net.substation_id = b.id;
        }
    }
    (void)slackLine;
    if (!haveSlack) throw NoSubstationError("no type-3 bus in mpc.bus", busSec.headerLine);

    for (std::size_t i = 0; i < brSec.rows.size(); ++i) {
        const auto& row = brSec.rows[i];
        const int lineNo = brSec.rowLines[i];
        if (row.size() < 4)
            throw SyntaxError("branch row needs at least 4 columns, got " +
                                  std::to_string(row.size()),
                              lineNo);
        net.branches.push_back(Branch{static_cast<int>(row[0]), static_cast<int>(row[1]),
                                      row[2], row[3]});
    }

    try {
        normalize_orientation(net); // validation only; the raw model is returned
    } catch (const NoSubstationError&) {
        throw;
    } catch (const Error& e) {
        throw NonRadialCaseError(e.what(), brSec.headerLine);
    }
    return net;
}

NetworkModel parse_matpower_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open case file: " + path);
    return parse_matpower(in);
}

Profile spline_resample(const std::vector<std::pair<double, double>>& knots, double dt) {
    const int n = static_cast<int>(knots.size());
    if (n < 2) throw DegenerateKnotsError("spline needs at least 2 knots");
    for (int i = 1; i < n; ++i)
        if (!(knots[i].first > knots[i - 1].first))
            throw DegenerateKnotsError("knot times must be strictly increasing");
    if (dt <= 0.0) throw DegenerateKnotsError("dt must be positive");

    // natural cubic spline: tridiagonal system for second derivatives
    std::vector<double> h(n - 1), alpha(n, 0.0), l(n), mu(n), z(n), c(n), b(n - 1), d(n - 1);
    for (int i = 0; i < n - 1; ++i) h[i] = knots[i + 1].first - knots[i].first;
    for (int i = 1; i < n - 1; ++i)
        alpha[i] = 3.0 * (knots[i + 1].second - knots[i].second) / h[i] -
                   3.0 * (knots[i].second - knots[i - 1].second) / h[i - 1];
    l[0] = 1.0;
    mu[0] = z[0] = 0.0;
    for (int i = 1; i < n - 1; ++i) {
        l[i] = 2.0 * (knots[i + 1].first - knots[i - 1].first) - h[i - 1] * mu[i - 1];
        mu[i] = h[i] / l[i];
        z[i] = (alpha[i] - h[i - 1] * z[i - 1]) / l[i];
    }
    l[n - 1] = 1.0;
    z[n - 1] = c[n - 1] = 0.0;
    for (int j = n - 2; j >= 0; --j) {
        c[j] = z[j] - mu[j] * c[j + 1];
        b[j] = (knots[j + 1].second - knots[j].second) / h[j] -
               h[j] * (c[j + 1] + 2.0 * c[j]) / 3.0;
        d[j] = (c[j + 1] - c[j]) / (3.0 * h[j]);
    }

    Profile out;
    out.t0 = knots.front().first;
    out.dt = dt;
    const double span = knots.back().first - knots.front().first;
    const auto count = static_cast<std::size_t>(std::llround(span / dt));
    out.values.reserve(count);
    int seg = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double t = out.t0 + static_cast<double>(k) * dt;
        while (seg < n - 2 && t >= knots[seg + 1].first) ++seg;
        const double u = t - knots[seg].first;
        double v = knots[seg].second + b[seg] * u + c[seg] * u * u + d[seg] * u * u * u;
        out.values.push_back(std::max(v, 0.0));
    }
    return out;
}

ProfileSet normalize_profiles(const ProfileSet& raw) {
    ProfileSet out = raw;
    auto norm = [](Profile& p) {
        double peak = 0.0;
        for (double v : p.values) peak = std::max(peak, v);
        if (peak <= 0.0) return;
        for (double& v : p.values) v /= peak;
    };
    for (auto& [bus, p] : out.load) norm(p);
    for (auto& [bus, p] : out.generation) norm(p);
    return out;
}

Profile slice_window(const Profile& p, double start, double end) {
    if (!(end > start)) throw OutOfRangeError("slice_window: end must exceed start");
    const double pos0 = (start - p.t0) / p.dt;
    const auto k0 = static_cast<long>(std::llround(pos0));
    const auto cnt = static_cast<long>(std::llround((end - start) / p.dt));
    if (std::abs(pos0 - static_cast<double>(k0)) > 1e-6)
        throw OutOfRangeError("slice_window: start is off-grid");
    if (k0 < 0 || k0 + cnt > static_cast<long>(p.values.size()))
        throw OutOfRangeError("slice_window: [" + std::to_string(start) + ", " +
                              std::to_string(end) + ") outside coverage");
    Profile out;
    out.t0 = 0.0;
    out.dt = p.dt;
    out.values.assign(p.values.begin() + k0, p.values.begin() + k0 + cnt);
    return out;
}

ProfileSet slice_window(const ProfileSet& profiles, double start, double end) {
    ProfileSet out;
    out.dt = profiles.dt;
    for (const auto& [bus, p] : profiles.load) out.load[bus] = slice_window(p, start, end);
    for (const auto& [bus, p] : profiles.generation)
        out.generation[bus] = slice_window(p, start, end);
    return out;
}

std::vector<std::pair<double, double>> read_profile_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open profile csv: " + path);
    std::vector<std::pair<double, double>> out;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (line.empty() || line == "\r") continue;
        if (no == 1) {
            if (line.rfind("t,value", 0) != 0)
                throw SyntaxError("profile csv must start with header 't,value'", no);
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos) throw SyntaxError("expected 't,value' pair", no);
        try {
            out.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw SyntaxError("bad number in profile csv", no);
        }
    }
    return out;
}

std::string network_to_json(const NetworkModel& network) {
    nlohmann::json j;
    j["base_mva"] = network.base_mva;
    j["v0"] = network.v0;
    j["substation"] = network.substation_id;
    j["buses"] = nlohmann::json::array();
    for (const auto& b : network.buses)
        j["buses"].push_back({{"id", b.id}, {"p_load", b.p_load}, {"q_load", b.q_load}});
    j["branches"] = nlohmann::json::array();
    for (const auto& br : network.branches)
        j["branches"].push_back(
            {{"from", br.from_bus}, {"to", br.to_bus}, {"r", br.r}, {"x", br.x}});
    if (!network.original_ids.empty()) j["original_ids"] = network.original_ids;
    return j.dump(2);
}

NetworkModel network_from_json(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    NetworkModel net;
    net.base_mva = j.at("base_mva").get<double>();
    net.v0 = j.at("v0").get<double>();
    net.substation_id = j.at("substation").get<int>();
    for (const auto& jb : j.at("buses"))
        net.buses.push_back(Bus{jb.at("id").get<int>(), jb.at("p_load").get<double>(),
                                jb.at("q_load").get<double>()});
    for (const auto& jb : j.at("branches"))
        net.branches.push_back(Branch{jb.at("from").get<int>(), jb.at("to").get<int>(),
                                      jb.at("r").get<double>(), jb.at("x").get<double>()});
    if (j.contains("original_ids")) {
        net.original_ids = j["original_ids"].get<std::vector<int>>();
        net.normalized = true;
    }
    return net;
}

}  // namespace gridstab
