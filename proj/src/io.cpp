#include "phonon/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace phonon {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

} // namespace

ordered_json state_to_json(const PureState& s) {
    ordered_json amps = ordered_json::array();
    for (Index i = 0; i < s.amplitudes.size(); ++i) amps.push_back({s.amplitudes(i).real(), s.amplitudes(i).imag()});
    return {{"space", {{"n1", s.space.n_max_1()}, {"n2", s.space.n_max_2()}, {"levels", s.space.levels()}}},
            {"weight", s.weight},
            {"amplitudes", std::move(amps)}};
}

PureState state_from_json(const json& doc) {
    try {
        const auto& sp = doc.at("space");
        const SpaceConfig space = make_space(sp.at("n1").get<int>(), sp.at("n2").get<int>(), sp.at("levels").get<int>());
        const auto& amps = doc.at("amplitudes");
        if (!amps.is_array() || static_cast<Index>(amps.size()) != space.dim()) {
            throw std::invalid_argument("state: amplitude count does not match the space dimension");
        }
        CVector v(space.dim());
        for (Index i = 0; i < space.dim(); ++i) {
            const auto& a = amps[static_cast<std::size_t>(i)];
            v(i) = {a.at(0).get<double>(), a.at(1).get<double>()};
        }
        PureState s{space, v, doc.at("weight").get<double>()};
        if (!s.is_normalized(1e-12)) throw std::invalid_argument("state: amplitudes are not normalized");
        if (!(s.weight >= 0.0 && s.weight <= 1.0)) throw std::invalid_argument("state: weight must lie in [0, 1]");
        return s;
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("state: malformed JSON: ") + e.what());
    }
}

ordered_json decomposition_to_json(const CollectiveDecomposition& d) {
    ordered_json entries = ordered_json::array();
    for (const auto& [idx, amp] : d.entries) {
        entries.push_back({{"N", idx.total}, {"n", idx.bright}, {"re", amp.real()}, {"im", amp.imag()}});
    }
    return {{"entries", std::move(entries)}, {"residual", d.residual}};
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
    out << "t_ms,p_up,p_up_reported,trace_err\n";
    for (std::size_t i = 0; i < t.times.size(); ++i) {
        out << fmt(t.times[i]) << ',' << fmt(t.p_up[i]) << ',' << fmt(t.p_reported[i]) << ','
            << fmt(i < t.trace_err.size() ? t.trace_err[i] : 0.0) << '\n';
    }
}

void write_trace_csv(std::ostream& out, const RabiTrace& trace) {
    const bool weighted = !trace.sigma.empty();
    out << (weighted ? "t_ms,p_up,sigma\n" : "t_ms,p_up\n");
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        out << fmt(trace.times[i]) << ',' << fmt(trace.p_up[i]);
        if (weighted) out << ',' << fmt(trace.sigma[i]);
        out << '\n';
    }
}

RabiTrace read_trace_csv(std::istream& in, Sideband sb, Mode mode) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("trace CSV: missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line);
    const bool weighted = header == std::vector<std::string>{"t_ms", "p_up", "sigma"};
    if (!weighted && header != std::vector<std::string>{"t_ms", "p_up"}) {
        throw std::invalid_argument("trace CSV: header must be 't_ms,p_up' or 't_ms,p_up,sigma'");
    }
    RabiTrace t;
    t.sideband = sb;
    t.mode = mode;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) {
            throw std::invalid_argument("trace CSV line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(header.size()) + " fields");
        }
        try {
            t.times.push_back(std::stod(cells[0]));
            t.p_up.push_back(std::stod(cells[1]));
            if (weighted) t.sigma.push_back(std::stod(cells[2]));
        } catch (const std::exception&) {
            throw std::invalid_argument("trace CSV line " + std::to_string(lineno) + ": not a number");
        }
    }
    t.validate();
    return t;
}

ordered_json distribution_to_json(const DistributionFit& fit) {
    return {{"probs", fit.distribution.probs}, {"residual", fit.residual}, {"stderr", fit.stderr_}};
}

void write_result_csv(std::ostream& out, const ResultSet& rs) {
    for (std::size_t i = 0; i < rs.columns.size(); ++i) {
        if (i) out << ',';
        const auto& c = rs.columns[i];
        out << csv_field(c.unit.empty() ? c.name : c.name + " [" + c.unit + "]");
    }
    out << '\n';
    for (const auto& row : rs.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            if (const auto* d = std::get_if<double>(&row[i])) {
                out << fmt(*d);
            } else {
                out << csv_field(std::get<std::string>(row[i]));
            }
        }
        out << '\n';
    }
}

ordered_json result_to_json(const ResultSet& rs) {
    ordered_json cols = ordered_json::array();
    for (const auto& c : rs.columns) cols.push_back({{"name", c.name}, {"unit", c.unit}});
    ordered_json rows = ordered_json::array();
    for (const auto& row : rs.rows) {
        ordered_json r = ordered_json::array();
        for (const auto& cell : row) std::visit([&](const auto& v) { r.push_back(v); }, cell);
        rows.push_back(std::move(r));
    }
    return {{"name", rs.name}, {"columns", std::move(cols)}, {"rows", std::move(rows)}, {"metadata", rs.metadata}};
}

std::filesystem::path write_result(const ResultSet& rs, const std::filesystem::path& dir, OutputFormat format) {
    const std::string hash = rs.metadata.value("config_hash", std::string("nohash"));
    for (char c : rs.name + hash) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) {
            throw std::invalid_argument("result '" + rs.name + "-" + hash + "' is not a plain file stem");
        }
    }
    const std::string stem = rs.name + "-" + hash;
    auto write = [](const std::filesystem::path& path, const auto& body) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
        body(out);
        if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
    };
    if (format == OutputFormat::Json) {
        const auto path = dir / (stem + ".json");
        write(path, [&](std::ostream& out) { out << result_to_json(rs).dump(2) << '\n'; });
        return path;
    }
    // CSV holds the table only; the metadata goes to a sidecar.
    const auto path = dir / (stem + ".csv");
    write(path, [&](std::ostream& out) { write_result_csv(out, rs); });
    write(dir / (stem + ".meta.json"), [&](std::ostream& out) { out << rs.metadata.dump(2) << '\n'; });
    return path;
}

} // namespace phonon
