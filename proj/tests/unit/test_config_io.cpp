#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "phonon/config.hpp"
#include "phonon/io.hpp"
#include "phonon/verify.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace phonon;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("phonon_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

double signed_term(int total, int bright, int m, int q) {
    auto lf = [](int k) { return std::lgamma(k + 1.0); };
    const double mag = std::exp(lf(total) - lf(q) - lf(bright - q) - lf(m - q) - lf(total - bright - m + q));
    return ((m - q) % 2 == 0) ? mag : -mag;
}

// Collective coefficient with a caller-chosen q range, for mutation checks.
double coeff_with_bounds(int total, int bright, int m, int q_lo, int q_hi) {
    double sum = 0.0;
    for (int q = q_lo; q <= q_hi; ++q) sum += signed_term(total, bright, m, q);
    auto lf = [](int k) { return std::lgamma(k + 1.0); };
    return sum * std::exp(0.5 * (lf(bright) + lf(total - bright) + lf(m) + lf(total - m) - total * std::log(2.0)) -
                          lf(total));
}

} // namespace

TEST_CASE("every default config round-trips") {
    for (const auto& e : catalogue()) {
        const auto c = default_config(e.kind);
        const auto text = serialize_config(c);
        const auto back = parse_config(text);
        CHECK(serialize_config(back) == text);
        CHECK(config_hash(back) == config_hash(c));
    }
}

TEST_CASE("minimal config takes experiment defaults") {
    const auto c = parse_config(R"({"schema_version": 1, "experiment": "RABI_UPSILON"})");
    CHECK(serialize_config(c) == serialize_config(default_config(ExperimentKind::RabiUpsilon)));
}

TEST_CASE("unknown keys are named") {
    CHECK(error_of(R"({"schema_version": 1, "experiment": "RABI_FOCK", "params": {"gama_e": 2}})")
              .find("'params.gama_e'") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 1, "experiment": "RABI_FOCK", "cutoff": 4})").find("'cutoff'") !=
          std::string::npos);
    CHECK(error_of(R"({"schema_version": 1, "experiment": "RABI_FOCK", "scan": {"points": 5, "step": 1}})")
              .find("'scan.step'") != std::string::npos);
}

TEST_CASE("type and schema errors") {
    CHECK(error_of(R"({"experiment": "RABI_FOCK"})").find("schema_version") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 2, "experiment": "RABI_FOCK"})").find("schema_version") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 1, "experiment": "RABI_FOO"})").find("experiment") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 1, "experiment": "RABI_FOCK", "params": {"g1": "fast"}})")
              .find("'params.g1' must be a number") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 1, "experiment": "RABI_FOCK", "space": {"n_max_1": 2.5}})")
              .find("'space.n_max_1' must be an integer") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 1, "experiment": "RABI_FOCK", "scan": {"axis": "energy"}})")
              .find("scan.axis") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 1, "experiment": "RABI_FOCK", "seed": -3})").find("seed") !=
          std::string::npos);
    CHECK(error_of("{not json").find("not valid JSON") != std::string::npos);
    // Semantic errors from validation surface as ConfigError too.
    CHECK(!error_of(R"({"schema_version": 1, "experiment": "RABI_FOCK", "scan": {"points": 0}})").empty());
}

TEST_CASE("row and coupling shorthands") {
    const auto c = parse_config(
        R"({"schema_version": 1, "experiment": "RABI_FOCK", "params": {"row": "UPSILON", "g": 6.0, "offset": 0.2}})");
    CHECK(c.params.g1 == 6.0);
    CHECK(c.params.g2 == 6.0);
    CHECK(c.params.gamma_m == 0.28);
    CHECK(c.params.offset == 0.2);
    CHECK(error_of(R"({"schema_version": 1, "experiment": "RABI_FOCK", "params": {"row": "FANCY"}})")
              .find("params.row") != std::string::npos);
}

TEST_CASE("preparation sequences parse and round-trip") {
    const auto c = parse_config(R"({
        "schema_version": 1, "experiment": "RABI_FOCK",
        "preparation": {"steps": [
            {"kind": "CAR_A", "area": 3.141592653589793},
            {"kind": "BSB1", "area": 2.221441469079183},
            {"postselect": ["down"]}
        ]}})");
    REQUIRE(c.preparation.has_value());
    CHECK(c.preparation->steps.size() == 3);
    CHECK(std::get<Postselect>(c.preparation->steps[2]).keep == std::set<Level>{Level::Down});
    CHECK(sequence_from_json(sequence_to_json(*c.preparation)) == *c.preparation);
    CHECK(sequence_from_json(sequence_to_json(upsilon_program(0.3, 1.1))) == upsilon_program(0.3, 1.1));

    CHECK(error_of(R"({"schema_version": 1, "experiment": "RABI_FOCK",
                       "preparation": {"steps": [{"kind": "LASER"}]}})")
              .find("preparation.steps[0].kind") != std::string::npos);
    CHECK(error_of(R"({"schema_version": 1, "experiment": "RABI_FOCK",
                       "preparation": {"steps": [{"postselect": ["sideways"]}]}})")
              .find("sideways") != std::string::npos);
    CHECK(!error_of(R"({"schema_version": 1, "experiment": "PHASE_SCAN_FOCK",
                        "preparation": {"steps": []}})")
               .empty());
    // Explicit nulls are accepted.
    CHECK_NOTHROW(parse_config(R"({"schema_version": 1, "experiment": "RABI_FOCK", "preparation": null,
                                   "fixed_duration": null})"));
}

TEST_CASE("config hash") {
    const auto c = default_config(ExperimentKind::RabiFock);
    const auto h = config_hash(c);
    CHECK(h.size() == 16);
    CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
    auto d = c;
    d.params.gamma_e += 1e-12;
    CHECK(config_hash(d) != h);
    d = c;
    d.seed = 2;
    CHECK(config_hash(d) != h);
    CHECK(config_hash(parse_config(serialize_config(c))) == h);
}

TEST_CASE("load_config reports missing files") {
    CHECK_THROWS_AS(load_config("/nonexistent/phonon.json"), ConfigError);
    const auto dir = scratch_dir("load");
    std::ofstream(dir / "c.json") << R"({"schema_version": 1, "experiment": "TOMO_ROUNDTRIP", "seed": 9})";
    CHECK(load_config(dir / "c.json").seed == 9);
}

TEST_CASE("state JSON round trip") {
    const auto s = make_space(2, 3, 2);
    auto psi = prepare_single_phonon(s, 0.7);
    psi.weight = 0.5;
    const auto back = state_from_json(state_to_json(psi));
    CHECK(back.space.n_max_2() == 3);
    CHECK(back.weight == 0.5);
    CHECK((back.amplitudes - psi.amplitudes).norm() == 0.0);
    auto bad = state_to_json(psi);
    bad["amplitudes"].erase(0);
    CHECK_THROWS(state_from_json(bad));
}

TEST_CASE("decomposition JSON") {
    const auto s = make_space(2, 2, 2);
    const auto j = decomposition_to_json(decompose(bright_state(s, 1)));
    bool found = false;
    for (const auto& e : j["entries"]) {
        if (e["N"] == 1 && e["n"] == 1) {
            found = true;
            CHECK(std::abs(e["re"].get<double>() - 1.0) < 1e-12);
        }
    }
    CHECK(found);
    CHECK(j["residual"].get<double>() < 1e-12);
}

TEST_CASE("trace CSV round trip and header checks") {
    RabiTrace t;
    t.times = {0.0, 0.01, 0.02};
    t.p_up = {0.0, 0.25, 0.75};
    t.sigma = {0.01, 0.02, 0.03};
    std::stringstream ss;
    write_trace_csv(ss, t);
    const auto back = read_trace_csv(ss, Sideband::Rsb, Mode::Two);
    CHECK(back.times == t.times);
    CHECK(back.p_up == t.p_up);
    CHECK(back.sigma == t.sigma);
    CHECK(back.sideband == Sideband::Rsb);
    std::stringstream bad("time,p\n0,0\n");
    CHECK_THROWS(read_trace_csv(bad, Sideband::Bsb, Mode::One));
    std::stringstream short_row("t_ms,p_up\n0\n");
    CHECK_THROWS(read_trace_csv(short_row, Sideband::Bsb, Mode::One));
}

TEST_CASE("trajectory and distribution writers") {
    Trajectory t;
    t.times = {0.0, 1.0};
    t.p_up = {0.0, 0.5};
    t.p_reported = {0.03, 0.5};
    t.trace_err = {0.0, 1e-12};
    std::stringstream ss;
    write_trajectory_csv(ss, t);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "t_ms,p_up,p_up_reported,trace_err");

    DistributionFit f;
    f.distribution.probs = {0.5, 0.5};
    f.residual = 1e-9;
    f.stderr_ = {0.01, 0.01};
    const auto j = distribution_to_json(f);
    CHECK(j["probs"].size() == 2);
    CHECK(j["stderr"][1] == 0.01);
}

TEST_CASE("result files") {
    const auto dir = scratch_dir("result");
    const auto rs = run(default_config(ExperimentKind::RabiFock));
    const auto csv = write_result(rs, dir, OutputFormat::Csv);
    CHECK(csv.filename().string() == "rabi_fock-" + rs.metadata["config_hash"].get<std::string>() + ".csv");
    CHECK(fs::exists(dir / (csv.stem().string() + ".meta.json")));
    std::ifstream in(csv);
    std::string header, line;
    std::getline(in, header);
    CHECK(header.rfind("t_ms [ms],p_up_bright", 0) == 0);
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 101);

    const auto js = write_result(rs, dir, OutputFormat::Json);
    std::ifstream jin(js);
    const auto doc = nlohmann::json::parse(jin);
    CHECK(doc["rows"].size() == 101);
    CHECK(doc["metadata"]["experiment"] == "RABI_FOCK");
    // Full-precision numbers reproduce the doubles.
    CHECK(doc["rows"][37][1].get<double>() == std::get<double>(rs.rows[37][1]));

    auto evil = rs;
    evil.name = "../escape";
    CHECK_THROWS(write_result(evil, dir, OutputFormat::Csv));
    CHECK(!fs::exists(dir.parent_path() / "escape"));
}

TEST_CASE("CSV quoting of text cells") {
    ResultSet rs;
    rs.name = "t";
    rs.columns = {{"label", ""}, {"x", "ms"}};
    rs.rows = {{std::string("a,b"), 1.5}};
    std::stringstream ss;
    write_result_csv(ss, rs);
    CHECK(ss.str() == "label,x [ms]\n\"a,b\",1.5\n");
}

TEST_CASE("orthonormality check detects wrong q bounds") {
    auto correct = [](int total, int n, int m) {
        return coeff_with_bounds(total, n, m, std::max(0, n + m - total), std::min(n, m));
    };
    CHECK(orthonormality_deviation(10, correct) < 1e-12);
    CHECK(orthonormality_deviation(10, collective_coeff) < 1e-12);
    // Dropping the last term of the q sum.
    auto short_sum = [](int total, int n, int m) {
        return coeff_with_bounds(total, n, m, std::max(0, n + m - total), std::min(n, m) - 1);
    };
    CHECK(orthonormality_deviation(10, short_sum) > 0.1);
    // Starting the sum at n + m - N + 1.
    auto late_start = [](int total, int n, int m) {
        return coeff_with_bounds(total, n, m, std::max(0, n + m - total + 1), std::min(n, m));
    };
    CHECK(orthonormality_deviation(10, late_start) > 0.1);
}

TEST_CASE("verify suite") {
    CHECK(verify_check_names().size() == 7);
    const auto all = run_verify();
    CHECK(all.size() == 7);
    for (const auto& r : all) {
        CAPTURE(r.name);
        CHECK(r.passed);
    }
    const auto some = run_verify("integrator");
    CHECK(some.size() == 2);
    CHECK(run_verify("nothing_matches").empty());
}
