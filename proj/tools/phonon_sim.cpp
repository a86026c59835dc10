// phonon_sim: run experiments from config files, list them, self-verify.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <vector>

#include "phonon/config.hpp"
#include "phonon/experiments.hpp"
#include "phonon/io.hpp"
#include "phonon/verify.hpp"

namespace fs = std::filesystem;
using namespace phonon;

namespace {

struct RunManifest {
    std::string config_path;
    std::string out_dir;
    std::string format = "csv";
    std::vector<int> cutoffs;
    std::optional<std::uint64_t> seed;
};

int cmd_run(const RunManifest& m) {
    ExperimentConfig config = load_config(m.config_path);
    if (!m.cutoffs.empty()) {
        config.n_max_1 = m.cutoffs[0];
        config.n_max_2 = m.cutoffs[1];
    }
    if (m.seed) config.seed = *m.seed;
    config.validate();

    const fs::path out = m.out_dir;
    fs::create_directories(out);
    if (!fs::is_directory(out)) throw std::runtime_error("output path '" + m.out_dir + "' is not a directory");

    const ResultSet rs = run(config);
    const auto path = write_result(rs, out, m.format == "json" ? OutputFormat::Json : OutputFormat::Csv);
    std::cout << path.string() << "  (" << rs.rows.size() << " rows)\n";
    return 0;
}

int cmd_list() {
    for (const auto& e : catalogue()) std::printf("%-20s %-12s %s\n", e.name, e.figure, e.summary);
    return 0;
}

int cmd_verify(const std::string& filter) {
    const auto results = run_verify(filter);
    if (results.empty()) {
        std::cerr << "no check matches '" << filter << "'\n";
        return 2;
    }
    bool ok = true;
    std::printf("%-24s %-6s %-12s %-10s %s\n", "check", "result", "value", "threshold", "description");
    for (const auto& r : results) {
        std::printf("%-24s %-6s %-12.3e %-10.0e %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.value,
                    r.threshold, r.description.c_str());
        if (!r.detail.empty()) std::printf("%24s error: %s\n", "", r.detail.c_str());
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-mode phonon simulator: bright/dark collective states of a trapped ion"};
    app.require_subcommand(1);

    RunManifest manifest;
    auto* run_cmd = app.add_subcommand("run", "run the experiment described by a config file");
    run_cmd->add_option("--config", manifest.config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out", manifest.out_dir, "output directory")->required();
    run_cmd->add_option("--format", manifest.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    run_cmd->add_option("--cutoff-override", manifest.cutoffs, "Fock cutoffs N1 N2")
        ->expected(2)
        ->check(CLI::Range(1, 60));
    run_cmd->add_option("--seed", manifest.seed, "override the config seed");

    auto* list_cmd = app.add_subcommand("list", "print the experiment catalogue");

    std::string filter;
    auto* verify_cmd = app.add_subcommand("verify", "run the invariant and oracle checks");
    verify_cmd->add_option("--filter", filter, "only checks whose name contains this");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) return cmd_run(manifest);
        if (*list_cmd) return cmd_list();
        if (*verify_cmd) return cmd_verify(filter);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
