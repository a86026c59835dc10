// experiments.hpp: config-driven reproductions of the simulated curves,
// each producing a self-describing table.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "phonon/dynamics.hpp"
#include "phonon/sequences.hpp"
#include "phonon/tomography.hpp"

namespace phonon {

inline constexpr const char* kCodeVersion = "1.0.0";
inline constexpr int kConfigSchemaVersion = 1;

enum class ExperimentKind {
    PhaseScanFock,
    RabiFock,
    DistributionsFock,
    RabiCoherent,
    RabiUpsilon,
    PhaseScanBoth,
    RabiExcited,
    TomoRoundtrip,
};

struct CatalogueEntry {
    ExperimentKind kind;
    const char* name;   // config/CLI name, e.g. "RABI_FOCK"
    const char* figure; // figure reference
    const char* summary;
};

const std::vector<CatalogueEntry>& catalogue();
const CatalogueEntry& catalogue_entry(ExperimentKind kind);
ExperimentKind experiment_from_string(const std::string& name);
std::string file_stem(ExperimentKind kind); // lower case, e.g. "rabi_fock"

enum class Table1Row { Fock, Coherent, Upsilon };
SimParams table1_defaults(Table1Row row);

enum class ScanAxis { Time, Phase };

struct ScanSpec {
    ScanAxis axis = ScanAxis::Time;
    double start = 0.0;
    double stop = 0.0; // ms or rad
    int points = 101;

    std::vector<double> grid() const;
    friend bool operator==(const ScanSpec&, const ScanSpec&) = default;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::RabiFock;
    SimParams params;
    // Coherent-state parameters for PHASE_SCAN_BOTH; `params` holds the Upsilon row there.
    SimParams coherent_params;
    int n_max_1 = 3;
    int n_max_2 = 3;
    ScanSpec scan;
    // Bichromatic pulse length of phase scans; empty means the ideal bright pi time.
    std::optional<double> fixed_duration;
    double alpha = 1.0; // coherent displacement per mode
    double phi0 = 0.0;  // systematic preparation phase subtracted in phase scans
    std::uint64_t seed = 1;
    int shots = 200;     // tomography samples per point
    int tomo_nmax = 7;
    RabiModel tomo_model;
    // Optional user sequence; time-scan experiments add it as a "custom" series.
    std::optional<SequenceSpec> preparation;

    void validate() const;
};

// Table I row, cutoffs and scan defaults for the given experiment.
ExperimentConfig default_config(ExperimentKind kind);

// Ideal bright-state pi time 1/(4 sqrt(2) g).
double bright_pi_time(double g);

struct Column {
    std::string name;
    std::string unit;
};

using Cell = std::variant<double, std::string>;

struct ResultSet {
    std::string name;
    std::vector<Column> columns;
    std::vector<std::vector<Cell>> rows;
    nlohmann::ordered_json metadata;

    std::size_t column_index(const std::string& name) const;
    std::vector<double> numeric_column(const std::string& name) const;
};

// Runs the experiment: preparation, evolution, readout model and, for
// TOMO_ROUNDTRIP, synthetic tomography. Deterministic given the config.
ResultSet run(const ExperimentConfig& config);

// Scan parallelism: PHONON_SIM_THREADS if set, otherwise the hardware count.
unsigned scan_threads();

// Excited-state transfer time: first maximum of the Down population when
// `state` evolves under H(params) with gamma = 0.
double excited_transfer_time(const PureState& state, const SimParams& params);

} // namespace phonon
