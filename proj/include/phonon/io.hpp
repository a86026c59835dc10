// io.hpp: JSON and CSV forms of states, decompositions, trajectories,
// traces, fitted distributions and result tables.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "phonon/collective.hpp"
#include "phonon/dynamics.hpp"
#include "phonon/experiments.hpp"
#include "phonon/tomography.hpp"

namespace phonon {

// {space: {n1, n2, levels}, weight, amplitudes: [[re, im], ...]}
nlohmann::ordered_json state_to_json(const PureState& state);
PureState state_from_json(const nlohmann::json& doc);

// {entries: [{N, n, re, im}], residual}
nlohmann::ordered_json decomposition_to_json(const CollectiveDecomposition& d);

// Columns t_ms, p_up, p_up_reported, trace_err.
void write_trajectory_csv(std::ostream& out, const Trajectory& t);

// Columns t_ms, p_up[, sigma], with a header row.
void write_trace_csv(std::ostream& out, const RabiTrace& trace);
RabiTrace read_trace_csv(std::istream& in, Sideband sb, Mode mode);

// {probs, residual, stderr}
nlohmann::ordered_json distribution_to_json(const DistributionFit& fit);

// Header "name [unit]" per column, then one line per row. Numbers are
// printed with 17 significant digits so the file reproduces the doubles.
void write_result_csv(std::ostream& out, const ResultSet& rs);
nlohmann::ordered_json result_to_json(const ResultSet& rs);

enum class OutputFormat { Csv, Json };

// Writes <name>-<config hash>.csv (plus a .meta.json sidecar with the
// metadata) or <name>-<config hash>.json into `dir` and returns the table's
// path. Names are checked to be plain stems, so nothing lands outside `dir`.
std::filesystem::path write_result(const ResultSet& rs, const std::filesystem::path& dir, OutputFormat format);

} // namespace phonon
