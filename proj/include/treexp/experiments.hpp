#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "treexp/engine.hpp"

namespace treexp {

/**
 * Experiment runner behind the CLI: validates a config document, builds the
 * lattice and family it describes, runs the requested verifier or scenario,
 * and returns a machine-readable report plus an optional tabular file of
 * node-wise values.
 *
 * Reports are byte-stable for a fixed config and seed, except for the
 * top-level "elapsed_ms" field.
 */

struct RunOptions {
    std::optional<std::uint64_t> seed;       // overrides the config when set
    std::optional<std::size_t> max_enum;     // overrides the config when set
    std::string format = "json";             // "json" or "csv" (csv adds the tabular file)
};

struct RunResult {
    int exit_code = 0;  // 0 computed/pass, 1 verifier fail (2 is config error, thrown)
    nlohmann::ordered_json report;
    std::string tabular;            // csv text, header row always present
    std::string report_filename;    // e.g. "tower_report.json"
    std::string tabular_filename;   // e.g. "tower_values.csv"
};

/// Throws ConfigError (with a JSON pointer) on schema violations and
/// SizeLimit when a requested enumeration is infeasible.
RunResult run_experiment(const nlohmann::json& config, const RunOptions& options = {});

}  // namespace treexp
