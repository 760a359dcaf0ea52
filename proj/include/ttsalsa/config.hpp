#pragma once

#include "ttsalsa/solvers.hpp"
#include "ttsalsa/testbed.hpp"

#include <iosfwd>
#include <map>
#include <string>

#include <json.hpp>

namespace ttsalsa {

/// Flat `key = value` lines; `#` starts a comment. Throws FormatError on
/// malformed lines or repeated keys.
std::map<std::string, std::string> parse_key_values(std::istream& in);

/// Apply one solver option (keys mirror the SolverConfig and
/// RankControlParams field names). Returns false for unknown keys and
/// throws FormatError for malformed values.
bool apply_solver_option(SolverConfig& cfg, const std::string& key, const std::string& value);

/// Overlay every key of the file on `base`; unknown keys are an error.
SolverConfig load_solver_config(const std::string& path, SolverConfig base = {});

/// Experiment keys (target, d, n, C_sf, r_P, k, alpha, beta, trials, seed,
/// algorithms, success_tol) plus any solver key.
ExperimentSpec parse_experiment(std::istream& in);
ExperimentSpec load_experiment(const std::string& path);

nlohmann::json to_json(const SolverConfig& cfg);

}  // namespace ttsalsa
