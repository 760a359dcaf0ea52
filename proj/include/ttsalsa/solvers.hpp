#pragma once

#include "ttsalsa/microstep.hpp"
#include "ttsalsa/rank_control.hpp"
#include "ttsalsa/sampling.hpp"
#include "ttsalsa/tt_tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace ttsalsa {

// ---------------------------------------------------------------------------
// sweeps

enum class SweepOrder {
  bidirectional,  // cores 0..h-1, then d-1..h-1 with h = floor(d/2)
  forward,        // cores 0..d-1
};

struct SweepOptions {
  double omega = 0.0;
  std::vector<double> sigma_min;  // per bond; empty disables the clamp
  BoundaryRule boundary = BoundaryRule::formula;
  /// Keep every core in standard form with exact singular values. When
  /// false the gauge is moved by QR only (plain ALS).
  bool standard_form = true;
  SweepOrder order = SweepOrder::bidirectional;
};

/// One sweep of regularized micro-steps. With omega = 0 and no clamp this
/// is a plain ALS sweep.
TTTensor salsa_sweep(const TTTensor& t, const SampleSet& train, const SweepOptions& opt);

/// Plain ALS sweep with QR gauge moves and minimum-norm slice solves.
TTTensor als_sweep(const TTTensor& t, const SampleSet& train,
                   SweepOrder order = SweepOrder::bidirectional);

/// A single micro-step on core mu without any clamping. For omega > 0 the
/// tensor is first brought into standard form around mu; for omega = 0
/// the gauge is moved by QR only.
TTTensor microstep_update(const TTTensor& t, const SampleSet& train, Index mu, double omega,
                          BoundaryRule rule);

// ---------------------------------------------------------------------------
// drivers

enum class Algorithm { salsa, als, greedy_als };

Algorithm parse_algorithm(const std::string& s);
std::string to_string(Algorithm a);

enum class GreedySelection { max, min };

struct SolverConfig {
  Algorithm algorithm = Algorithm::salsa;
  RankControlParams rank;
  double control_fraction = 0.05;
  Index max_iters = 500;
  Index warmup_sweeps = 1;
  Index virtual_rank_iter = 3;
  bool final_cut = true;
  /// Stop as converged once both relative residuals fall below this value.
  double exact_fit_tol = 1e-10;
  std::uint64_t seed = 0;
  SweepOrder order = SweepOrder::bidirectional;
  GreedySelection greedy_selection = GreedySelection::max;
  /// Fixed-rank ALS: uniform target rank (0 means r_lim).
  Index als_rank = 0;
  /// Sweeps at a fixed rank before the greedy baseline probes for an increase.
  Index inner_max_sweeps = 40;
};

enum class Verdict { converged, diverged, max_iters, numeric_failure };

std::string to_string(Verdict v);

struct IterationRecord {
  Index iter = 0;
  double omega_tilde = 0.0;
  double omega = 0.0;
  double res_p_rel = 0.0;
  double res_p2_rel = 0.0;
  std::vector<Index> ranks;       // inner ranks
  std::vector<Index> stabilized;  // inner stabilized ranks
  std::vector<double> sigma_min;
};

struct SolveResult {
  TTTensor tensor;
  Verdict verdict = Verdict::max_iters;
  Algorithm algorithm = Algorithm::salsa;
  Index iterations = 0;
  Index best_iter = 0;
  double res_p_rel = 0.0;   // of the returned tensor on the training set
  double res_p2_rel = 0.0;  // of the returned tensor on the control set
  std::vector<Index> stabilized_ranks;
  std::vector<IterationRecord> trace;
  double seconds = 0.0;
  std::string message;
};

/// SALSA with rank adaption on a pre-split (training, control) pair. For
/// d = 2 the stable matrix completion weights and a forward sweep are used.
SolveResult salsa_solve(const SampleSet& train, const SampleSet& control, const SolverConfig& cfg);

/// Stable matrix completion (d = 2 only).
SolveResult matrix_salsa(const SampleSet& train, const SampleSet& control, const SolverConfig& cfg);

/// Fixed-rank ALS from a randomly expanded constant tensor.
SolveResult als_solve(const SampleSet& train, const SampleSet& control, const SolverConfig& cfg);

/// ALS with greedy rank increases along the dominant two-site residual
/// direction.
SolveResult greedy_als_solve(const SampleSet& train, const SampleSet& control, const SolverConfig& cfg);

/// Split off the control set (cfg.control_fraction, seeded by cfg.seed)
/// and run the configured algorithm.
SolveResult solve(const SampleSet& samples, const SolverConfig& cfg);
SolveResult solve(const SampleSet& train, const SampleSet& control, const SolverConfig& cfg);

struct GreedyProbe {
  Index bond = 0;
  double sigma_plus = 0.0;
  Matrix stack;  // (left rank * n_b) x (right rank * n_{b+1})
  Vector left;   // dominant left singular vector of the stack
  Vector right;  // dominant right singular vector of the stack
};

/// Two-site residual projection at bond b with per-position line search;
/// sigma_plus is the spectral norm of the stacked update.
GreedyProbe greedy_rank_estimate(const TTTensor& t, const SampleSet& train, Index bond);

/// Grow the probed bond by one using the rank-one part of the stack.
TTTensor greedy_increase(const TTTensor& t, const GreedyProbe& probe);

void write_trace_csv(std::ostream& out, const SolveResult& r);
nlohmann::json summary_json(const SolveResult& r);

}  // namespace ttsalsa
