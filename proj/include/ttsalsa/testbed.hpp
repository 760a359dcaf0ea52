#pragma once

#include "ttsalsa/sampling.hpp"
#include "ttsalsa/solvers.hpp"
#include "ttsalsa/tt_tensor.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ttsalsa {

// ---------------------------------------------------------------------------
// targets (all closed forms take 0-based indices)

/// 1 / (1 + sum_mu i_mu / i_{mu+1}) with 1-based i.
double domino_value(std::span<const Index> idx);

/// The three generic test functions (orders 8, 7 and 11).
double generic_value(int which, std::span<const Index> idx);

/// Required order of generic function `which`.
Index generic_order(int which);

/// Random rank vector with entries in 1..k, mean at least 2k/3 and
/// feasible for the given modes.
std::vector<Index> random_rank_vector(const std::vector<Index>& modes, Index k, Rng& rng);

/// Force the bond singular values of t to `targets` (one vector per bond,
/// same lengths as the ranks) by repeated replacement. Returns the largest
/// relative deviation left after at most max_passes passes.
double impose_spectrum(TTTensor& t, const std::vector<Vector>& targets, double tol = 1e-10,
                       Index max_passes = 50);

/// Random TT tensor with entries uniform in [-0.5, 0.5] whose singular
/// values are then forced to sorted uniform draws in [0, 1], scaled to unit
/// norm at every bond.
TTTensor random_tt_uniform_spectrum(const std::vector<Index>& modes, Index k, std::uint64_t seed);

/// Separable order-6 tensor Q(i1..i4) * B(i5, i6) with ranks (k, k, k, 1, 2k):
/// The first three bonds carry k singular values equal to alpha, the last
/// bond's decay like beta^-i; every bond spectrum has norm alpha sqrt(k).
TTTensor rank_adaption_tensor(const std::vector<Index>& modes, Index k, double alpha, double beta,
                              std::uint64_t seed);

// ---------------------------------------------------------------------------
// experiments

enum class TargetKind { domino, generic1, generic2, generic3, random_tt, rank_adaption };

TargetKind parse_target_kind(const std::string& s);
std::string to_string(TargetKind k);

struct ExperimentSpec {
  TargetKind kind = TargetKind::domino;
  Index d = 6;
  Index n = 12;
  double c_sf = 4.0;
  Index r_p = 6;
  Index k = 6;        // rank bound for random_tt and rank_adaption
  double alpha = 1.0;
  double beta = 4.0;
  Index trials = 5;
  std::uint64_t seed = 1;
  std::vector<Algorithm> algorithms{Algorithm::salsa};
  SolverConfig solver;  // rank.r_lim holds the rank limit
  double success_tol = 1e-5;
};

/// Throws ArgumentError if the experiment is out of the generators' domains.
void validate(const ExperimentSpec& spec);

struct Target {
  std::string name;
  std::vector<Index> modes;
  TargetFn fn;
  std::optional<TTTensor> tt;  // set for representable targets
};

Target make_target(const ExperimentSpec& spec, std::uint64_t seed);

struct TrialSeeds {
  std::uint64_t target = 0;
  std::uint64_t samples = 0;
  std::uint64_t verification = 0;
  std::uint64_t solver = 0;
};

TrialSeeds trial_seeds(std::uint64_t base, Index trial);

struct TrialRecord {
  Algorithm algorithm = Algorithm::salsa;
  Index trial = 0;
  TrialSeeds seeds;
  double rel_c = 0.0;  // verification set
  double rel_p = 0.0;  // full sample set
  double seconds = 0.0;
  Verdict verdict = Verdict::max_iters;
  Index iterations = 0;
  std::vector<Index> ranks;
  std::vector<Index> stabilized;
  std::string error;  // non-empty if the trial threw
};

struct ReportRow {
  std::string target;
  Index d = 0;
  Index n = 0;
  double c_sf = 0.0;
  Algorithm algorithm = Algorithm::salsa;
  Index trials = 0;
  double geo_mean_relc = 0.0;
  double geo_dev_relc = 0.0;
  double geo_mean_relp = 0.0;
  double geo_dev_relp = 0.0;
  double mean_time_s = 0.0;
  Index successes = 0;
};

double geometric_mean(const std::vector<double>& x);
/// exp of the standard deviation of log(x).
double geometric_deviation(const std::vector<double>& x);
Index count_successes(const std::vector<double>& rel, double tol);
double median(std::vector<double> x);

/// One trial of one algorithm; exceptions are caught into `error`.
TrialRecord run_trial(const ExperimentSpec& spec, Algorithm algorithm, Index trial,
                      SolveResult* result = nullptr);

using TrialCallback = std::function<void(const TrialRecord&, const SolveResult&)>;

/// All trials of all algorithms on `jobs` worker threads. Records come back
/// ordered by (algorithm, trial); the callback runs as each trial finishes.
std::vector<TrialRecord> run_experiment(const ExperimentSpec& spec, Index jobs = 1,
                                        const TrialCallback& on_trial = {});

std::vector<ReportRow> aggregate(const ExperimentSpec& spec, const std::vector<TrialRecord>& records);

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows);
nlohmann::json to_json(const ExperimentSpec& spec);
nlohmann::json to_json(const TrialRecord& r);

}  // namespace ttsalsa
