#pragma once

#include "ttsalsa/microstep.hpp"
#include "ttsalsa/tt_tensor.hpp"

#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace ttsalsa {

/// Tuning parameters of the rank adaption and the omega schedule.
struct RankControlParams {
  double theta_virt = 0.33;
  double theta_stab = 0.99;
  double theta_stab_tilde = 0.999;
  double omega_tilde0 = 0.5;
  double f_omega = 1.1;
  double gamma_star = 1e-3;
  double beta_min = 0.02;
  double f_p2 = 2.5;
  double spectrum_tol = 0.01;
  Index window = 5;
  Index r_lim = 10;
  double fixpoint_damping = 0.5;
  Index fixpoint_steps = 3;
  bool accelerate = true;
  Index divergence_min_iter = 10;
  BoundaryRule boundary = BoundaryRule::formula;
};

/// Filters of every core and the minimal filter values of every bond.
struct FilterState {
  std::vector<Matrix> filters;  // core mu: left rank x right rank; last core is zero
  std::vector<Vector> theta;    // bond b: one entry per singular value
};

/// Filters from the bond singular values; theta_i of bond b is the larger
/// of F_b(0, i) and F_{b+1}(i, 0), where the filter of the last core is
/// taken to be zero.
FilterState minimal_filter_values(const std::vector<Vector>& sigma, const std::vector<Index>& modes,
                                  double omega, BoundaryRule rule);

/// Number of singular values per bond with theta above the threshold.
std::vector<Index> stabilized_ranks(const FilterState& fs, double threshold);

/// theta of a hypothetical last singular value equal to `value` at bond b
/// (the neighbouring largest singular values are taken from sigma).
double theta_min(const std::vector<Vector>& sigma, const std::vector<Index>& modes, double omega,
                 BoundaryRule rule, Index bond, double value);

/// Pessimistic estimate of the full residual from the training and control
/// residuals (absolute norms) and the set sizes.
double residual_estimate(double res_p, double size_p, double res_p2, double size_p2, double size_full);

/// Damped fixpoint steps for the singular value limits of all bonds.
std::vector<double> sigma_min_update(const std::vector<double>& current, const std::vector<Vector>& sigma,
                                     const std::vector<Index>& modes, double omega, double res_est,
                                     double tensor_norm, const RankControlParams& params);

/// Attractive and repelling fixpoints of s -> sigma_z / (1 + c / s^2),
/// or nothing when sigma_z^2 < 4c.
std::optional<std::pair<double, double>> filter_fixpoints(double sigma_z, double c);

/// Residual history, rank-increase milestones and the best iterate.
struct ProgressTracker {
  std::vector<double> res_p;   // absolute; entry i belongs to iteration i (0 = start)
  std::vector<double> res_p2;
  std::vector<double> milestones_p;   // residual before each rank increase
  std::vector<double> milestones_p2;
  Index best_iter = -1;
  double best_res_p2 = std::numeric_limits<double>::infinity();
  TTTensor best;
  std::vector<Index> best_stabilized;

  /// Append residuals; returns true if this is a new best control residual.
  bool record(double rp, double rp2);
  void note_rank_increase(double rp, double rp2);
  Index iteration() const { return static_cast<Index>(res_p.size()) - 1; }
};

/// Mean of the last `window` reduction factors res[i] / res[i-1].
double mean_reduction(const std::vector<double>& res, Index window);

/// Relative change of the singular spectra (bonds and entries matched by
/// index; entries present in only one of them are ignored).
double spectrum_change(const std::vector<Vector>& previous, const std::vector<Vector>& current);

/// TT degrees of freedom: sum r_{s} n_s r_{s+1} minus the gauge freedom.
double tt_dof(const std::vector<Index>& ranks, const std::vector<Index>& modes);

/// True when increases are blocked by the improvement tests or the
/// degrees-of-freedom test.
bool increases_blocked(const std::vector<Index>& ranks, const std::vector<Index>& modes,
                       const ProgressTracker& tr, double training_size, double beta_min);

/// Bonds whose rank may grow by one (empty if blocked).
std::vector<Index> unblocked_ranks(const std::vector<Index>& ranks, const std::vector<Index>& modes,
                                   const ProgressTracker& tr, double training_size,
                                   const RankControlParams& params);

struct OmegaSchedule {
  double omega_tilde = 0.5;
  double omega = 0.0;
  bool decreased = false;  // decreased in the latest update
  bool minimal = false;
  std::vector<double> sigma_min;
};

/// True if omega counts as minimal.
bool omega_is_minimal(const FilterState& fs, bool unblocked_empty, const RankControlParams& params);

/// One update of the regularization schedule after an iteration.
OmegaSchedule update_omega(const OmegaSchedule& s, const ProgressTracker& tr, const FilterState& fs,
                           double spectrum_delta, bool minimal, double tensor_norm,
                           const RankControlParams& params);

/// Add one direction at bond b whose new singular value is exactly `value`;
/// the previous singular values are kept. Throws if the bond cannot grow.
TTTensor increase_rank(const TTTensor& t, Index bond, double value, Rng& rng);

/// Truncate bond b by one (no-op with a warning at rank one).
TTTensor decrease_rank(const TTTensor& t, Index bond);

/// Truncate every bond to the given counts (values below 1 become 1).
TTTensor cut_to_ranks(const TTTensor& t, const std::vector<Index>& ranks);

}  // namespace ttsalsa
