#pragma once

#include "ttsalsa/sampling.hpp"
#include "ttsalsa/tt_tensor.hpp"

#include <string>
#include <vector>

namespace ttsalsa {

/// How the regularization constants are set at the first and last core.
///  - remark:  for d >= 3 all three constants vanish at the first and the
///             last core.
///  - formula: the interior formula is used everywhere; at the boundary
///             cores this already gives zeta1 = 0 (first) or zeta2 = 0
///             (last) and zeta12 = 0.
///  - matrix:  d = 2 only; the two factor updates of the stable matrix
///             completion scheme.
enum class BoundaryRule { remark, formula, matrix };

BoundaryRule parse_boundary_rule(const std::string& s);
std::string to_string(BoundaryRule r);

struct RegularizationWeights {
  double zeta1 = 0.0;   // left singular values
  double zeta2 = 0.0;   // right singular values
  double zeta12 = 0.0;  // both

  bool any() const { return zeta1 > 0.0 || zeta2 > 0.0 || zeta12 > 0.0; }
};

/// Constants for core mu (0-based) from the mode sizes and omega:
///   zeta1 = omega^2 * (sum of sizes before mu) / (sum of all sizes),
///   zeta2 = omega^2 * (sum of sizes after mu) / (sum of all sizes),
///   zeta12 = zeta1 * zeta2, followed by the boundary rule.
RegularizationWeights zeta_constants(const std::vector<Index>& modes, Index mu, double omega,
                                     BoundaryRule rule);

/// Ratio zeta / sigma^2 with a hard cap (and 0 when zeta is 0).
double regularization_ratio(double zeta, double sigma);

/// Sampled data of one slice of core mu together with the singular values
/// adjacent to that core.
struct LocalSystem {
  Matrix left_rows;   // a x r_L, row s = left interface at sample s
  Matrix right_rows;  // a x r_R, row s = right interface at sample s (transposed)
  Vector values;      // a
  Vector sigma_left;  // r_L
  Vector sigma_right; // r_R
  RegularizationWeights weights;
  double n_left = 1.0;   // product of the mode sizes before the core
  double n_right = 1.0;  // product of the mode sizes after the core
};

/// Gather the local system of slice j of core mu. For weights with any()
/// true the tensor must be in standard form around mu (gauge.sigma
/// holding the singular values of the neighbouring bonds).
LocalSystem build_local_system(const TTTensor& t, const GaugeState& gauge, Index mu, Index j,
                               const SampleSet& p, const RegularizationWeights& w);

/// Normal matrix and right-hand side of the regularized local problem
/// in the column-major unknown vec(N), N of size r_L x r_R.
void assemble_normal(const LocalSystem& sys, Matrix& a, Vector& rhs);

/// Minimizer of the regularized local problem. Without regularization
/// this is the minimum-norm least-squares solution obtained from a
/// rank-revealing factorization.
Matrix solve_slice(const LocalSystem& sys);

/// F_ik = 1 / (1 + zeta1/sl_i^2 + zeta2/sr_k^2 + zeta12/(sl_i^2 sr_k^2)).
Matrix filter_matrix(const Vector& sigma_left, const Vector& sigma_right,
                     const RegularizationWeights& w);

struct ItripReport {
  bool holds = true;
  std::vector<double> margins;  // smallest singular value of each slice design
};

/// Each slice design matrix (rows kron(right_s, left_s)) must have full
/// column rank r_L * r_R.
ItripReport itrip_check(const std::vector<Matrix>& left_rows, const std::vector<Matrix>& right_rows);

/// Collect the per-slice interface rows of core mu for itrip_check.
void slice_interfaces(const TTTensor& t, Index mu, const SampleSet& p, std::vector<Matrix>& left_rows,
                      std::vector<Matrix>& right_rows);

}  // namespace ttsalsa
