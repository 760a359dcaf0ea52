#pragma once

#include "ttsalsa/linalg.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ttsalsa {

// Indices are 0-based throughout the C++ API. Cores are numbered
// 0..d-1 and bond b (0..d-2) joins core b and core b+1.

/// One TT core stored slice-major: slices[j] is the (left x right)
/// matrix G(j).
struct Core {
  std::vector<Matrix> slices;

  Index left() const { return slices.empty() ? 0 : slices.front().rows(); }
  Index right() const { return slices.empty() ? 0 : slices.front().cols(); }
  Index mode_size() const { return static_cast<Index>(slices.size()); }

  static Core zeros(Index left, Index n, Index right);
};

/// Left unfolding: (left * n) x right, row index l + left * j.
Matrix unfold_left(const Core& c);
/// Right unfolding: left x (right * n), column index q + right * j.
Matrix unfold_right(const Core& c);
Core fold_left(const Matrix& m, Index n);
Core fold_right(const Matrix& m, Index n);

/// Replace every slice G(j) by a * G(j) (a has left rows after the call).
void apply_left(Core& c, const Matrix& a);
/// Replace every slice G(j) by G(j) * b.
void apply_right(Core& c, const Matrix& b);

/// Tensor train with boundary ranks r_0 = r_d = 1.
class TTTensor {
 public:
  TTTensor() = default;
  explicit TTTensor(std::vector<Core> cores);

  /// Rank-one tensor with every entry equal to value.
  static TTTensor constant(const std::vector<Index>& modes, double value);
  /// Cores with entries uniform in [lo, hi]; inner_ranks has d-1 entries.
  static TTTensor random(const std::vector<Index>& modes, const std::vector<Index>& inner_ranks,
                         Rng& rng, double lo = -0.5, double hi = 0.5);

  Index order() const { return static_cast<Index>(cores_.size()); }
  Index mode_size(Index mu) const { return cores_.at(mu).mode_size(); }
  std::vector<Index> modes() const;
  /// r_0 .. r_d.
  std::vector<Index> ranks() const;
  /// r_1 .. r_{d-1}.
  std::vector<Index> inner_ranks() const;

  const Core& core(Index mu) const { return cores_.at(mu); }
  Core& core(Index mu) { return cores_.at(mu); }
  const std::vector<Core>& cores() const { return cores_; }

  /// Throws SizeError if neighbouring ranks disagree or the boundary
  /// ranks differ from one.
  void validate() const;

 private:
  std::vector<Core> cores_;
};

/// Singular values per bond plus the position of the non-orthogonal core.
/// sigma[b] holds the singular values of the matricization joining the
/// first b+1 modes with the rest, descending.
struct GaugeState {
  Index center = 0;
  std::vector<Vector> sigma;
};

struct GaugedTensor {
  TTTensor tensor;
  GaugeState gauge;
};

double evaluate(const TTTensor& t, std::span<const Index> idx);

/// Number of entries of the full tensor (as double to avoid overflow).
double full_size(const std::vector<Index>& modes);

/// Column-major vectorization of the full tensor (first index fastest).
/// Throws SizeError above max_entries.
Vector full_contract(const TTTensor& t, double max_entries = 5e7);

/// Matricization with the first `leading` modes as rows (1 <= leading < d).
Matrix unfold(const TTTensor& t, Index leading, double max_entries = 5e7);

/// Product of cores 0..mu-1: (prod of the leading mode sizes) x (left rank of
/// core mu). 1x1 for mu = 0.
Matrix interface_left(const TTTensor& t, Index mu);
/// Product of cores mu+1..d-1: (right rank of core mu) x (prod of the
/// trailing mode sizes). 1x1 for mu = d-1.
Matrix interface_right(const TTTensor& t, Index mu);

/// Move the gauge so that cores before `center` are left-orthogonal and
/// cores after it right-orthogonal. The tensor is unchanged; ranks are
/// kept unless a rank exceeds what its neighbour can support. All bond
/// singular values are reported (zeros for rank-deficient bonds).
GaugedTensor orthogonalize(const TTTensor& t, Index center);

/// Cheap QR-only gauge move (no singular values are computed).
TTTensor orthogonalize_qr(const TTTensor& t, Index center);

/// Standard representation: every bond carries its exact singular
/// values, numerically zero values (below 1e-14 * largest) are removed,
/// and the center is the last core.
GaugedTensor standard_representation(const TTTensor& t);

/// TT-SVD truncation to at most the given inner ranks.
TTTensor truncate(const TTTensor& t, const std::vector<Index>& max_inner_ranks);

/// TT-SVD truncation with a relative Frobenius error budget.
TTTensor truncate_tolerance(const TTTensor& t, double rel_tol, Index max_rank);

double frobenius_norm(const TTTensor& t);

/// Sum of two TT tensors (ranks add).
TTTensor add(const TTTensor& a, const TTTensor& b, double beta = 1.0);

/// Largest rank each bond can carry given its mode sizes.
std::vector<Index> max_feasible_ranks(const std::vector<Index>& modes);

void save_tt(std::ostream& out, const TTTensor& t);
TTTensor load_tt(std::istream& in);
void save_tt_file(const std::string& path, const TTTensor& t);
TTTensor load_tt_file(const std::string& path);

}  // namespace ttsalsa
