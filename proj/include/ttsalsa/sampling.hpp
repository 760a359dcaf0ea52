#pragma once

#include "ttsalsa/tt_tensor.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ttsalsa {

/// Immutable set of distinct multi-indices, optionally with values, plus a
/// per-mode slice index listing the positions whose index in that mode
/// equals j.
class SampleSet {
 public:
  SampleSet() = default;
  /// points holds count * d indices, one point after another.
  SampleSet(std::vector<Index> modes, std::vector<Index> points, std::vector<double> values = {});

  Index order() const { return static_cast<Index>(modes_.size()); }
  Index size() const { return order() == 0 ? 0 : static_cast<Index>(points_.size()) / order(); }
  const std::vector<Index>& modes() const { return modes_; }

  std::span<const Index> point(Index s) const {
    return {points_.data() + s * order(), static_cast<size_t>(order())};
  }
  Index index(Index s, Index mu) const { return points_[s * order() + mu]; }
  const std::vector<Index>& raw_points() const { return points_; }

  bool has_values() const { return !values_.empty() || size() == 0; }
  const std::vector<double>& values() const { return values_; }
  double value(Index s) const { return values_[s]; }

  /// Positions of the samples with index j in mode mu.
  std::span<const Index> slice(Index mu, Index j) const;

  SampleSet with_values(std::vector<double> values) const;
  SampleSet subset(std::span<const Index> positions) const;

  /// Euclidean norm of the attached values.
  double value_norm() const;

 private:
  void build_slices();

  std::vector<Index> modes_;
  std::vector<Index> points_;
  std::vector<double> values_;
  std::vector<std::vector<Index>> slice_offsets_;
  std::vector<std::vector<Index>> slice_positions_;
};

/// For every mode and every index in it, draw round(c_sf * r_p^2) random
/// completions of the remaining indices; duplicates are removed. Falls
/// back to the full grid when the request is at least the grid size.
SampleSet generate_quasi_random(const std::vector<Index>& modes, double c_sf, Index r_p,
                                std::uint64_t seed);

SampleSet full_grid(const std::vector<Index>& modes);

/// Random disjoint split into (training, control) with
/// |control| = max(1, round(fraction * |P|)).
std::pair<SampleSet, SampleSet> split_control(const SampleSet& p, double fraction,
                                              std::uint64_t seed);

using TargetFn = std::function<double(std::span<const Index>)>;

SampleSet attach_values(const SampleSet& p, const TargetFn& target);
SampleSet attach_values(const SampleSet& p, const TTTensor& target);

Vector evaluate_samples(const TTTensor& t, const SampleSet& p);

/// Absolute residual norm over the set.
double residual_on_set(const TTTensor& t, const SampleSet& p);
/// Residual norm divided by the norm of the sampled values.
double relative_residual(const TTTensor& t, const SampleSet& p);

void save_samples(std::ostream& out, const SampleSet& p);
SampleSet load_samples(std::istream& in);
void save_samples_file(const std::string& path, const SampleSet& p);
SampleSet load_samples_file(const std::string& path);

}  // namespace ttsalsa
