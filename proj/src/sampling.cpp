#include "ttsalsa/sampling.hpp"

#include "ttsalsa/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace ttsalsa {

namespace {

bool lex_less(const Index* a, const Index* b, Index d) {
  for (Index mu = 0; mu < d; ++mu) {
    if (a[mu] != b[mu]) return a[mu] < b[mu];
  }
  return false;
}

bool lex_equal(const Index* a, const Index* b, Index d) {
  return std::equal(a, a + d, b);
}

std::vector<Index> sorted_order(const std::vector<Index>& pts, Index d) {
  const Index count = d == 0 ? 0 : static_cast<Index>(pts.size()) / d;
  std::vector<Index> order(static_cast<size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return lex_less(&pts[a * d], &pts[b * d], d); });
  return order;
}

}  // namespace

SampleSet::SampleSet(std::vector<Index> modes, std::vector<Index> points, std::vector<double> values)
    : modes_(std::move(modes)), points_(std::move(points)), values_(std::move(values)) {
  const Index d = order();
  if (d < 1) throw ArgumentError("SampleSet: order must be at least 1");
  for (Index n : modes_) {
    if (n < 1) throw ArgumentError("SampleSet: mode sizes must be positive");
  }
  if (points_.size() % static_cast<size_t>(d) != 0) throw SizeError("SampleSet: ragged point data");
  const Index count = size();
  if (!values_.empty() && static_cast<Index>(values_.size()) != count) {
    throw SizeError("SampleSet: value count differs from point count");
  }
  for (Index s = 0; s < count; ++s) {
    for (Index mu = 0; mu < d; ++mu) {
      const Index i = points_[s * d + mu];
      if (i < 0 || i >= modes_[mu]) throw ArgumentError("SampleSet: index out of range");
    }
  }
  const auto order_idx = sorted_order(points_, d);
  for (size_t k = 1; k < order_idx.size(); ++k) {
    if (lex_equal(&points_[order_idx[k - 1] * d], &points_[order_idx[k] * d], d)) {
      throw ArgumentError("SampleSet: duplicate point");
    }
  }
  build_slices();
}

void SampleSet::build_slices() {
  const Index d = order(), count = size();
  slice_offsets_.assign(static_cast<size_t>(d), {});
  slice_positions_.assign(static_cast<size_t>(d), {});
  for (Index mu = 0; mu < d; ++mu) {
    auto& off = slice_offsets_[mu];
    auto& pos = slice_positions_[mu];
    off.assign(static_cast<size_t>(modes_[mu] + 1), 0);
    for (Index s = 0; s < count; ++s) ++off[points_[s * d + mu] + 1];
    for (Index j = 0; j < modes_[mu]; ++j) off[j + 1] += off[j];
    pos.resize(static_cast<size_t>(count));
    std::vector<Index> fill(off.begin(), off.end() - 1);
    for (Index s = 0; s < count; ++s) pos[fill[points_[s * d + mu]]++] = s;
  }
}

std::span<const Index> SampleSet::slice(Index mu, Index j) const {
  const auto& off = slice_offsets_.at(mu);
  const Index b = off.at(j), e = off.at(j + 1);
  return {slice_positions_[mu].data() + b, static_cast<size_t>(e - b)};
}

SampleSet SampleSet::with_values(std::vector<double> values) const {
  if (static_cast<Index>(values.size()) != size()) throw SizeError("with_values: count mismatch");
  SampleSet out = *this;
  out.values_ = std::move(values);
  return out;
}

SampleSet SampleSet::subset(std::span<const Index> positions) const {
  const Index d = order();
  std::vector<Index> pts;
  std::vector<double> vals;
  pts.reserve(positions.size() * static_cast<size_t>(d));
  for (Index s : positions) {
    if (s < 0 || s >= size()) throw ArgumentError("subset: position out of range");
    auto p = point(s);
    pts.insert(pts.end(), p.begin(), p.end());
    if (!values_.empty()) vals.push_back(values_[s]);
  }
  return SampleSet(modes_, std::move(pts), std::move(vals));
}

double SampleSet::value_norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

SampleSet full_grid(const std::vector<Index>& modes) {
  const double total = full_size(modes);
  if (total > 5e7) throw SizeError("full_grid: grid too large");
  const Index d = static_cast<Index>(modes.size());
  const Index count = static_cast<Index>(total);
  std::vector<Index> pts(static_cast<size_t>(count * d));
  std::vector<Index> idx(static_cast<size_t>(d), 0);
  for (Index s = 0; s < count; ++s) {
    // last index fastest gives lexicographic order
    for (Index mu = 0; mu < d; ++mu) pts[s * d + mu] = idx[mu];
    for (Index mu = d - 1; mu >= 0; --mu) {
      if (++idx[mu] < modes[mu]) break;
      idx[mu] = 0;
    }
  }
  return SampleSet(modes, std::move(pts));
}

SampleSet generate_quasi_random(const std::vector<Index>& modes, double c_sf, Index r_p,
                                std::uint64_t seed) {
  if (modes.empty()) throw ArgumentError("generate_quasi_random: order must be at least 1");
  if (c_sf < 1.0) throw ArgumentError("generate_quasi_random: C_sf must be at least 1");
  if (r_p < 1) throw ArgumentError("generate_quasi_random: r_P must be at least 1");
  const Index d = static_cast<Index>(modes.size());
  const Index per_index = static_cast<Index>(std::llround(c_sf * static_cast<double>(r_p * r_p)));
  double requested = 0.0;
  for (Index n : modes) requested += static_cast<double>(n) * static_cast<double>(per_index);
  const double total = full_size(modes);
  if (requested >= total) {
    spdlog::warn("sample request ({}) reaches the grid size ({}); using the full grid", requested,
                 total);
    return full_grid(modes);
  }
  Rng rng(seed);
  std::vector<std::uniform_int_distribution<Index>> dist;
  for (Index n : modes) dist.emplace_back(0, n - 1);
  std::vector<Index> raw;
  raw.reserve(static_cast<size_t>(requested) * static_cast<size_t>(d));
  for (Index mu = 0; mu < d; ++mu) {
    for (Index i = 0; i < modes[mu]; ++i) {
      for (Index k = 0; k < per_index; ++k) {
        for (Index nu = 0; nu < d; ++nu) raw.push_back(nu == mu ? i : dist[nu](rng));
      }
    }
  }
  const auto order = sorted_order(raw, d);
  std::vector<Index> pts;
  pts.reserve(raw.size());
  const Index* prev = nullptr;
  for (Index s : order) {
    const Index* p = &raw[s * d];
    if (prev != nullptr && lex_equal(prev, p, d)) continue;
    pts.insert(pts.end(), p, p + d);
    prev = p;
  }
  return SampleSet(modes, std::move(pts));
}

std::pair<SampleSet, SampleSet> split_control(const SampleSet& p, double fraction,
                                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 0.5)) throw ArgumentError("split_control: fraction must be in (0, 1/2)");
  const Index count = p.size();
  if (count < 2) throw ArgumentError("split_control: need at least two samples");
  Index m = static_cast<Index>(std::llround(fraction * static_cast<double>(count)));
  m = std::clamp<Index>(m, 1, count - 1);
  std::vector<Index> perm(static_cast<size_t>(count));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Index> control(perm.begin(), perm.begin() + m);
  std::vector<Index> train(perm.begin() + m, perm.end());
  std::sort(control.begin(), control.end());
  std::sort(train.begin(), train.end());
  return {p.subset(train), p.subset(control)};
}

SampleSet attach_values(const SampleSet& p, const TargetFn& target) {
  std::vector<double> vals(static_cast<size_t>(p.size()));
  for (Index s = 0; s < p.size(); ++s) {
    vals[s] = target(p.point(s));
    if (!std::isfinite(vals[s])) throw NumericError("attach_values: target returned a non-finite value");
  }
  return p.with_values(std::move(vals));
}

SampleSet attach_values(const SampleSet& p, const TTTensor& target) {
  if (target.modes() != p.modes()) throw SizeError("attach_values: target shape differs");
  return p.with_values([&] {
    Vector v = evaluate_samples(target, p);
    return std::vector<double>(v.data(), v.data() + v.size());
  }());
}

Vector evaluate_samples(const TTTensor& t, const SampleSet& p) {
  if (t.modes() != p.modes()) throw SizeError("evaluate_samples: shape differs");
  const Index d = t.order();
  Vector out(p.size());
  Eigen::RowVectorXd v, w;
  for (Index s = 0; s < p.size(); ++s) {
    v = t.core(0).slices[p.index(s, 0)].row(0);
    for (Index mu = 1; mu < d; ++mu) {
      w.noalias() = v * t.core(mu).slices[p.index(s, mu)];
      v.swap(w);
    }
    out(s) = v(0);
  }
  return out;
}

double residual_on_set(const TTTensor& t, const SampleSet& p) {
  if (p.size() > 0 && p.values().empty()) throw ArgumentError("residual_on_set: set has no values");
  const Vector v = evaluate_samples(t, p);
  double s = 0.0;
  for (Index k = 0; k < p.size(); ++k) {
    const double r = v(k) - p.value(k);
    s += r * r;
  }
  return std::sqrt(s);
}

double relative_residual(const TTTensor& t, const SampleSet& p) {
  const double nrm = p.value_norm();
  const double res = residual_on_set(t, p);
  return nrm > 0.0 ? res / nrm : res;
}

void save_samples(std::ostream& out, const SampleSet& p) {
  out << "samples " << p.order();
  for (Index n : p.modes()) out << ' ' << n;
  out << ' ' << p.size() << '\n';
  char buf[40];
  for (Index s = 0; s < p.size(); ++s) {
    for (Index mu = 0; mu < p.order(); ++mu) out << p.index(s, mu) + 1 << ' ';
    std::snprintf(buf, sizeof(buf), "%.17g", p.values().empty() ? 0.0 : p.value(s));
    out << buf << '\n';
  }
  if (!out) throw FormatError("save_samples: write failed");
}

SampleSet load_samples(std::istream& in) {
  std::string tag;
  Index d = 0, count = 0;
  if (!(in >> tag) || tag != "samples") throw FormatError("load_samples: missing 'samples' header");
  if (!(in >> d) || d < 1) throw FormatError("load_samples: bad order");
  std::vector<Index> modes(static_cast<size_t>(d));
  for (auto& n : modes) {
    if (!(in >> n) || n < 1) throw FormatError("load_samples: bad mode size");
  }
  if (!(in >> count) || count < 0) throw FormatError("load_samples: bad count");
  std::vector<Index> pts(static_cast<size_t>(count * d));
  std::vector<double> vals(static_cast<size_t>(count));
  for (Index s = 0; s < count; ++s) {
    for (Index mu = 0; mu < d; ++mu) {
      Index i = 0;
      if (!(in >> i)) throw FormatError("load_samples: truncated point data");
      if (i < 1 || i > modes[mu]) throw FormatError("load_samples: index out of range");
      pts[s * d + mu] = i - 1;
    }
    if (!(in >> vals[s])) throw FormatError("load_samples: missing value");
  }
  try {
    return SampleSet(std::move(modes), std::move(pts), std::move(vals));
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("load_samples: ") + e.what());
  }
}

void save_samples_file(const std::string& path, const SampleSet& p) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  save_samples(out, p);
}

SampleSet load_samples_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return load_samples(in);
}

}  // namespace ttsalsa
