#include "ttsalsa/tt_tensor.hpp"

#include "ttsalsa/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace ttsalsa {

Core Core::zeros(Index left, Index n, Index right) {
  Core c;
  c.slices.assign(static_cast<size_t>(n), Matrix::Zero(left, right));
  return c;
}

Matrix unfold_left(const Core& c) {
  const Index k1 = c.left(), k2 = c.right(), n = c.mode_size();
  Matrix m(k1 * n, k2);
  for (Index j = 0; j < n; ++j) m.middleRows(j * k1, k1) = c.slices[j];
  return m;
}

Matrix unfold_right(const Core& c) {
  const Index k1 = c.left(), k2 = c.right(), n = c.mode_size();
  Matrix m(k1, k2 * n);
  for (Index j = 0; j < n; ++j) m.middleCols(j * k2, k2) = c.slices[j];
  return m;
}

Core fold_left(const Matrix& m, Index n) {
  if (n <= 0 || m.rows() % n != 0) throw SizeError("fold_left: rows not divisible by mode size");
  const Index k1 = m.rows() / n;
  Core c;
  c.slices.resize(static_cast<size_t>(n));
  for (Index j = 0; j < n; ++j) c.slices[j] = m.middleRows(j * k1, k1);
  return c;
}

Core fold_right(const Matrix& m, Index n) {
  if (n <= 0 || m.cols() % n != 0) throw SizeError("fold_right: cols not divisible by mode size");
  const Index k2 = m.cols() / n;
  Core c;
  c.slices.resize(static_cast<size_t>(n));
  for (Index j = 0; j < n; ++j) c.slices[j] = m.middleCols(j * k2, k2);
  return c;
}

void apply_left(Core& c, const Matrix& a) {
  for (auto& s : c.slices) s = a * s;
}

void apply_right(Core& c, const Matrix& b) {
  for (auto& s : c.slices) s = s * b;
}

TTTensor::TTTensor(std::vector<Core> cores) : cores_(std::move(cores)) { validate(); }

void TTTensor::validate() const {
  if (cores_.empty()) throw SizeError("TTTensor: order must be at least 1");
  for (size_t mu = 0; mu < cores_.size(); ++mu) {
    const Core& c = cores_[mu];
    if (c.slices.empty()) throw SizeError("TTTensor: empty core");
    for (const auto& s : c.slices) {
      if (s.rows() != c.left() || s.cols() != c.right()) {
        throw SizeError("TTTensor: slices of one core differ in shape");
      }
    }
    if (c.left() < 1 || c.right() < 1) throw SizeError("TTTensor: ranks must be positive");
    if (mu > 0 && cores_[mu - 1].right() != c.left()) {
      throw SizeError("TTTensor: rank mismatch between cores " + std::to_string(mu - 1) + " and " +
                      std::to_string(mu));
    }
  }
  if (cores_.front().left() != 1 || cores_.back().right() != 1) {
    throw SizeError("TTTensor: boundary ranks must be one");
  }
}

TTTensor TTTensor::constant(const std::vector<Index>& modes, double value) {
  if (modes.empty()) throw ArgumentError("constant: order must be at least 1");
  std::vector<Core> cores;
  for (size_t mu = 0; mu < modes.size(); ++mu) {
    if (modes[mu] < 1) throw ArgumentError("constant: mode sizes must be positive");
    Core c = Core::zeros(1, modes[mu], 1);
    for (auto& s : c.slices) s(0, 0) = (mu == 0) ? value : 1.0;
    cores.push_back(std::move(c));
  }
  return TTTensor(std::move(cores));
}

TTTensor TTTensor::random(const std::vector<Index>& modes, const std::vector<Index>& inner_ranks,
                          Rng& rng, double lo, double hi) {
  const size_t d = modes.size();
  if (d == 0 || inner_ranks.size() + 1 != d) throw SizeError("random: need d-1 inner ranks");
  std::uniform_real_distribution<double> unif(lo, hi);
  std::vector<Core> cores;
  for (size_t mu = 0; mu < d; ++mu) {
    const Index l = mu == 0 ? 1 : inner_ranks[mu - 1];
    const Index r = mu + 1 == d ? 1 : inner_ranks[mu];
    Core c = Core::zeros(l, modes[mu], r);
    for (auto& s : c.slices) {
      for (Index q = 0; q < r; ++q) {
        for (Index p = 0; p < l; ++p) s(p, q) = unif(rng);
      }
    }
    cores.push_back(std::move(c));
  }
  return TTTensor(std::move(cores));
}

std::vector<Index> TTTensor::modes() const {
  std::vector<Index> n;
  for (const auto& c : cores_) n.push_back(c.mode_size());
  return n;
}

std::vector<Index> TTTensor::ranks() const {
  std::vector<Index> r;
  for (const auto& c : cores_) r.push_back(c.left());
  r.push_back(cores_.empty() ? 1 : cores_.back().right());
  return r;
}

std::vector<Index> TTTensor::inner_ranks() const {
  std::vector<Index> r;
  for (size_t mu = 1; mu < cores_.size(); ++mu) r.push_back(cores_[mu].left());
  return r;
}

double evaluate(const TTTensor& t, std::span<const Index> idx) {
  const Index d = t.order();
  if (static_cast<Index>(idx.size()) != d) throw SizeError("evaluate: index length differs from order");
  Eigen::RowVectorXd v;
  for (Index mu = 0; mu < d; ++mu) {
    const Index i = idx[mu];
    if (i < 0 || i >= t.mode_size(mu)) throw ArgumentError("evaluate: index out of range");
    if (mu == 0) {
      v = t.core(0).slices[i].row(0);
    } else {
      v = v * t.core(mu).slices[i];
    }
  }
  return v(0);
}

double full_size(const std::vector<Index>& modes) {
  double s = 1.0;
  for (Index n : modes) s *= static_cast<double>(n);
  return s;
}

namespace {

// Product of cores 0..count-1 with rows (i_0, ..., i_{count-1}) and i_0 fastest.
Matrix left_product(const TTTensor& t, Index count, double max_entries) {
  Matrix m = Matrix::Ones(1, 1);
  for (Index mu = 0; mu < count; ++mu) {
    const Core& c = t.core(mu);
    const Index rows = m.rows(), n = c.mode_size();
    if (static_cast<double>(rows) * n * c.right() > max_entries) {
      throw SizeError("contraction exceeds the entry limit");
    }
    Matrix next(rows * n, c.right());
    for (Index j = 0; j < n; ++j) next.middleRows(j * rows, rows).noalias() = m * c.slices[j];
    m = std::move(next);
  }
  return m;
}

// Product of cores first..d-1 with columns (i_first, ..., i_{d-1}) and i_first fastest.
Matrix right_product(const TTTensor& t, Index first, double max_entries) {
  const Index d = t.order();
  Matrix m = Matrix::Ones(1, 1);
  for (Index mu = d - 1; mu >= first; --mu) {
    const Core& c = t.core(mu);
    const Index cols = m.cols(), n = c.mode_size();
    if (static_cast<double>(cols) * n * c.left() > max_entries) {
      throw SizeError("contraction exceeds the entry limit");
    }
    Matrix next(c.left(), n * cols);
    for (Index j = 0; j < n; ++j) {
      const Matrix block = c.slices[j] * m;
      for (Index col = 0; col < cols; ++col) next.col(j + n * col) = block.col(col);
    }
    m = std::move(next);
  }
  return m;
}

}  // namespace

Vector full_contract(const TTTensor& t, double max_entries) {
  return left_product(t, t.order(), max_entries).col(0);
}

Matrix unfold(const TTTensor& t, Index leading, double max_entries) {
  if (leading < 1 || leading >= t.order()) throw ArgumentError("unfold: leading must be in [1, d-1]");
  const Matrix l = left_product(t, leading, max_entries);
  const Matrix r = right_product(t, leading, max_entries);
  if (static_cast<double>(l.rows()) * r.cols() > max_entries) {
    throw SizeError("unfold: matricization exceeds the entry limit");
  }
  return l * r;
}

Matrix interface_left(const TTTensor& t, Index mu) {
  if (mu < 0 || mu >= t.order()) throw ArgumentError("interface_left: mode out of range");
  return left_product(t, mu, std::numeric_limits<double>::infinity());
}

Matrix interface_right(const TTTensor& t, Index mu) {
  if (mu < 0 || mu >= t.order()) throw ArgumentError("interface_right: mode out of range");
  return right_product(t, mu + 1, std::numeric_limits<double>::infinity());
}

namespace {

// Make core mu left-orthogonal by QR and push the factor into core mu+1.
void qr_push_right(std::vector<Core>& cores, Index mu) {
  const Index n = cores[mu].mode_size();
  Matrix q, r;
  thin_qr(unfold_left(cores[mu]), q, r);
  cores[mu] = fold_left(q, n);
  apply_left(cores[mu + 1], r);
}

// Make core mu right-orthogonal by QR of the transpose and push into core mu-1.
void qr_push_left(std::vector<Core>& cores, Index mu) {
  const Index n = cores[mu].mode_size();
  Matrix q, r;
  thin_qr(unfold_right(cores[mu]).transpose(), q, r);
  cores[mu] = fold_right(q.transpose(), n);
  apply_right(cores[mu - 1], r.transpose());
}

std::vector<Core> right_orthogonal_cores(const TTTensor& t) {
  std::vector<Core> cores = t.cores();
  for (Index mu = t.order() - 1; mu > 0; --mu) qr_push_left(cores, mu);
  return cores;
}

}  // namespace

TTTensor orthogonalize_qr(const TTTensor& t, Index center) {
  const Index d = t.order();
  if (center < 0 || center >= d) throw ArgumentError("orthogonalize: center out of range");
  std::vector<Core> cores = t.cores();
  for (Index mu = 0; mu < center; ++mu) qr_push_right(cores, mu);
  for (Index mu = d - 1; mu > center; --mu) qr_push_left(cores, mu);
  return TTTensor(std::move(cores));
}

GaugedTensor orthogonalize(const TTTensor& t, Index center) {
  const Index d = t.order();
  if (center < 0 || center >= d) throw ArgumentError("orthogonalize: center out of range");
  std::vector<Core> cores = right_orthogonal_cores(t);
  GaugeState g;
  g.sigma.resize(static_cast<size_t>(d - 1));
  // left-to-right: the right part is orthonormal so these are exact
  for (Index mu = 0; mu + 1 < d; ++mu) {
    const Index n = cores[mu].mode_size();
    Svd svd = thin_svd(unfold_left(cores[mu]));
    cores[mu] = fold_left(svd.u, n);
    apply_left(cores[mu + 1], svd.s.asDiagonal() * svd.v.transpose());
    g.sigma[mu] = svd.s;
  }
  for (Index mu = d - 1; mu > center; --mu) {
    const Index n = cores[mu].mode_size();
    Svd svd = thin_svd(unfold_right(cores[mu]));
    cores[mu] = fold_right(svd.v.transpose(), n);
    apply_right(cores[mu - 1], svd.u * svd.s.asDiagonal());
    g.sigma[mu - 1] = svd.s;
  }
  g.center = center;
  return {TTTensor(std::move(cores)), std::move(g)};
}

GaugedTensor standard_representation(const TTTensor& t) {
  const Index d = t.order();
  std::vector<Core> cores = right_orthogonal_cores(t);
  GaugeState g;
  g.sigma.resize(static_cast<size_t>(d - 1));
  for (Index mu = 0; mu + 1 < d; ++mu) {
    const Index n = cores[mu].mode_size();
    Svd svd = thin_svd(unfold_left(cores[mu]));
    const double smax = svd.s.size() > 0 ? svd.s(0) : 0.0;
    Index keep = 0;
    while (keep < svd.s.size() && svd.s(keep) > 1e-14 * smax) ++keep;
    keep = std::max<Index>(keep, 1);
    const Matrix u = svd.u.leftCols(keep);
    const Vector s = svd.s.head(keep);
    cores[mu] = fold_left(u, n);
    apply_left(cores[mu + 1], s.asDiagonal() * svd.v.leftCols(keep).transpose());
    g.sigma[mu] = s;
  }
  g.center = d - 1;
  return {TTTensor(std::move(cores)), std::move(g)};
}

TTTensor truncate(const TTTensor& t, const std::vector<Index>& max_inner_ranks) {
  const Index d = t.order();
  if (static_cast<Index>(max_inner_ranks.size()) != d - 1) throw SizeError("truncate: need d-1 ranks");
  std::vector<Core> cores = right_orthogonal_cores(t);
  for (Index mu = 0; mu + 1 < d; ++mu) {
    if (max_inner_ranks[mu] < 1) throw ArgumentError("truncate: ranks must be positive");
    const Index n = cores[mu].mode_size();
    Svd svd = thin_svd(unfold_left(cores[mu]));
    const Index keep = std::min<Index>(max_inner_ranks[mu], svd.s.size());
    cores[mu] = fold_left(svd.u.leftCols(keep), n);
    apply_left(cores[mu + 1], svd.s.head(keep).asDiagonal() * svd.v.leftCols(keep).transpose());
  }
  return TTTensor(std::move(cores));
}

TTTensor truncate_tolerance(const TTTensor& t, double rel_tol, Index max_rank) {
  const Index d = t.order();
  std::vector<Core> cores = right_orthogonal_cores(t);
  const double total = unfold_left(cores[0]).norm();
  const double budget = d > 1 ? rel_tol * total / std::sqrt(static_cast<double>(d - 1)) : 0.0;
  for (Index mu = 0; mu + 1 < d; ++mu) {
    const Index n = cores[mu].mode_size();
    Svd svd = thin_svd(unfold_left(cores[mu]));
    Index keep = svd.s.size();
    double tail = 0.0;
    while (keep > 1 && std::sqrt(tail + svd.s(keep - 1) * svd.s(keep - 1)) <= budget) {
      tail += svd.s(keep - 1) * svd.s(keep - 1);
      --keep;
    }
    keep = std::min(keep, std::max<Index>(max_rank, 1));
    cores[mu] = fold_left(svd.u.leftCols(keep), n);
    apply_left(cores[mu + 1], svd.s.head(keep).asDiagonal() * svd.v.leftCols(keep).transpose());
  }
  return TTTensor(std::move(cores));
}

double frobenius_norm(const TTTensor& t) {
  const TTTensor o = orthogonalize_qr(t, t.order() - 1);
  return unfold_left(o.core(t.order() - 1)).norm();
}

TTTensor add(const TTTensor& a, const TTTensor& b, double beta) {
  const Index d = a.order();
  if (b.order() != d || a.modes() != b.modes()) throw SizeError("add: shapes differ");
  std::vector<Core> cores;
  for (Index mu = 0; mu < d; ++mu) {
    const Core& ca = a.core(mu);
    const Core& cb = b.core(mu);
    const Index l = mu == 0 ? 1 : ca.left() + cb.left();
    const Index r = mu + 1 == d ? 1 : ca.right() + cb.right();
    Core c = Core::zeros(l, ca.mode_size(), r);
    for (Index j = 0; j < ca.mode_size(); ++j) {
      Matrix& s = c.slices[j];
      const double w = mu == 0 ? beta : 1.0;
      if (d == 1) {
        s(0, 0) = ca.slices[j](0, 0) + w * cb.slices[j](0, 0);
      } else if (mu == 0) {
        s.leftCols(ca.right()) = ca.slices[j];
        s.rightCols(cb.right()) = w * cb.slices[j];
      } else if (mu + 1 == d) {
        s.topRows(ca.left()) = ca.slices[j];
        s.bottomRows(cb.left()) = cb.slices[j];
      } else {
        s.topLeftCorner(ca.left(), ca.right()) = ca.slices[j];
        s.bottomRightCorner(cb.left(), cb.right()) = cb.slices[j];
      }
    }
    cores.push_back(std::move(c));
  }
  return TTTensor(std::move(cores));
}

std::vector<Index> max_feasible_ranks(const std::vector<Index>& modes) {
  const size_t d = modes.size();
  std::vector<Index> r(d > 0 ? d - 1 : 0);
  for (size_t b = 0; b + 1 < d; ++b) {
    double left = 1.0, right = 1.0;
    for (size_t s = 0; s <= b; ++s) left *= static_cast<double>(modes[s]);
    for (size_t s = b + 1; s < d; ++s) right *= static_cast<double>(modes[s]);
    const double m = std::min({left, right, 1e9});
    r[b] = static_cast<Index>(m);
  }
  return r;
}

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void save_tt(std::ostream& out, const TTTensor& t) {
  out << "tt " << t.order();
  for (Index n : t.modes()) out << ' ' << n;
  for (Index r : t.ranks()) out << ' ' << r;
  out << '\n';
  for (const Core& c : t.cores()) {
    for (const Matrix& s : c.slices) {
      bool first = true;
      for (Index p = 0; p < s.rows(); ++p) {
        for (Index q = 0; q < s.cols(); ++q) {
          if (!first) out << ' ';
          out << fmt17(s(p, q));
          first = false;
        }
      }
      out << '\n';
    }
  }
  if (!out) throw FormatError("save_tt: write failed");
}

TTTensor load_tt(std::istream& in) {
  std::string tag;
  Index d = 0;
  if (!(in >> tag) || tag != "tt") throw FormatError("load_tt: missing 'tt' header");
  if (!(in >> d) || d < 1) throw FormatError("load_tt: bad order");
  std::vector<Index> n(static_cast<size_t>(d)), r(static_cast<size_t>(d + 1));
  for (auto& x : n) {
    if (!(in >> x) || x < 1) throw FormatError("load_tt: bad mode size");
  }
  for (auto& x : r) {
    if (!(in >> x) || x < 1) throw FormatError("load_tt: bad rank");
  }
  if (r.front() != 1 || r.back() != 1) throw FormatError("load_tt: boundary ranks must be one");
  std::vector<Core> cores;
  for (Index mu = 0; mu < d; ++mu) {
    Core c = Core::zeros(r[mu], n[mu], r[mu + 1]);
    for (auto& s : c.slices) {
      for (Index p = 0; p < s.rows(); ++p) {
        for (Index q = 0; q < s.cols(); ++q) {
          if (!(in >> s(p, q))) throw FormatError("load_tt: truncated core data");
        }
      }
    }
    cores.push_back(std::move(c));
  }
  return TTTensor(std::move(cores));
}

void save_tt_file(const std::string& path, const TTTensor& t) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  save_tt(out, t);
}

TTTensor load_tt_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  return load_tt(in);
}

}  // namespace ttsalsa
