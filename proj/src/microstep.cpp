#include "ttsalsa/microstep.hpp"

#include "ttsalsa/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ttsalsa {

namespace {

constexpr double kRatioCap = 1e30;

double sum_sizes(const std::vector<Index>& modes, Index first, Index last) {
  double s = 0.0;
  for (Index k = first; k < last; ++k) s += static_cast<double>(modes[k]);
  return s;
}

double product_sizes(const std::vector<Index>& modes, Index first, Index last) {
  double p = 1.0;
  for (Index k = first; k < last; ++k) p *= static_cast<double>(modes[k]);
  return p;
}

// Design matrix with rows kron(right_s, left_s) in column-major vec order.
Matrix design_matrix(const Matrix& left_rows, const Matrix& right_rows) {
  const Index a = left_rows.rows(), rl = left_rows.cols(), rr = right_rows.cols();
  Matrix k(a, rl * rr);
  for (Index q = 0; q < rr; ++q) {
    k.middleCols(q * rl, rl).noalias() = right_rows.col(q).asDiagonal() * left_rows;
  }
  return k;
}

}  // namespace

BoundaryRule parse_boundary_rule(const std::string& s) {
  if (s == "remark") return BoundaryRule::remark;
  if (s == "formula") return BoundaryRule::formula;
  if (s == "matrix") return BoundaryRule::matrix;
  throw ArgumentError("unknown boundary rule '" + s + "'");
}

std::string to_string(BoundaryRule r) {
  switch (r) {
    case BoundaryRule::remark: return "remark";
    case BoundaryRule::formula: return "formula";
    case BoundaryRule::matrix: return "matrix";
  }
  return "formula";
}

RegularizationWeights zeta_constants(const std::vector<Index>& modes, Index mu, double omega,
                                     BoundaryRule rule) {
  const Index d = static_cast<Index>(modes.size());
  if (mu < 0 || mu >= d) throw ArgumentError("zeta_constants: core index out of range");
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw ArgumentError("zeta_constants: omega must be finite and >= 0");
  const double total = sum_sizes(modes, 0, d);
  const double w2 = omega * omega;
  RegularizationWeights w;
  if (rule == BoundaryRule::matrix) {
    if (d != 2) throw ArgumentError("zeta_constants: matrix rule needs d = 2");
    // the factor update of one side is weighted by the size of that side
    if (mu == 0) {
      w.zeta2 = w2 * static_cast<double>(modes[0]) / total;
    } else {
      w.zeta1 = w2 * static_cast<double>(modes[1]) / total;
    }
    return w;
  }
  w.zeta1 = w2 * sum_sizes(modes, 0, mu) / total;
  w.zeta2 = w2 * sum_sizes(modes, mu + 1, d) / total;
  w.zeta12 = w.zeta1 * w.zeta2;
  if (rule == BoundaryRule::remark && d >= 3) {
    if (mu == 0) {
      w.zeta2 = 0.0;
      w.zeta12 = 0.0;
    }
    if (mu == d - 1) {
      w.zeta1 = 0.0;
      w.zeta12 = 0.0;
    }
  }
  return w;
}

double regularization_ratio(double zeta, double sigma) {
  if (zeta == 0.0) return 0.0;
  const double s2 = sigma * sigma;
  if (s2 <= 0.0) return kRatioCap;
  return std::min(zeta / s2, kRatioCap);
}

LocalSystem build_local_system(const TTTensor& t, const GaugeState& gauge, Index mu, Index j,
                               const SampleSet& p, const RegularizationWeights& w) {
  const Index d = t.order();
  if (mu < 0 || mu >= d) throw ArgumentError("build_local_system: core index out of range");
  if (j < 0 || j >= t.mode_size(mu)) throw ArgumentError("build_local_system: slice out of range");
  if (t.modes() != p.modes()) throw SizeError("build_local_system: sample shape differs");
  const Index rl = t.core(mu).left(), rr = t.core(mu).right();
  const auto pos = p.slice(mu, j);
  const Index a = static_cast<Index>(pos.size());
  LocalSystem sys;
  sys.left_rows.resize(a, rl);
  sys.right_rows.resize(a, rr);
  sys.values.resize(a);
  for (Index k = 0; k < a; ++k) {
    const Index s = pos[k];
    Eigen::RowVectorXd l = Eigen::RowVectorXd::Ones(1);
    for (Index nu = 0; nu < mu; ++nu) l = l * t.core(nu).slices[p.index(s, nu)];
    Vector r = Vector::Ones(1);
    for (Index nu = d - 1; nu > mu; --nu) r = t.core(nu).slices[p.index(s, nu)] * r;
    sys.left_rows.row(k) = l;
    sys.right_rows.row(k) = r.transpose();
    sys.values(k) = p.values().empty() ? 0.0 : p.value(s);
  }
  sys.weights = w;
  sys.n_left = product_sizes(p.modes(), 0, mu);
  sys.n_right = product_sizes(p.modes(), mu + 1, d);
  sys.sigma_left = Vector::Ones(rl);
  sys.sigma_right = Vector::Ones(rr);
  if (w.any()) {
    if (static_cast<Index>(gauge.sigma.size()) != d - 1) throw SizeError("build_local_system: gauge has wrong bond count");
    if (mu > 0) sys.sigma_left = gauge.sigma[mu - 1];
    if (mu < d - 1) sys.sigma_right = gauge.sigma[mu];
    if (sys.sigma_left.size() != rl || sys.sigma_right.size() != rr) {
      throw SizeError("build_local_system: singular values do not match the core ranks");
    }
  }
  return sys;
}

void assemble_normal(const LocalSystem& sys, Matrix& a, Vector& rhs) {
  const Index rl = sys.left_rows.cols(), rr = sys.right_rows.cols(), m = rl * rr;
  const Matrix k = design_matrix(sys.left_rows, sys.right_rows);
  a.setZero(m, m);
  a.selfadjointView<Eigen::Lower>().rankUpdate(k.transpose());
  a.triangularView<Eigen::StrictlyUpper>() = a.transpose();
  rhs.noalias() = k.transpose() * sys.values;

  const RegularizationWeights& w = sys.weights;
  const double count = static_cast<double>(sys.left_rows.rows());
  if (w.zeta1 > 0.0) {
    const Matrix cr = sys.right_rows.transpose() * sys.right_rows;
    for (Index l = 0; l < rl; ++l) {
      const double c = regularization_ratio(w.zeta1, sys.sigma_left(l)) / sys.n_left;
      for (Index q = 0; q < rr; ++q) {
        for (Index q2 = 0; q2 < rr; ++q2) a(l + rl * q, l + rl * q2) += c * cr(q, q2);
      }
    }
  }
  if (w.zeta2 > 0.0) {
    const Matrix cl = sys.left_rows.transpose() * sys.left_rows;
    for (Index q = 0; q < rr; ++q) {
      const double c = regularization_ratio(w.zeta2, sys.sigma_right(q)) / sys.n_right;
      a.block(rl * q, rl * q, rl, rl) += c * cl;
    }
  }
  if (w.zeta12 > 0.0) {
    const double rho = count / (sys.n_left * sys.n_right);
    for (Index q = 0; q < rr; ++q) {
      for (Index l = 0; l < rl; ++l) {
        const double sl2 = sys.sigma_left(l) * sys.sigma_left(l);
        const double sr2 = sys.sigma_right(q) * sys.sigma_right(q);
        const double denom = sl2 * sr2;
        const double ratio = denom > 0.0 ? std::min(w.zeta12 / denom, kRatioCap) : kRatioCap;
        a(l + rl * q, l + rl * q) += rho * ratio;
      }
    }
  }
}

Matrix solve_slice(const LocalSystem& sys) {
  const Index rl = sys.left_rows.cols(), rr = sys.right_rows.cols();
  if (sys.right_rows.rows() != sys.left_rows.rows() || sys.values.size() != sys.left_rows.rows()) {
    throw SizeError("solve_slice: inconsistent local system");
  }
  Vector x;
  if (!sys.weights.any()) {
    if (sys.left_rows.rows() == 0) return Matrix::Zero(rl, rr);
    const Matrix k = design_matrix(sys.left_rows, sys.right_rows);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(k);
    x = cod.solve(sys.values);
  } else {
    Matrix a;
    Vector rhs;
    assemble_normal(sys, a, rhs);
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() == Eigen::Success) {
      x = llt.solve(rhs);
    } else {
      Eigen::CompleteOrthogonalDecomposition<Matrix> cod(a);
      x = cod.solve(rhs);
    }
  }
  if (!x.allFinite()) throw NumericError("solve_slice: non-finite solution");
  return Eigen::Map<const Matrix>(x.data(), rl, rr);
}

Matrix filter_matrix(const Vector& sigma_left, const Vector& sigma_right,
                     const RegularizationWeights& w) {
  Matrix f(sigma_left.size(), sigma_right.size());
  for (Index i = 0; i < sigma_left.size(); ++i) {
    for (Index k = 0; k < sigma_right.size(); ++k) {
      const double sl = sigma_left(i), sr = sigma_right(k);
      double denom = 1.0 + regularization_ratio(w.zeta1, sl) + regularization_ratio(w.zeta2, sr);
      if (w.zeta12 > 0.0) {
        const double p = sl * sl * sr * sr;
        denom += p > 0.0 ? std::min(w.zeta12 / p, kRatioCap) : kRatioCap;
      }
      f(i, k) = 1.0 / denom;
    }
  }
  return f;
}

ItripReport itrip_check(const std::vector<Matrix>& left_rows, const std::vector<Matrix>& right_rows) {
  if (left_rows.size() != right_rows.size()) throw SizeError("itrip_check: slice count mismatch");
  ItripReport rep;
  for (size_t j = 0; j < left_rows.size(); ++j) {
    const Index m = left_rows[j].cols() * right_rows[j].cols();
    if (left_rows[j].rows() < m) {
      rep.holds = false;
      rep.margins.push_back(0.0);
      continue;
    }
    const Matrix k = design_matrix(left_rows[j], right_rows[j]);
    Eigen::JacobiSVD<Matrix> svd(k);
    const Vector& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    rep.margins.push_back(smin);
    if (!(smin > 1e-10 * std::max(1.0, s(0)))) rep.holds = false;
  }
  return rep;
}

void slice_interfaces(const TTTensor& t, Index mu, const SampleSet& p, std::vector<Matrix>& left_rows,
                      std::vector<Matrix>& right_rows) {
  left_rows.clear();
  right_rows.clear();
  const GaugeState none;
  for (Index j = 0; j < t.mode_size(mu); ++j) {
    LocalSystem sys = build_local_system(t, none, mu, j, p, RegularizationWeights{});
    left_rows.push_back(std::move(sys.left_rows));
    right_rows.push_back(std::move(sys.right_rows));
  }
}

}  // namespace ttsalsa
