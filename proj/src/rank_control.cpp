#include "ttsalsa/rank_control.hpp"

#include "ttsalsa/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ttsalsa {

FilterState minimal_filter_values(const std::vector<Vector>& sigma, const std::vector<Index>& modes,
                                  double omega, BoundaryRule rule) {
  const Index d = static_cast<Index>(modes.size());
  if (static_cast<Index>(sigma.size()) != d - 1) throw SizeError("minimal_filter_values: need d-1 spectra");
  FilterState fs;
  for (Index mu = 0; mu < d; ++mu) {
    const Vector sl = mu > 0 ? sigma[mu - 1] : Vector::Ones(1);
    const Vector sr = mu < d - 1 ? sigma[mu] : Vector::Ones(1);
    if (mu == d - 1 && d > 1) {
      fs.filters.push_back(Matrix::Zero(sl.size(), sr.size()));
    } else {
      fs.filters.push_back(filter_matrix(sl, sr, zeta_constants(modes, mu, omega, rule)));
    }
  }
  for (Index b = 0; b + 1 < d; ++b) {
    const Index r = sigma[b].size();
    Vector th(r);
    for (Index i = 0; i < r; ++i) th(i) = std::max(fs.filters[b](0, i), fs.filters[b + 1](i, 0));
    fs.theta.push_back(th);
  }
  return fs;
}

std::vector<Index> stabilized_ranks(const FilterState& fs, double threshold) {
  std::vector<Index> out;
  for (const Vector& th : fs.theta) out.push_back((th.array() > threshold).count());
  return out;
}

double theta_min(const std::vector<Vector>& sigma, const std::vector<Index>& modes, double omega,
                 BoundaryRule rule, Index bond, double value) {
  const Index d = static_cast<Index>(modes.size());
  if (bond < 0 || bond + 1 >= d) throw ArgumentError("theta_min: bond out of range");
  Vector v(1);
  v(0) = value;
  Vector sl = Vector::Ones(1);
  if (bond > 0) sl(0) = sigma[bond - 1](0);
  const double f1 = filter_matrix(sl, v, zeta_constants(modes, bond, omega, rule))(0, 0);
  double f2 = 0.0;
  if (bond + 1 < d - 1) {
    Vector sr(1);
    sr(0) = sigma[bond + 1](0);
    f2 = filter_matrix(v, sr, zeta_constants(modes, bond + 1, omega, rule))(0, 0);
  }
  return std::max(f1, f2);
}

double residual_estimate(double res_p, double size_p, double res_p2, double size_p2, double size_full) {
  const double a = std::sqrt(size_full / size_p2) * res_p2;
  const double b = std::sqrt(size_full / size_p) * res_p;
  if (a <= 0.0) return 0.0;
  if (b <= 0.0) return a;
  return std::pow(a, 1.5) / std::sqrt(b);
}

std::vector<double> sigma_min_update(const std::vector<double>& current, const std::vector<Vector>& sigma,
                                     const std::vector<Index>& modes, double omega, double res_est,
                                     double tensor_norm, const RankControlParams& params) {
  const double total = std::accumulate(modes.begin(), modes.end(), 0.0,
                                       [](double acc, Index n) { return acc + static_cast<double>(n); });
  const double floor = 1e-14 * tensor_norm;
  std::vector<double> out = current;
  for (size_t b = 0; b < out.size(); ++b) {
    double s = std::max(out[b], floor);
    for (Index step = 0; step < params.fixpoint_steps; ++step) {
      const double th = theta_min(sigma, modes, omega, params.boundary, static_cast<Index>(b), s);
      const double mapped = (1.0 - th) * res_est / total;
      s = params.fixpoint_damping * s + (1.0 - params.fixpoint_damping) * mapped;
      s = std::max(s, floor);
    }
    out[b] = s;
  }
  return out;
}

std::optional<std::pair<double, double>> filter_fixpoints(double sigma_z, double c) {
  const double disc = sigma_z * sigma_z - 4.0 * c;
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  return std::make_pair(0.5 * sigma_z + 0.5 * root, 0.5 * sigma_z - 0.5 * root);
}

bool ProgressTracker::record(double rp, double rp2) {
  res_p.push_back(rp);
  res_p2.push_back(rp2);
  if (rp2 < best_res_p2 || best_iter < 0) {
    best_res_p2 = rp2;
    best_iter = iteration();
    return true;
  }
  return false;
}

void ProgressTracker::note_rank_increase(double rp, double rp2) {
  milestones_p.push_back(rp);
  milestones_p2.push_back(rp2);
}

double mean_reduction(const std::vector<double>& res, Index window) {
  const Index n = static_cast<Index>(res.size());
  const Index k = std::min<Index>(window, n - 1);
  if (k <= 0) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (Index i = n - k; i < n; ++i) {
    if (res[i - 1] > 0.0) {
      sum += res[i] / res[i - 1];
    } else {
      sum += res[i] > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    }
  }
  return sum / static_cast<double>(k);
}

double spectrum_change(const std::vector<Vector>& previous, const std::vector<Vector>& current) {
  double num = 0.0, den = 0.0;
  const size_t bonds = std::min(previous.size(), current.size());
  for (size_t b = 0; b < bonds; ++b) {
    const Index m = std::min(previous[b].size(), current[b].size());
    num += (previous[b].head(m) - current[b].head(m)).squaredNorm();
    den += previous[b].head(m).squaredNorm();
  }
  if (den <= 0.0) return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return std::sqrt(num / den);
}

double tt_dof(const std::vector<Index>& ranks, const std::vector<Index>& modes) {
  double dof = 0.0;
  for (size_t s = 0; s < modes.size(); ++s) {
    dof += static_cast<double>(ranks[s]) * static_cast<double>(modes[s]) * static_cast<double>(ranks[s + 1]);
  }
  for (size_t b = 1; b + 1 < ranks.size(); ++b) dof -= static_cast<double>(ranks[b] * ranks[b]);
  return dof;
}

bool increases_blocked(const std::vector<Index>& ranks, const std::vector<Index>& modes,
                       const ProgressTracker& tr, double training_size, double beta_min) {
  const Index d = static_cast<Index>(modes.size());
  Index sum_r = 0;
  for (Index b = 1; b < d; ++b) sum_r += ranks[b];
  if (sum_r < 2 * (d - 1)) return false;
  if (tt_dof(ranks, modes) > training_size / 1.2) return true;
  // the milestone of the (k-1)-th increase serves as reference value number k
  const Index m = sum_r - (d - 1);
  const Index pos = m - 2;
  if (pos < 0 || pos >= static_cast<Index>(tr.milestones_p.size()) || tr.res_p.empty()) return false;
  const double ref_p = tr.milestones_p[pos], ref_p2 = tr.milestones_p2[pos];
  const double beta_p = ref_p > 0.0 ? std::abs(1.0 - tr.res_p.back() / ref_p) : 0.0;
  const double beta_p2 = ref_p2 > 0.0 ? std::abs(1.0 - tr.res_p2.back() / ref_p2) : 0.0;
  return beta_p < beta_min || beta_p2 < beta_min;
}

std::vector<Index> unblocked_ranks(const std::vector<Index>& ranks, const std::vector<Index>& modes,
                                   const ProgressTracker& tr, double training_size,
                                   const RankControlParams& params) {
  std::vector<Index> out;
  if (increases_blocked(ranks, modes, tr, training_size, params.beta_min)) return out;
  const Index d = static_cast<Index>(modes.size());
  for (Index b = 0; b + 1 < d; ++b) {
    const Index cap = std::min({modes[b] * ranks[b], modes[b + 1] * ranks[b + 2], params.r_lim});
    if (ranks[b + 1] + 1 <= cap) out.push_back(b);
  }
  return out;
}

bool omega_is_minimal(const FilterState& fs, bool unblocked_empty, const RankControlParams& params) {
  for (Index s : stabilized_ranks(fs, params.theta_stab)) {
    if (s >= params.r_lim) return true;
  }
  if (!unblocked_empty) return false;
  for (const Vector& th : fs.theta) {
    if (!(th.array() > params.theta_stab_tilde).all()) return false;
  }
  return true;
}

OmegaSchedule update_omega(const OmegaSchedule& s, const ProgressTracker& tr, const FilterState& fs,
                           double spectrum_delta, bool minimal, double tensor_norm,
                           const RankControlParams& params) {
  OmegaSchedule out = s;
  out.decreased = false;
  out.minimal = minimal;
  if (!minimal) {
    bool stagnant = false;
    if (static_cast<Index>(tr.res_p.size()) > params.window && spectrum_delta < params.spectrum_tol) {
      const double gp = mean_reduction(tr.res_p, params.window);
      const double gp2 = mean_reduction(tr.res_p2, params.window);
      stagnant = std::abs(1.0 - gp) < params.gamma_star || std::abs(1.0 - gp2) < params.gamma_star;
    }
    const size_t n = tr.res_p.size();
    const bool increased = n >= 2 && tr.res_p[n - 1] > tr.res_p[n - 2];
    if (stagnant || increased) {
      double factor = params.f_omega;
      if (params.accelerate) {
        double lowest = 1.0;
        for (const Vector& th : fs.theta) {
          for (Index i = 0; i < th.size(); ++i) {
            if (th(i) < params.theta_virt) lowest = std::min(lowest, th(i));
          }
        }
        if (lowest < 0.5 * params.theta_virt) factor *= params.f_omega;
      }
      out.omega_tilde /= factor;
      out.decreased = true;
    }
  }
  out.omega = out.omega_tilde * tensor_norm;
  return out;
}

TTTensor increase_rank(const TTTensor& t, Index bond, double value, Rng& rng) {
  const Index d = t.order();
  if (bond < 0 || bond + 1 >= d) throw ArgumentError("increase_rank: bond out of range");
  if (!(value >= 0.0) || !std::isfinite(value)) throw ArgumentError("increase_rank: value must be finite and >= 0");
  TTTensor o = orthogonalize_qr(t, bond);
  Core& left = o.core(bond);
  Core& right = o.core(bond + 1);
  const Index n_l = left.mode_size(), n_r = right.mode_size();
  const Matrix lu = unfold_left(left);
  const Matrix ru = unfold_right(right);
  if (lu.cols() + 1 > lu.rows() || ru.rows() + 1 > ru.cols()) {
    throw ArgumentError("increase_rank: bond cannot carry a larger rank");
  }
  const Svd svd = thin_svd(lu);
  const Vector u = random_orthogonal_direction(svd.u, rng);
  const Vector v = random_orthogonal_direction(ru.transpose(), rng);
  const Index r = lu.cols();
  Matrix new_left(lu.rows(), r + 1);
  new_left.leftCols(r) = svd.u;
  new_left.col(r) = u;
  Matrix new_right(r + 1, ru.cols());
  new_right.topRows(r) = svd.s.asDiagonal() * svd.v.transpose() * ru;
  new_right.row(r) = value * v.transpose();
  left = fold_left(new_left, n_l);
  right = fold_right(new_right, n_r);
  o.validate();
  return o;
}

TTTensor decrease_rank(const TTTensor& t, Index bond) {
  const Index d = t.order();
  if (bond < 0 || bond + 1 >= d) throw ArgumentError("decrease_rank: bond out of range");
  std::vector<Index> r = t.inner_ranks();
  if (r[bond] <= 1) {
    spdlog::warn("decrease_rank: bond {} already has rank one", bond);
    return t;
  }
  TTTensor o = orthogonalize_qr(t, bond);
  const Svd svd = thin_svd(unfold_left(o.core(bond)));
  const Index keep = std::min<Index>(r[bond] - 1, svd.s.size());
  const Index n_l = o.mode_size(bond);
  o.core(bond) = fold_left(svd.u.leftCols(keep), n_l);
  apply_left(o.core(bond + 1), svd.s.head(keep).asDiagonal() * svd.v.leftCols(keep).transpose());
  o.validate();
  return o;
}

TTTensor cut_to_ranks(const TTTensor& t, const std::vector<Index>& ranks) {
  std::vector<Index> r = ranks;
  for (auto& x : r) x = std::max<Index>(x, 1);
  return truncate(t, r);
}

}  // namespace ttsalsa
