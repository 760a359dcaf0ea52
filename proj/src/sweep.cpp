#include "ttsalsa/errors.hpp"
#include "ttsalsa/solvers.hpp"

#include <algorithm>

namespace ttsalsa {

namespace {

double product_sizes(const std::vector<Index>& modes, Index first, Index last) {
  double p = 1.0;
  for (Index k = first; k < last; ++k) p *= static_cast<double>(modes[k]);
  return p;
}

// Runs micro-steps with per-sample interface caches: left_[mu] holds the
// product of cores 0..mu-1 at every sample, right_[mu] the product of
// cores mu+1..d-1 (one row per sample).
class SweepEngine {
 public:
  SweepEngine(const SampleSet& p, SweepOptions opt) : p_(p), opt_(std::move(opt)) {}

  TTTensor run(TTTensor t) {
    const Index d = t.order();
    if (d < 2) throw ArgumentError("sweep: order must be at least 2");
    if (t.modes() != p_.modes()) throw SizeError("sweep: sample shape differs from tensor shape");
    if (!opt_.sigma_min.empty() && static_cast<Index>(opt_.sigma_min.size()) != d - 1) {
      throw SizeError("sweep: need one singular value limit per bond");
    }
    left_.assign(static_cast<size_t>(d), RowMatrix());
    right_.assign(static_cast<size_t>(d), RowMatrix());
    if (opt_.order == SweepOrder::forward) {
      forward_half(t, 0, d - 1);
    } else {
      const Index h = d / 2;
      forward_half(t, 0, h - 1);
      backward_half(t, d - 1, h - 1);
    }
    return t;
  }

  TTTensor single(TTTensor t, Index mu) {
    const Index d = t.order();
    if (mu < 0 || mu >= d) throw ArgumentError("microstep: core index out of range");
    if (t.modes() != p_.modes()) throw SizeError("microstep: sample shape differs from tensor shape");
    t = orthogonalize_qr(t, mu);
    left_.assign(static_cast<size_t>(d), RowMatrix());
    right_.assign(static_cast<size_t>(d), RowMatrix());
    for (Index nu = 0; nu <= mu; ++nu) update_left(t, nu);
    for (Index nu = d - 1; nu >= mu; --nu) update_right(t, nu);
    Vector sl, sr;
    standardize(t, mu, sl, sr);
    update_left(t, mu);
    update_right(t, mu);
    t.core(mu) = solve_core(t, mu, sl, sr);
    return t;
  }

 private:
  void forward_half(TTTensor& t, Index first, Index last) {
    const Index d = t.order();
    t = orthogonalize_qr(t, first);
    for (Index nu = 0; nu <= first; ++nu) update_left(t, nu);
    for (Index nu = d - 1; nu >= first; --nu) update_right(t, nu);
    for (Index mu = first; mu <= last; ++mu) {
      Vector sl, sr;
      standardize(t, mu, sl, sr);
      update_left(t, mu);
      update_right(t, mu);
      Core n = solve_core(t, mu, sl, sr);
      finish_forward(t, mu, std::move(n));
    }
  }

  void backward_half(TTTensor& t, Index first, Index last) {
    const Index d = t.order();
    t = orthogonalize_qr(t, first);
    for (Index nu = 0; nu <= first; ++nu) update_left(t, nu);
    for (Index nu = d - 1; nu >= first; --nu) update_right(t, nu);
    for (Index mu = first; mu >= last; --mu) {
      Vector sl, sr;
      standardize(t, mu, sl, sr);
      update_left(t, mu);
      update_right(t, mu);
      Core n = solve_core(t, mu, sl, sr);
      finish_backward(t, mu, std::move(n));
    }
  }

  void update_left(const TTTensor& t, Index mu) {
    const Index count = p_.size();
    if (mu == 0) {
      left_[0] = RowMatrix::Ones(count, 1);
      return;
    }
    const Core& c = t.core(mu - 1);
    const RowMatrix& prev = left_[mu - 1];
    RowMatrix& out = left_[mu];
    out.resize(count, c.right());
    for (Index s = 0; s < count; ++s) {
      out.row(s).noalias() = prev.row(s) * c.slices[p_.index(s, mu - 1)];
    }
  }

  void update_right(const TTTensor& t, Index mu) {
    const Index count = p_.size();
    const Index d = t.order();
    if (mu == d - 1) {
      right_[mu] = RowMatrix::Ones(count, 1);
      return;
    }
    const Core& c = t.core(mu + 1);
    const RowMatrix& next = right_[mu + 1];
    RowMatrix& out = right_[mu];
    out.resize(count, c.left());
    for (Index s = 0; s < count; ++s) {
      out.row(s).noalias() = next.row(s) * c.slices[p_.index(s, mu + 1)].transpose();
    }
  }

  // Rotate the neighbours so that both unfoldings of core mu are diagonal
  // times orthonormal; sl and sr receive the adjacent singular values.
  void standardize(TTTensor& t, Index mu, Vector& sl, Vector& sr) {
    const Index d = t.order();
    sl = Vector::Ones(t.core(mu).left());
    sr = Vector::Ones(t.core(mu).right());
    if (!opt_.standard_form) return;
    if (mu > 0) {
      const Svd svd = thin_svd(unfold_right(t.core(mu)));
      apply_right(t.core(mu - 1), svd.u);
      t.core(mu) = fold_right(svd.s.asDiagonal() * svd.v.transpose(), t.mode_size(mu));
      sl = svd.s;
    }
    if (mu < d - 1) {
      const Svd svd = thin_svd(unfold_left(t.core(mu)));
      t.core(mu) = fold_left(svd.u * svd.s.asDiagonal(), t.mode_size(mu));
      apply_left(t.core(mu + 1), svd.v.transpose());
      sr = svd.s;
    }
  }

  Core solve_core(const TTTensor& t, Index mu, const Vector& sl, const Vector& sr) {
    const Index d = t.order();
    const Index rl = t.core(mu).left(), rr = t.core(mu).right();
    RegularizationWeights w;
    if (opt_.standard_form && opt_.omega > 0.0) w = zeta_constants(p_.modes(), mu, opt_.omega, opt_.boundary);
    const double n_left = product_sizes(p_.modes(), 0, mu);
    const double n_right = product_sizes(p_.modes(), mu + 1, d);
    const RowMatrix& lc = left_[mu];
    const RowMatrix& rc = right_[mu];
    Core out = Core::zeros(rl, t.mode_size(mu), rr);
    LocalSystem sys;
    sys.weights = w;
    sys.n_left = n_left;
    sys.n_right = n_right;
    sys.sigma_left = sl;
    sys.sigma_right = sr;
    for (Index j = 0; j < t.mode_size(mu); ++j) {
      const auto pos = p_.slice(mu, j);
      const Index a = static_cast<Index>(pos.size());
      sys.left_rows.resize(a, rl);
      sys.right_rows.resize(a, rr);
      sys.values.resize(a);
      for (Index k = 0; k < a; ++k) {
        const Index s = pos[k];
        sys.left_rows.row(k) = lc.row(s);
        sys.right_rows.row(k) = rc.row(s);
        sys.values(k) = p_.value(s);
      }
      out.slices[j] = solve_slice(sys);
    }
    return out;
  }

  void finish_forward(TTTensor& t, Index mu, Core n) {
    const Index d = t.order();
    const Index nm = t.mode_size(mu);
    const bool clamp = !opt_.sigma_min.empty();
    if (opt_.standard_form) {
      if (mu > 0 && clamp) {
        const Svd svd = thin_svd(unfold_right(n));
        const Vector s = svd.s.cwiseMax(opt_.sigma_min[mu - 1]);
        n = fold_right(svd.u * s.asDiagonal() * svd.v.transpose(), nm);
      }
      if (mu < d - 1) {
        const Svd svd = thin_svd(unfold_left(n));
        const Vector s = clamp ? Vector(svd.s.cwiseMax(opt_.sigma_min[mu])) : svd.s;
        n = fold_left(svd.u, nm);
        apply_left(t.core(mu + 1), s.asDiagonal() * svd.v.transpose());
      }
    } else if (mu < d - 1) {
      Matrix q, r;
      thin_qr(unfold_left(n), q, r);
      n = fold_left(q, nm);
      apply_left(t.core(mu + 1), r);
    }
    t.core(mu) = std::move(n);
  }

  void finish_backward(TTTensor& t, Index mu, Core n) {
    const Index d = t.order();
    const Index nm = t.mode_size(mu);
    const bool clamp = !opt_.sigma_min.empty();
    if (opt_.standard_form) {
      if (mu < d - 1 && clamp) {
        const Svd svd = thin_svd(unfold_left(n));
        const Vector s = svd.s.cwiseMax(opt_.sigma_min[mu]);
        n = fold_left(svd.u * s.asDiagonal() * svd.v.transpose(), nm);
      }
      if (mu > 0) {
        const Svd svd = thin_svd(unfold_right(n));
        const Vector s = clamp ? Vector(svd.s.cwiseMax(opt_.sigma_min[mu - 1])) : svd.s;
        n = fold_right(svd.v.transpose(), nm);
        apply_right(t.core(mu - 1), svd.u * s.asDiagonal());
      }
    } else if (mu > 0) {
      Matrix q, r;
      thin_qr(unfold_right(n).transpose(), q, r);
      n = fold_right(q.transpose(), nm);
      apply_right(t.core(mu - 1), r.transpose());
    }
    t.core(mu) = std::move(n);
  }

  const SampleSet& p_;
  SweepOptions opt_;
  std::vector<RowMatrix> left_;
  std::vector<RowMatrix> right_;
};

void require_values(const SampleSet& p) {
  if (p.size() > 0 && p.values().empty()) throw ArgumentError("sweep: samples carry no values");
}

}  // namespace

TTTensor salsa_sweep(const TTTensor& t, const SampleSet& train, const SweepOptions& opt) {
  require_values(train);
  SweepEngine engine(train, opt);
  TTTensor out = engine.run(t);
  for (const Core& c : out.cores()) {
    for (const Matrix& s : c.slices) {
      if (!s.allFinite()) throw NumericError("sweep produced non-finite core entries");
    }
  }
  return out;
}

TTTensor als_sweep(const TTTensor& t, const SampleSet& train, SweepOrder order) {
  SweepOptions opt;
  opt.standard_form = false;
  opt.order = order;
  return salsa_sweep(t, train, opt);
}

TTTensor microstep_update(const TTTensor& t, const SampleSet& train, Index mu, double omega,
                          BoundaryRule rule) {
  require_values(train);
  SweepOptions opt;
  opt.omega = omega;
  opt.boundary = rule;
  opt.standard_form = omega > 0.0;
  SweepEngine engine(train, opt);
  return engine.single(t, mu);
}

}  // namespace ttsalsa
