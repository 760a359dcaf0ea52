#include "ttsalsa/errors.hpp"
#include "ttsalsa/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace ttsalsa {

namespace {

// Row s holds the product of cores 0..mu-1 at sample s.
RowMatrix left_rows(const TTTensor& t, const SampleSet& p, Index mu) {
  RowMatrix out = RowMatrix::Ones(p.size(), 1);
  for (Index nu = 0; nu < mu; ++nu) {
    const Core& c = t.core(nu);
    RowMatrix next(p.size(), c.right());
    for (Index s = 0; s < p.size(); ++s) next.row(s).noalias() = out.row(s) * c.slices[p.index(s, nu)];
    out.swap(next);
  }
  return out;
}

// Row s holds the product of cores mu+1..d-1 at sample s (transposed).
RowMatrix right_rows(const TTTensor& t, const SampleSet& p, Index mu) {
  RowMatrix out = RowMatrix::Ones(p.size(), 1);
  for (Index nu = t.order() - 1; nu > mu; --nu) {
    const Core& c = t.core(nu);
    RowMatrix next(p.size(), c.left());
    for (Index s = 0; s < p.size(); ++s) {
      next.row(s).noalias() = out.row(s) * c.slices[p.index(s, nu)].transpose();
    }
    out.swap(next);
  }
  return out;
}

bool can_grow(const TTTensor& t, Index bond, Index r_lim) {
  const auto r = t.ranks();
  const auto& n = t.modes();
  const Index cap = std::min({n[bond] * r[bond], n[bond + 1] * r[bond + 2], r_lim});
  return r[bond + 1] + 1 <= cap;
}

double relative(double res, double nrm) { return nrm > 0.0 ? res / nrm : res; }

}  // namespace

GreedyProbe greedy_rank_estimate(const TTTensor& t, const SampleSet& train, Index bond) {
  const Index d = t.order();
  if (bond < 0 || bond + 1 >= d) throw ArgumentError("greedy probe: bond out of range");
  if (t.modes() != train.modes()) throw SizeError("greedy probe: sample shape differs from tensor shape");
  const TTTensor g = orthogonalize_qr(t, bond);
  const RowMatrix lr = left_rows(g, train, bond);
  const RowMatrix rr = right_rows(g, train, bond + 1);
  const Vector fit = evaluate_samples(g, train);
  const Index rl = g.core(bond).left(), rrk = g.core(bond + 1).right();
  const Index n1 = g.mode_size(bond), n2 = g.mode_size(bond + 1);

  // Samples grouped by the pair of positions at the two cores.
  std::vector<std::vector<Index>> groups(static_cast<size_t>(n1 * n2));
  for (Index s = 0; s < train.size(); ++s) groups[train.index(s, bond) + n1 * train.index(s, bond + 1)].push_back(s);

  GreedyProbe probe;
  probe.bond = bond;
  probe.stack = Matrix::Zero(rl * n1, rrk * n2);
  for (Index j = 0; j < n2; ++j) {
    for (Index i = 0; i < n1; ++i) {
      const auto& grp = groups[i + n1 * j];
      if (grp.empty()) continue;
      Matrix block = Matrix::Zero(rl, rrk);
      for (Index s : grp) block.noalias() += (train.value(s) - fit(s)) * lr.row(s).transpose() * rr.row(s);
      double num = 0.0, den = 0.0;
      for (Index s : grp) {
        const double gs = lr.row(s) * block * rr.row(s).transpose();
        num += (train.value(s) - fit(s)) * gs;
        den += gs * gs;
      }
      const double alpha = den > 0.0 ? num / den : 0.0;
      probe.stack.block(rl * i, rrk * j, rl, rrk) = alpha * block;
    }
  }
  const Svd svd = thin_svd(probe.stack);
  probe.sigma_plus = svd.s.size() > 0 ? svd.s(0) : 0.0;
  probe.left = svd.u.col(0);
  probe.right = svd.v.col(0);
  return probe;
}

TTTensor greedy_increase(const TTTensor& t, const GreedyProbe& probe) {
  const Index b = probe.bond;
  TTTensor g = orthogonalize_qr(t, b);
  Core& c1 = g.core(b);
  Core& c2 = g.core(b + 1);
  const Index n1 = c1.mode_size(), n2 = c2.mode_size();
  if (probe.left.size() != c1.left() * n1 || probe.right.size() != c2.right() * n2) {
    throw SizeError("greedy increase: probe does not match the tensor");
  }
  const double root = std::sqrt(probe.sigma_plus);
  Matrix l1 = unfold_left(c1);
  Matrix l1n(l1.rows(), l1.cols() + 1);
  l1n << l1, root * probe.left;
  Matrix r2 = unfold_right(c2);
  Matrix r2n(r2.rows() + 1, r2.cols());
  r2n << r2, root * probe.right.transpose();
  c1 = fold_left(l1n, n1);
  c2 = fold_right(r2n, n2);
  g.validate();
  return g;
}

SolveResult greedy_als_solve(const SampleSet& train, const SampleSet& control, const SolverConfig& cfg) {
  if (train.modes() != control.modes()) throw SizeError("training and control sets differ in shape");
  if (train.order() < 2) throw ArgumentError("order must be at least 2");
  if (train.size() < 1 || control.size() < 1) throw ArgumentError("training and control sets must be non-empty");
  const auto start = std::chrono::steady_clock::now();
  const RankControlParams& params = cfg.rank;
  const double np = train.value_norm(), np2 = control.value_norm();
  const double rms = np / std::sqrt(static_cast<double>(train.size()));

  SolveResult res;
  res.algorithm = Algorithm::greedy_als;
  TTTensor t = TTTensor::constant(train.modes(), rms > 0.0 ? rms : 1.0);
  ProgressTracker tr;
  double rp = residual_on_set(t, train), rp2 = residual_on_set(t, control);
  tr.record(rp, rp2);
  tr.best = t;
  auto push = [&](Index iter) {
    IterationRecord rec;
    rec.iter = iter;
    rec.res_p_rel = relative(rp, np);
    rec.res_p2_rel = relative(rp2, np2);
    rec.ranks = t.inner_ranks();
    res.trace.push_back(std::move(rec));
  };
  push(0);
  res.verdict = Verdict::max_iters;

  Index iter = 0;
  bool done = false;
  while (!done && iter < cfg.max_iters) {
    std::vector<double> local{rp};
    for (Index k = 0; k < cfg.inner_max_sweeps && iter < cfg.max_iters; ++k) {
      ++iter;
      try {
        t = als_sweep(t, train, cfg.order);
      } catch (const NumericError& e) {
        res.verdict = Verdict::numeric_failure;
        res.message = e.what();
        done = true;
        break;
      }
      rp = residual_on_set(t, train);
      rp2 = residual_on_set(t, control);
      local.push_back(rp);
      if (tr.record(rp, rp2)) tr.best = t;
      push(iter);
      if (relative(rp, np) < cfg.exact_fit_tol && relative(rp2, np2) < cfg.exact_fit_tol) {
        res.verdict = Verdict::converged;
        res.message = "data fitted to tolerance";
        done = true;
        break;
      }
      if (iter > params.divergence_min_iter && rp2 > params.f_p2 * tr.best_res_p2) {
        res.verdict = Verdict::diverged;
        res.message = "control residual grew";
        done = true;
        break;
      }
      if (static_cast<Index>(local.size()) > params.window &&
          std::abs(1.0 - mean_reduction(local, params.window)) < params.gamma_star) {
        break;
      }
    }
    if (done || iter >= cfg.max_iters) break;

    std::vector<Index> bonds = unblocked_ranks(t.ranks(), t.modes(), tr, static_cast<double>(train.size()), params);
    bonds.erase(std::remove_if(bonds.begin(), bonds.end(), [&](Index b) { return !can_grow(t, b, params.r_lim); }),
                bonds.end());
    if (bonds.empty()) {
      res.verdict = Verdict::converged;
      res.message = "no admissible rank increase";
      break;
    }
    GreedyProbe pick;
    bool have = false;
    for (Index b : bonds) {
      GreedyProbe probe = greedy_rank_estimate(t, train, b);
      const bool better = cfg.greedy_selection == GreedySelection::max ? probe.sigma_plus > pick.sigma_plus
                                                                       : probe.sigma_plus < pick.sigma_plus;
      if (!have || better) {
        pick = std::move(probe);
        have = true;
      }
    }
    if (pick.sigma_plus <= 0.0) {
      res.verdict = Verdict::converged;
      res.message = "residual has no two-site component";
      break;
    }
    tr.note_rank_increase(rp, rp2);
    t = greedy_increase(t, pick);
  }

  res.iterations = iter;
  res.best_iter = tr.best_iter;
  res.tensor = tr.best;
  res.stabilized_ranks = tr.best.inner_ranks();
  res.res_p_rel = relative_residual(res.tensor, train);
  res.res_p2_rel = relative_residual(res.tensor, control);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace ttsalsa
