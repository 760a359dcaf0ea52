#include "ttsalsa/solvers.hpp"

#include "ttsalsa/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ttsalsa {

Algorithm parse_algorithm(const std::string& s) {
  if (s == "salsa") return Algorithm::salsa;
  if (s == "als") return Algorithm::als;
  if (s == "greedy-als" || s == "greedy_als") return Algorithm::greedy_als;
  throw ArgumentError("unknown algorithm '" + s + "'");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::salsa: return "salsa";
    case Algorithm::als: return "als";
    case Algorithm::greedy_als: return "greedy-als";
  }
  return "salsa";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::converged: return "converged";
    case Verdict::diverged: return "diverged";
    case Verdict::max_iters: return "max_iters";
    case Verdict::numeric_failure: return "numeric_failure";
  }
  return "max_iters";
}

namespace {

double relative(double res, double nrm) { return nrm > 0.0 ? res / nrm : res; }

double sum_modes(const std::vector<Index>& modes) {
  return std::accumulate(modes.begin(), modes.end(), 0.0,
                         [](double acc, Index n) { return acc + static_cast<double>(n); });
}

void check_inputs(const SampleSet& train, const SampleSet& control) {
  if (train.modes() != control.modes()) throw SizeError("training and control sets differ in shape");
  if (train.order() < 2) throw ArgumentError("order must be at least 2");
  if (train.size() < 1 || control.size() < 1) throw ArgumentError("training and control sets must be non-empty");
  if (train.values().empty() || control.values().empty()) throw ArgumentError("samples carry no values");
}

double elapsed(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

TTTensor initial_tensor(const SampleSet& train) {
  const double rms = train.value_norm() / std::sqrt(static_cast<double>(train.size()));
  return TTTensor::constant(train.modes(), rms > 0.0 ? rms : 1.0);
}

IterationRecord make_record(Index iter, double omega_tilde, double omega, double rp, double rp2,
                            const TTTensor& t, std::vector<Index> stabilized, std::vector<double> sigma_min) {
  IterationRecord rec;
  rec.iter = iter;
  rec.omega_tilde = omega_tilde;
  rec.omega = omega;
  rec.res_p_rel = rp;
  rec.res_p2_rel = rp2;
  rec.ranks = t.inner_ranks();
  rec.stabilized = std::move(stabilized);
  rec.sigma_min = std::move(sigma_min);
  return rec;
}

bool can_grow(const std::vector<Index>& ranks, const std::vector<Index>& modes, Index bond, Index r_lim) {
  const Index cap = std::min({modes[bond] * ranks[bond], modes[bond + 1] * ranks[bond + 2], r_lim});
  return ranks[bond + 1] + 1 <= cap;
}

void finish(SolveResult& res, const SampleSet& train, const SampleSet& control,
            std::chrono::steady_clock::time_point start) {
  res.res_p_rel = relative_residual(res.tensor, train);
  res.res_p2_rel = relative_residual(res.tensor, control);
  res.seconds = elapsed(start);
}

}  // namespace

SolveResult salsa_solve(const SampleSet& train, const SampleSet& control, const SolverConfig& cfg) {
  check_inputs(train, control);
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Index> modes = train.modes();
  const Index d = static_cast<Index>(modes.size());
  RankControlParams params = cfg.rank;
  SweepOrder order = cfg.order;
  if (d == 2) {
    params.boundary = BoundaryRule::matrix;
    order = SweepOrder::forward;
  }
  Rng rng(cfg.seed ^ 0x5a175a17ULL);
  const double np = train.value_norm(), np2 = control.value_norm();
  const double size_p = static_cast<double>(train.size());
  const double size_p2 = static_cast<double>(control.size());
  const double size_full = full_size(modes);
  const double total_n = sum_modes(modes);

  SolveResult res;
  res.algorithm = Algorithm::salsa;
  TTTensor t = initial_tensor(train);
  for (Index w = 0; w < cfg.warmup_sweeps; ++w) t = als_sweep(t, train, order);

  double rp = residual_on_set(t, train), rp2 = residual_on_set(t, control);
  GaugedTensor g = orthogonalize(t, 0);
  double norm = g.gauge.sigma[0].norm();
  OmegaSchedule sched;
  sched.omega_tilde = params.omega_tilde0;
  sched.omega = sched.omega_tilde * norm;
  double res_est = residual_estimate(rp, size_p, rp2, size_p2, size_full);
  sched.sigma_min.assign(static_cast<size_t>(d - 1), std::max(res_est / total_n, 1e-14 * norm));
  sched.sigma_min = sigma_min_update(sched.sigma_min, g.gauge.sigma, modes, sched.omega, res_est, norm, params);

  ProgressTracker tr;
  FilterState fs = minimal_filter_values(g.gauge.sigma, modes, sched.omega, params.boundary);
  tr.record(rp, rp2);
  tr.best = t;
  tr.best_stabilized = stabilized_ranks(fs, params.theta_stab);
  res.trace.push_back(make_record(0, sched.omega_tilde, sched.omega, relative(rp, np), relative(rp2, np2), t,
                                  tr.best_stabilized, sched.sigma_min));
  std::vector<Vector> prev_sigma = g.gauge.sigma;
  res.verdict = Verdict::max_iters;

  for (Index iter = 1; iter <= cfg.max_iters; ++iter) {
    res.iterations = iter;
    if (iter == cfg.virtual_rank_iter) {
      for (Index b = 0; b + 1 < d; ++b) {
        const auto r = t.ranks();
        if (r[b + 1] == 1 && can_grow(r, modes, b, params.r_lim)) {
          tr.note_rank_increase(rp, rp2);
          t = increase_rank(t, b, sched.sigma_min[b], rng);
        }
      }
    }
    SweepOptions opt;
    opt.omega = sched.omega;
    opt.sigma_min = sched.sigma_min;
    opt.boundary = params.boundary;
    opt.order = order;
    try {
      t = salsa_sweep(t, train, opt);
    } catch (const NumericError& e) {
      res.verdict = Verdict::numeric_failure;
      res.message = e.what();
      break;
    }
    rp = residual_on_set(t, train);
    rp2 = residual_on_set(t, control);
    if (!std::isfinite(rp) || !std::isfinite(rp2)) {
      res.verdict = Verdict::numeric_failure;
      res.message = "non-finite residual";
      break;
    }
    g = orthogonalize(t, 0);
    const std::vector<Vector>& sigma = g.gauge.sigma;
    norm = sigma[0].norm();
    fs = minimal_filter_values(sigma, modes, sched.omega, params.boundary);
    const std::vector<Index> stab = stabilized_ranks(fs, params.theta_stab);
    if (tr.record(rp, rp2)) {
      tr.best = t;
      tr.best_stabilized = stab;
    }
    res.trace.push_back(make_record(iter, sched.omega_tilde, sched.omega, relative(rp, np),
                                    relative(rp2, np2), t, stab, sched.sigma_min));

    // rank changes
    const std::vector<Index> ranks = t.ranks();
    const std::vector<Index> unblocked = unblocked_ranks(ranks, modes, tr, size_p, params);
    const bool minimal = omega_is_minimal(fs, unblocked.empty(), params);
    for (Index b = 0; b + 1 < d; ++b) {
      const Index r = ranks[b + 1];
      const Vector& th = fs.theta[b];
      if (r >= 2 && th(r - 2) < params.theta_virt) {
        t = decrease_rank(t, b);
      } else if (sched.decreased && th(r - 1) > params.theta_stab &&
                 std::find(unblocked.begin(), unblocked.end(), b) != unblocked.end()) {
        tr.note_rank_increase(rp, rp2);
        t = increase_rank(t, b, sched.sigma_min[b], rng);
      }
    }

    const double delta = spectrum_change(prev_sigma, sigma);
    prev_sigma = sigma;
    sched = update_omega(sched, tr, fs, delta, minimal, norm, params);
    res_est = residual_estimate(rp, size_p, rp2, size_p2, size_full);
    sched.sigma_min = sigma_min_update(sched.sigma_min, sigma, modes, sched.omega, res_est, norm, params);

    if (minimal) {
      res.verdict = Verdict::converged;
      res.message = "omega minimal";
      break;
    }
    if (relative(rp, np) < cfg.exact_fit_tol && relative(rp2, np2) < cfg.exact_fit_tol) {
      res.verdict = Verdict::converged;
      res.message = "data fitted to tolerance";
      break;
    }
    if (iter > params.divergence_min_iter && rp2 > params.f_p2 * tr.best_res_p2) {
      res.verdict = Verdict::diverged;
      res.message = "control residual grew";
      break;
    }
  }

  res.best_iter = tr.best_iter;
  res.stabilized_ranks = tr.best_stabilized;
  res.tensor = cfg.final_cut ? cut_to_ranks(tr.best, tr.best_stabilized) : tr.best;
  finish(res, train, control, start);
  return res;
}

SolveResult matrix_salsa(const SampleSet& train, const SampleSet& control, const SolverConfig& cfg) {
  if (train.order() != 2) throw ArgumentError("matrix_salsa: order must be 2");
  return salsa_solve(train, control, cfg);
}

SolveResult als_solve(const SampleSet& train, const SampleSet& control, const SolverConfig& cfg) {
  check_inputs(train, control);
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Index> modes = train.modes();
  const Index d = static_cast<Index>(modes.size());
  const RankControlParams& params = cfg.rank;
  const Index target = cfg.als_rank > 0 ? cfg.als_rank : params.r_lim;
  const double np = train.value_norm(), np2 = control.value_norm();
  Rng rng(cfg.seed ^ 0xa15a15ULL);

  SolveResult res;
  res.algorithm = Algorithm::als;
  TTTensor t = initial_tensor(train);
  const double scale = 1e-2 * frobenius_norm(t);
  for (bool grown = true; grown;) {
    grown = false;
    for (Index b = 0; b + 1 < d; ++b) {
      const auto r = t.ranks();
      if (r[b + 1] < target && can_grow(r, modes, b, target)) {
        t = increase_rank(t, b, scale, rng);
        grown = true;
      }
    }
  }

  ProgressTracker tr;
  double rp = residual_on_set(t, train), rp2 = residual_on_set(t, control);
  tr.record(rp, rp2);
  tr.best = t;
  res.trace.push_back(make_record(0, 0.0, 0.0, relative(rp, np), relative(rp2, np2), t, {}, {}));
  res.verdict = Verdict::max_iters;
  for (Index iter = 1; iter <= cfg.max_iters; ++iter) {
    res.iterations = iter;
    try {
      t = als_sweep(t, train, cfg.order);
    } catch (const NumericError& e) {
      res.verdict = Verdict::numeric_failure;
      res.message = e.what();
      break;
    }
    rp = residual_on_set(t, train);
    rp2 = residual_on_set(t, control);
    if (tr.record(rp, rp2)) tr.best = t;
    res.trace.push_back(make_record(iter, 0.0, 0.0, relative(rp, np), relative(rp2, np2), t, {}, {}));
    if (relative(rp, np) < cfg.exact_fit_tol && relative(rp2, np2) < cfg.exact_fit_tol) {
      res.verdict = Verdict::converged;
      res.message = "data fitted to tolerance";
      break;
    }
    if (static_cast<Index>(tr.res_p.size()) > params.window &&
        std::abs(1.0 - mean_reduction(tr.res_p, params.window)) < params.gamma_star) {
      res.verdict = Verdict::converged;
      res.message = "training residual stagnated";
      break;
    }
    if (iter > params.divergence_min_iter && rp2 > params.f_p2 * tr.best_res_p2) {
      res.verdict = Verdict::diverged;
      res.message = "control residual grew";
      break;
    }
  }
  res.best_iter = tr.best_iter;
  res.tensor = tr.best;
  finish(res, train, control, start);
  return res;
}

SolveResult solve(const SampleSet& train, const SampleSet& control, const SolverConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::salsa: return salsa_solve(train, control, cfg);
    case Algorithm::als: return als_solve(train, control, cfg);
    case Algorithm::greedy_als: return greedy_als_solve(train, control, cfg);
  }
  throw ArgumentError("unknown algorithm");
}

SolveResult solve(const SampleSet& samples, const SolverConfig& cfg) {
  auto [train, control] = split_control(samples, cfg.control_fraction, cfg.seed);
  return solve(train, control, cfg);
}

namespace {

template <typename T>
std::string join(const std::vector<T>& v, const char* sep) {
  std::ostringstream os;
  for (size_t k = 0; k < v.size(); ++k) {
    if (k > 0) os << sep;
    os << v[k];
  }
  return os.str();
}

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_trace_csv(std::ostream& out, const SolveResult& r) {
  out << "iter,omega_tilde,omega,res_P_rel,res_P2_rel,ranks,stabilized_ranks,sigma_min\n";
  for (const auto& rec : r.trace) {
    std::vector<std::string> smin;
    for (double s : rec.sigma_min) smin.push_back(g17(s));
    out << rec.iter << ',' << g17(rec.omega_tilde) << ',' << g17(rec.omega) << ',' << g17(rec.res_p_rel) << ','
        << g17(rec.res_p2_rel) << ',' << join(rec.ranks, "x") << ',' << join(rec.stabilized, "x") << ','
        << join(smin, ";") << '\n';
  }
}

nlohmann::json summary_json(const SolveResult& r) {
  nlohmann::json j;
  j["algorithm"] = to_string(r.algorithm);
  j["verdict"] = to_string(r.verdict);
  j["message"] = r.message;
  j["iterations"] = r.iterations;
  j["best_iter"] = r.best_iter;
  j["res_P_rel"] = r.res_p_rel;
  j["res_P2_rel"] = r.res_p2_rel;
  j["ranks"] = r.tensor.order() > 0 ? r.tensor.inner_ranks() : std::vector<Index>{};
  j["stabilized_ranks"] = r.stabilized_ranks;
  j["seconds"] = r.seconds;
  return j;
}

}  // namespace ttsalsa
