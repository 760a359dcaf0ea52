#include "ttsalsa/testbed.hpp"

#include "ttsalsa/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace ttsalsa {

double domino_value(std::span<const Index> idx) {
  double s = 1.0;
  for (size_t mu = 0; mu + 1 < idx.size(); ++mu) {
    s += static_cast<double>(idx[mu] + 1) / static_cast<double>(idx[mu + 1] + 1);
  }
  return 1.0 / s;
}

Index generic_order(int which) {
  switch (which) {
    case 1: return 8;
    case 2: return 7;
    case 3: return 11;
  }
  throw ArgumentError("generic function must be 1, 2 or 3");
}

double generic_value(int which, std::span<const Index> idx) {
  if (static_cast<Index>(idx.size()) != generic_order(which)) {
    throw ArgumentError("generic function " + std::to_string(which) + " expects order " +
                        std::to_string(generic_order(which)));
  }
  // i(k) is the 1-based index of mode k (1-based k)
  auto i = [&](int k) { return static_cast<double>(idx[k - 1] + 1); };
  switch (which) {
    case 1:
      return i(1) / 4.0 * std::cos(i(3) - i(8)) + i(2) * i(2) / (i(1) + i(6) + i(7)) +
             i(5) * i(5) * i(5) * std::sin(i(6) + i(3));
    case 2: {
      const double v = i(4) / (i(2) + i(6)) + i(1) + i(3) - i(5) - i(7);
      return v * v;
    }
    default: {
      const double q = i(11) + i(1) - i(10) - i(6);
      return std::sqrt(i(3) + i(2) + (i(8) + i(7) + i(4) + i(5) + i(9)) / 10.0 + q * q / 20.0);
    }
  }
}

std::vector<Index> random_rank_vector(const std::vector<Index>& modes, Index k, Rng& rng) {
  const Index d = static_cast<Index>(modes.size());
  if (k < 1) throw ArgumentError("rank bound must be positive");
  const std::vector<Index> cap = max_feasible_ranks(modes);
  for (Index b = 0; b + 1 < d; ++b) {
    if (cap[b] < (2 * k + 2) / 3) throw ArgumentError("rank bound infeasible for these mode sizes");
  }
  std::uniform_int_distribution<Index> draw(1, k);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    std::vector<Index> r(static_cast<size_t>(d - 1));
    for (auto& x : r) x = draw(rng);
    bool ok = 3 * std::accumulate(r.begin(), r.end(), Index{0}) >= 2 * k * (d - 1);
    for (Index b = 0; ok && b + 1 < d; ++b) {
      const Index left = b == 0 ? 1 : r[b - 1];
      const Index right = b + 2 == d ? 1 : r[b + 1];
      ok = r[b] <= cap[b] && r[b] <= left * modes[b] && r[b] <= right * modes[b + 1];
    }
    if (ok) return r;
  }
  throw ArgumentError("no feasible rank vector found");
}

double impose_spectrum(TTTensor& t, const std::vector<Vector>& targets, double tol, Index max_passes) {
  const Index d = t.order();
  if (static_cast<Index>(targets.size()) != d - 1) throw SizeError("need one target spectrum per bond");
  const auto ranks = t.inner_ranks();
  for (Index b = 0; b + 1 < d; ++b) {
    if (targets[b].size() != ranks[b]) throw SizeError("target spectrum length differs from the rank");
  }
  auto deviation = [&]() {
    const GaugedTensor g = orthogonalize(t, 0);
    double worst = 0.0;
    for (Index b = 0; b + 1 < d; ++b) {
      const Vector& s = g.gauge.sigma[b];
      if (s.size() != targets[b].size()) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, (s - targets[b]).norm() / targets[b].norm());
    }
    return worst;
  };
  double dev = deviation();
  for (Index pass = 0; pass < max_passes && dev > tol; ++pass) {
    for (Index b = 0; b + 1 < d; ++b) {
      t = orthogonalize_qr(t, b);
      const Index nb = t.mode_size(b);
      const Svd svd = thin_svd(unfold_left(t.core(b)));
      t.core(b) = fold_left(svd.u, nb);
      apply_left(t.core(b + 1), targets[b].asDiagonal() * svd.v.transpose());
    }
    dev = deviation();
  }
  return dev;
}

TTTensor random_tt_uniform_spectrum(const std::vector<Index>& modes, Index k, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<Index> r = random_rank_vector(modes, k, rng);
  TTTensor t = TTTensor::random(modes, r, rng, -0.5, 0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> targets;
  for (Index rb : r) {
    Vector s(rb);
    for (Index i = 0; i < rb; ++i) s(i) = unit(rng);
    std::sort(s.data(), s.data() + rb, std::greater<double>());
    targets.push_back(s / s.norm());
  }
  const double dev = impose_spectrum(t, targets);
  if (dev > 1e-10) spdlog::debug("spectrum replacement stopped at deviation {:.3g}", dev);
  return t;
}

TTTensor rank_adaption_tensor(const std::vector<Index>& modes, Index k, double alpha, double beta,
                              std::uint64_t seed) {
  if (modes.size() != 6) throw ArgumentError("rank adaption tensor has order 6");
  if (k < 1 || beta <= 1.0 || alpha <= 0.0) throw ArgumentError("need k >= 1, beta > 1 and alpha > 0");
  if (modes[0] < k || modes[3] < k || modes[4] < 2 * k || modes[5] < 2 * k) {
    throw ArgumentError("mode sizes too small for the requested ranks");
  }
  Rng rng(seed);
  std::normal_distribution<double> gauss;
  auto orthonormal = [&](Index rows, Index cols) {
    Matrix a(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) a(i, j) = gauss(rng);
    Matrix q, r;
    thin_qr(a, q, r);
    return q;
  };
  const Matrix q1 = orthonormal(modes[0], k);
  const Matrix q4 = orthonormal(modes[3], k);
  const Matrix q5 = orthonormal(modes[4], 2 * k);
  const Matrix q6 = orthonormal(modes[5], 2 * k);
  Vector s(2 * k);
  for (Index i = 0; i < 2 * k; ++i) s(i) = std::pow(beta, -static_cast<double>(i + 1));
  // the identity cores multiply every Q-side singular value by sqrt(n2 n3)
  s *= alpha / (s.norm() * std::sqrt(static_cast<double>(modes[1] * modes[2])));

  std::vector<Core> cores;
  cores.push_back(fold_left(q1, modes[0]));
  for (int mu = 1; mu <= 2; ++mu) {
    Core c;
    c.slices.assign(static_cast<size_t>(modes[mu]), Matrix::Identity(k, k));
    cores.push_back(std::move(c));
  }
  cores.push_back(fold_right(q4.transpose(), modes[3]));
  cores.push_back(fold_left(q5, modes[4]));
  cores.push_back(fold_right(s.asDiagonal() * q6.transpose(), modes[5]));
  TTTensor t(std::move(cores));
  t.validate();
  return t;
}

TargetKind parse_target_kind(const std::string& s) {
  if (s == "domino") return TargetKind::domino;
  if (s == "generic1" || s == "f1") return TargetKind::generic1;
  if (s == "generic2" || s == "f2") return TargetKind::generic2;
  if (s == "generic3" || s == "f3") return TargetKind::generic3;
  if (s == "random_tt") return TargetKind::random_tt;
  if (s == "rank_adaption") return TargetKind::rank_adaption;
  throw ArgumentError("unknown target kind '" + s + "'");
}

std::string to_string(TargetKind k) {
  switch (k) {
    case TargetKind::domino: return "domino";
    case TargetKind::generic1: return "generic1";
    case TargetKind::generic2: return "generic2";
    case TargetKind::generic3: return "generic3";
    case TargetKind::random_tt: return "random_tt";
    case TargetKind::rank_adaption: return "rank_adaption";
  }
  return "domino";
}

namespace {

int generic_index(TargetKind k) {
  return k == TargetKind::generic1 ? 1 : k == TargetKind::generic2 ? 2 : 3;
}

bool is_generic(TargetKind k) {
  return k == TargetKind::generic1 || k == TargetKind::generic2 || k == TargetKind::generic3;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void validate(const ExperimentSpec& spec) {
  if (spec.trials < 1) throw ArgumentError("trials must be at least 1");
  if (spec.n < 1) throw ArgumentError("mode size must be positive");
  if (spec.c_sf <= 0.0 || spec.r_p < 1) throw ArgumentError("sampling parameters must be positive");
  if (spec.algorithms.empty()) throw ArgumentError("no algorithm selected");
  if (is_generic(spec.kind) && spec.d != generic_order(generic_index(spec.kind))) {
    throw ArgumentError(to_string(spec.kind) + " requires d = " +
                        std::to_string(generic_order(generic_index(spec.kind))));
  }
  if (spec.kind == TargetKind::rank_adaption && spec.d != 6) throw ArgumentError("rank_adaption requires d = 6");
  if (spec.d < 2) throw ArgumentError("order must be at least 2");
}

Target make_target(const ExperimentSpec& spec, std::uint64_t seed) {
  validate(spec);
  Target tg;
  tg.name = to_string(spec.kind);
  tg.modes.assign(static_cast<size_t>(spec.d), spec.n);
  switch (spec.kind) {
    case TargetKind::domino:
      tg.fn = [](std::span<const Index> i) { return domino_value(i); };
      break;
    case TargetKind::generic1:
    case TargetKind::generic2:
    case TargetKind::generic3: {
      const int w = generic_index(spec.kind);
      tg.fn = [w](std::span<const Index> i) { return generic_value(w, i); };
      break;
    }
    case TargetKind::random_tt:
      tg.tt = random_tt_uniform_spectrum(tg.modes, spec.k, seed);
      break;
    case TargetKind::rank_adaption:
      tg.tt = rank_adaption_tensor(tg.modes, spec.k, spec.alpha, spec.beta, seed);
      break;
  }
  if (tg.tt) {
    const TTTensor tt = *tg.tt;
    tg.fn = [tt](std::span<const Index> i) { return evaluate(tt, i); };
  }
  return tg;
}

TrialSeeds trial_seeds(std::uint64_t base, Index trial) {
  const std::uint64_t root = splitmix(base * 1000003ULL + static_cast<std::uint64_t>(trial));
  return {splitmix(root ^ 1), splitmix(root ^ 2), splitmix(root ^ 3), splitmix(root ^ 4)};
}

double geometric_mean(const std::vector<double>& x) {
  if (x.empty()) return std::nan("");
  double acc = 0.0;
  for (double v : x) acc += std::log(v);
  return std::exp(acc / static_cast<double>(x.size()));
}

double geometric_deviation(const std::vector<double>& x) {
  if (x.empty()) return std::nan("");
  const double lg = std::log(geometric_mean(x));
  double acc = 0.0;
  for (double v : x) acc += (std::log(v) - lg) * (std::log(v) - lg);
  return std::exp(std::sqrt(acc / static_cast<double>(x.size())));
}

Index count_successes(const std::vector<double>& rel, double tol) {
  return static_cast<Index>(std::count_if(rel.begin(), rel.end(), [tol](double r) { return r < tol; }));
}

double median(std::vector<double> x) {
  if (x.empty()) return std::nan("");
  std::sort(x.begin(), x.end());
  const size_t m = x.size() / 2;
  return x.size() % 2 == 1 ? x[m] : 0.5 * (x[m - 1] + x[m]);
}

TrialRecord run_trial(const ExperimentSpec& spec, Algorithm algorithm, Index trial, SolveResult* result) {
  TrialRecord rec;
  rec.algorithm = algorithm;
  rec.trial = trial;
  rec.seeds = trial_seeds(spec.seed, trial);
  try {
    const Target tg = make_target(spec, rec.seeds.target);
    const SampleSet p = attach_values(generate_quasi_random(tg.modes, spec.c_sf, spec.r_p, rec.seeds.samples), tg.fn);
    const SampleSet c =
        attach_values(generate_quasi_random(tg.modes, spec.c_sf, spec.r_p, rec.seeds.verification), tg.fn);
    SolverConfig cfg = spec.solver;
    cfg.algorithm = algorithm;
    cfg.seed = rec.seeds.solver;
    SolveResult res = solve(p, cfg);
    rec.rel_p = relative_residual(res.tensor, p);
    rec.rel_c = relative_residual(res.tensor, c);
    rec.seconds = res.seconds;
    rec.verdict = res.verdict;
    rec.iterations = res.iterations;
    rec.ranks = res.tensor.inner_ranks();
    rec.stabilized = res.stabilized_ranks;
    if (result) *result = std::move(res);
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.rel_c = rec.rel_p = std::numeric_limits<double>::infinity();
    rec.verdict = Verdict::numeric_failure;
    spdlog::warn("trial {} ({}) failed: {}", trial, to_string(algorithm), e.what());
  }
  return rec;
}

std::vector<TrialRecord> run_experiment(const ExperimentSpec& spec, Index jobs, const TrialCallback& on_trial) {
  validate(spec);
  const Index na = static_cast<Index>(spec.algorithms.size());
  const Index total = na * spec.trials;
  std::vector<TrialRecord> out(static_cast<size_t>(total));
  std::atomic<Index> next{0};
  std::mutex callback_mutex;
  auto worker = [&]() {
    for (Index job = next++; job < total; job = next++) {
      const Algorithm alg = spec.algorithms[job / spec.trials];
      SolveResult res;
      out[job] = run_trial(spec, alg, job % spec.trials, &res);
      if (on_trial) {
        std::lock_guard<std::mutex> lock(callback_mutex);
        on_trial(out[job], res);
      }
    }
  };
  const Index threads = std::clamp<Index>(jobs, 1, total);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (Index k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

std::vector<ReportRow> aggregate(const ExperimentSpec& spec, const std::vector<TrialRecord>& records) {
  std::vector<ReportRow> rows;
  for (Algorithm alg : spec.algorithms) {
    std::vector<double> rc, rp, times;
    for (const auto& r : records) {
      if (r.algorithm != alg) continue;
      rc.push_back(r.rel_c);
      rp.push_back(r.rel_p);
      times.push_back(r.seconds);
    }
    ReportRow row;
    row.target = to_string(spec.kind);
    row.d = spec.d;
    row.n = spec.n;
    row.c_sf = spec.c_sf;
    row.algorithm = alg;
    row.trials = static_cast<Index>(rc.size());
    row.geo_mean_relc = geometric_mean(rc);
    row.geo_dev_relc = geometric_deviation(rc);
    row.geo_mean_relp = geometric_mean(rp);
    row.geo_dev_relp = geometric_deviation(rp);
    row.mean_time_s = times.empty() ? 0.0 : std::accumulate(times.begin(), times.end(), 0.0) / times.size();
    row.successes = count_successes(rc, spec.success_tol);
    rows.push_back(row);
  }
  return rows;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "target,d,n,C_sf,algorithm,trials,geo_mean_relC,geo_dev_relC,geo_mean_relP,geo_dev_relP,mean_time_s,"
         "successes\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%g,%s,%lld,%.6e,%.6g,%.6e,%.6g,%.6g,%lld\n", r.target.c_str(),
                  static_cast<long long>(r.d), static_cast<long long>(r.n), r.c_sf, to_string(r.algorithm).c_str(),
                  static_cast<long long>(r.trials), r.geo_mean_relc, r.geo_dev_relc, r.geo_mean_relp, r.geo_dev_relp,
                  r.mean_time_s, static_cast<long long>(r.successes));
    out << buf;
  }
}

nlohmann::json to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["target"] = to_string(spec.kind);
  j["d"] = spec.d;
  j["n"] = spec.n;
  j["C_sf"] = spec.c_sf;
  j["r_P"] = spec.r_p;
  j["k"] = spec.k;
  j["alpha"] = spec.alpha;
  j["beta"] = spec.beta;
  j["trials"] = spec.trials;
  j["seed"] = spec.seed;
  j["r_lim"] = spec.solver.rank.r_lim;
  j["beta_min"] = spec.solver.rank.beta_min;
  j["max_iters"] = spec.solver.max_iters;
  std::vector<std::string> algs;
  for (Algorithm a : spec.algorithms) algs.push_back(to_string(a));
  j["algorithms"] = algs;
  return j;
}

nlohmann::json to_json(const TrialRecord& r) {
  nlohmann::json j;
  j["algorithm"] = to_string(r.algorithm);
  j["trial"] = r.trial;
  j["seeds"] = {{"target", r.seeds.target},
                {"samples", r.seeds.samples},
                {"verification", r.seeds.verification},
                {"solver", r.seeds.solver}};
  j["rel_C"] = r.rel_c;
  j["rel_P"] = r.rel_p;
  j["seconds"] = r.seconds;
  j["verdict"] = to_string(r.verdict);
  j["iterations"] = r.iterations;
  j["ranks"] = r.ranks;
  j["stabilized_ranks"] = r.stabilized;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

}  // namespace ttsalsa
