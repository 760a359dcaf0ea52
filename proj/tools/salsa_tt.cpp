// Command-line front end: gen-target, sample, solve, benchmark.
#include "ttsalsa/config.hpp"
#include "ttsalsa/errors.hpp"
#include "ttsalsa/sampling.hpp"
#include "ttsalsa/solvers.hpp"
#include "ttsalsa/testbed.hpp"
#include "ttsalsa/tt_tensor.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace ttsalsa;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { ok = 0, usage = 2, diverged = 3, numeric = 4 };

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

nlohmann::json manifest_base(const std::string& command) {
  nlohmann::json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["started"] = timestamp();
  return m;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

struct GenArgs {
  std::string kind;
  Index d = 6, n = 12, k = 6;
  double alpha = 1.0, beta = 4.0;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_gen_target(const GenArgs& a, const std::string& echo) {
  ExperimentSpec spec;
  spec.kind = parse_target_kind(a.kind);
  spec.d = a.d;
  spec.n = a.n;
  spec.k = a.k;
  spec.alpha = a.alpha;
  spec.beta = a.beta;
  const Target tg = make_target(spec, a.seed);
  nlohmann::json m = manifest_base(echo);
  m["target"] = to_json(spec);
  m["seed"] = a.seed;
  if (tg.tt) {
    const std::string out = a.out.empty() ? tg.name + ".tt" : a.out;
    save_tt_file(out, *tg.tt);
    m["tt_file"] = out;
    m["ranks"] = tg.tt->inner_ranks();
    write_json(manifest_path(out), m);
    spdlog::info("wrote {} (ranks {})", out, fmt::join(tg.tt->inner_ranks(), "x"));
  } else {
    m["closed_form"] = tg.name;
    const std::string out = a.out.empty() ? tg.name + ".json" : a.out;
    write_json(out, m);
    spdlog::info("wrote closed-form reference {}", out);
  }
  return Exit::ok;
}

struct SampleArgs {
  std::string target;  // TT file or closed-form manifest
  double csf = 4.0;
  Index rp = 6;
  std::uint64_t seed = 1;
  double control_frac = 0.05;
  std::string out = "samples.txt";
  std::string control_out;
};

TargetFn load_target(const std::string& path, std::vector<Index>& modes) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path);
    nlohmann::json m;
    try {
      in >> m;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path + ": " + e.what());
    }
    if (!m.contains("target")) throw FormatError(path + ": no target description");
    const auto& t = m["target"];
    ExperimentSpec spec;
    spec.kind = parse_target_kind(t.at("target").get<std::string>());
    spec.d = t.at("d").get<Index>();
    spec.n = t.at("n").get<Index>();
    spec.k = t.value("k", spec.k);
    spec.alpha = t.value("alpha", spec.alpha);
    spec.beta = t.value("beta", spec.beta);
    const Target tg = make_target(spec, m.value("seed", std::uint64_t{1}));
    modes = tg.modes;
    return tg.fn;
  }
  const TTTensor tt = load_tt_file(path);
  modes = tt.modes();
  return [tt](std::span<const Index> i) { return evaluate(tt, i); };
}

int cmd_sample(const SampleArgs& a, const std::string& echo) {
  std::vector<Index> modes;
  const TargetFn fn = load_target(a.target, modes);
  const SampleSet p = attach_values(generate_quasi_random(modes, a.csf, a.rp, a.seed), fn);
  nlohmann::json m = manifest_base(echo);
  m["target"] = a.target;
  m["C_sf"] = a.csf;
  m["r_P"] = a.rp;
  m["seed"] = a.seed;
  if (!a.control_out.empty()) {
    auto [train, control] = split_control(p, a.control_frac, a.seed);
    save_samples_file(a.out, train);
    save_samples_file(a.control_out, control);
    m["control_fraction"] = a.control_frac;
    m["control_file"] = a.control_out;
    m["control_size"] = control.size();
    m["training_size"] = train.size();
  } else {
    save_samples_file(a.out, p);
    m["size"] = p.size();
  }
  m["sample_file"] = a.out;
  write_json(manifest_path(a.out), m);
  spdlog::info("wrote {} samples to {}", p.size(), a.out);
  return Exit::ok;
}

struct SolveArgs {
  std::string samples;
  std::string control;
  std::string verify;
  std::string config;
  std::string algorithm;
  Index rlim = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string trace;
  std::string out;
  std::string result;
};

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::converged:
    case Verdict::max_iters: return Exit::ok;
    case Verdict::diverged: return Exit::diverged;
    case Verdict::numeric_failure: return Exit::numeric;
  }
  return Exit::numeric;
}

int cmd_solve(const SolveArgs& a, const std::string& echo) {
  SolverConfig cfg;
  if (!a.config.empty()) cfg = load_solver_config(a.config, cfg);
  if (!a.algorithm.empty()) cfg.algorithm = parse_algorithm(a.algorithm);
  if (a.rlim > 0) cfg.rank.r_lim = a.rlim;
  if (a.seed_set) cfg.seed = a.seed;
  const SampleSet p = load_samples_file(a.samples);
  SolveResult res;
  if (!a.control.empty()) {
    res = solve(p, load_samples_file(a.control), cfg);
  } else {
    res = solve(p, cfg);
  }
  nlohmann::json summary = summary_json(res);
  summary["config"] = to_json(cfg);
  summary["samples"] = a.samples;
  if (!a.control.empty()) summary["control"] = a.control;
  if (!a.verify.empty()) {
    const SampleSet c = load_samples_file(a.verify);
    summary["res_C_rel"] = relative_residual(res.tensor, c);
    summary["verification"] = a.verify;
  }
  if (!a.trace.empty()) {
    std::ofstream tr(a.trace);
    if (!tr) throw FormatError("cannot write " + a.trace);
    write_trace_csv(tr, res);
  }
  if (!a.result.empty()) save_tt_file(a.result, res.tensor);
  nlohmann::json m = manifest_base(echo);
  m["summary"] = summary;
  m["trace"] = a.trace;
  m["result"] = a.result;
  m["finished"] = timestamp();
  if (!a.out.empty()) {
    write_json(a.out, m);
  } else {
    std::cout << m.dump(2) << '\n';
  }
  spdlog::info("{}: {} after {} iterations, res_P {:.3e}, res_P2 {:.3e}", to_string(res.algorithm),
               to_string(res.verdict), res.iterations, res.res_p_rel, res.res_p2_rel);
  return verdict_exit(res.verdict);
}

struct BenchArgs {
  std::string spec;
  std::string out_dir = "bench";
  Index jobs = 0;
};

int cmd_benchmark(const BenchArgs& a, const std::string& echo) {
  const ExperimentSpec spec = load_experiment(a.spec);
  Index jobs = a.jobs;
  if (jobs <= 0) {
    const char* env = std::getenv("SALSA_TT_JOBS");
    jobs = env ? std::max<Index>(1, std::atoll(env)) : 1;
  }
  fs::create_directories(a.out_dir);
  const fs::path dir(a.out_dir);
  std::ofstream trials(dir / "trials.csv");
  trials << "algorithm,trial,rel_C,rel_P,seconds,verdict,iterations,ranks\n";
  auto on_trial = [&](const TrialRecord& r, const SolveResult& res) {
    const fs::path tdir = dir / ("trial_" + to_string(r.algorithm) + "_" + std::to_string(r.trial));
    fs::create_directories(tdir);
    nlohmann::json m = manifest_base(echo);
    m["experiment"] = to_json(spec);
    m["config"] = to_json(spec.solver);
    m["record"] = to_json(r);
    m["finished"] = timestamp();
    write_json((tdir / "manifest.json").string(), m);
    if (r.error.empty()) {
      std::ofstream tr(tdir / "trace.csv");
      write_trace_csv(tr, res);
    }
    std::ostringstream ranks;
    for (size_t k = 0; k < r.ranks.size(); ++k) ranks << (k ? "x" : "") << r.ranks[k];
    trials << to_string(r.algorithm) << ',' << r.trial << ',' << r.rel_c << ',' << r.rel_p << ',' << r.seconds
           << ',' << to_string(r.verdict) << ',' << r.iterations << ',' << ranks.str() << std::endl;
    spdlog::info("{} trial {}: rel_C {:.3e} ({:.1f} s)", to_string(r.algorithm), r.trial, r.rel_c, r.seconds);
  };
  const auto records = run_experiment(spec, jobs, on_trial);
  std::ofstream report(dir / "report.csv");
  write_report_csv(report, aggregate(spec, records));
  write_report_csv(std::cout, aggregate(spec, records));
  return Exit::ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::string echo;
  for (int i = 0; i < argc; ++i) echo += (i ? " " : "") + std::string(argv[i]);

  CLI::App app{"Tensor train completion with ALS and SALSA"};
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings only");
  app.set_version_flag("--version", kVersion);

  GenArgs ga;
  auto* gen = app.add_subcommand("gen-target", "Write a target tensor or a closed-form reference");
  gen->add_option("--kind", ga.kind, "domino|generic1|generic2|generic3|random_tt|rank_adaption")->required();
  gen->add_option("--d", ga.d, "Order");
  gen->add_option("--n", ga.n, "Mode size");
  gen->add_option("--k", ga.k, "Rank bound");
  gen->add_option("--alpha", ga.alpha, "Uniform singular value level (rank_adaption)");
  gen->add_option("--beta", ga.beta, "Decay base (rank_adaption)");
  gen->add_option("--seed", ga.seed, "Seed");
  gen->add_option("--out", ga.out, "Output file");

  SampleArgs sa;
  auto* smp = app.add_subcommand("sample", "Draw a quasi-random sample set");
  smp->add_option("--target", sa.target, "TT file or closed-form reference (.json)")->required();
  smp->add_option("--csf", sa.csf, "Sampling factor");
  smp->add_option("--rp", sa.rp, "Sampling rank");
  smp->add_option("--seed", sa.seed, "Seed");
  smp->add_option("--control-frac", sa.control_frac, "Control fraction (with --control-out)");
  smp->add_option("--out", sa.out, "Sample file");
  smp->add_option("--control-out", sa.control_out, "Write a separate control set here");

  SolveArgs so;
  auto* slv = app.add_subcommand("solve", "Complete a tensor from samples");
  slv->add_option("--samples", so.samples, "Sample file")->required();
  slv->add_option("--control", so.control, "Control set (otherwise split off the samples)");
  slv->add_option("--verify", so.verify, "Verification set");
  slv->add_option("--config", so.config, "key = value overrides");
  slv->add_option("--algorithm", so.algorithm, "salsa|als|greedy-als");
  slv->add_option("--rlim", so.rlim, "Rank limit");
  auto* seed_opt = slv->add_option("--seed", so.seed, "Seed");
  slv->add_option("--trace", so.trace, "Iteration trace CSV");
  slv->add_option("--out", so.out, "Summary JSON (stdout otherwise)");
  slv->add_option("--result", so.result, "Write the completed tensor here");

  BenchArgs ba;
  auto* bench = app.add_subcommand("benchmark", "Run an experiment file across trials");
  bench->add_option("--spec", ba.spec, "Experiment file")->required();
  bench->add_option("--out-dir", ba.out_dir, "Output directory");
  bench->add_option("--jobs", ba.jobs, "Worker threads (default SALSA_TT_JOBS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? Exit::ok : Exit::usage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);
  so.seed_set = seed_opt->count() > 0;

  try {
    if (*gen) return cmd_gen_target(ga, echo);
    if (*smp) return cmd_sample(sa, echo);
    if (*slv) return cmd_solve(so, echo);
    if (*bench) return cmd_benchmark(ba, echo);
  } catch (const NumericError& e) {
    spdlog::error("{}", e.what());
    return Exit::numeric;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return Exit::usage;
  }
  return Exit::usage;
}
