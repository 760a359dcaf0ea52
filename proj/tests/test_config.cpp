#include "ttsalsa/config.hpp"
#include "ttsalsa/errors.hpp"

#include <doctest.h>

#include <sstream>

using namespace ttsalsa;

TEST_CASE("key value files") {
  std::istringstream in("# comment\nr_lim = 7   # trailing\n\n  beta_min=0\nboundary = remark\nfinal_cut = false\n");
  const auto kv = parse_key_values(in);
  CHECK(kv.size() == 4);
  SolverConfig cfg;
  for (const auto& [k, v] : kv) CHECK(apply_solver_option(cfg, k, v));
  CHECK(cfg.rank.r_lim == 7);
  CHECK(cfg.rank.beta_min == 0.0);
  CHECK(cfg.rank.boundary == BoundaryRule::remark);
  CHECK_FALSE(cfg.final_cut);
  CHECK_FALSE(apply_solver_option(cfg, "no_such_key", "1"));
  CHECK_THROWS_AS(apply_solver_option(cfg, "r_lim", "seven"), FormatError);
  std::istringstream dup("a = 1\na = 2\n");
  CHECK_THROWS_AS(parse_key_values(dup), FormatError);
  std::istringstream noeq("just words\n");
  CHECK_THROWS_AS(parse_key_values(noeq), FormatError);
}

TEST_CASE("experiment files") {
  std::istringstream in("target = generic1\nd = 8\nn = 8\nC_sf = 4\ntrials = 2\nalgorithms = salsa, greedy-als\n"
                        "r_lim = 10\n");
  const ExperimentSpec spec = parse_experiment(in);
  CHECK(spec.kind == TargetKind::generic1);
  CHECK(spec.algorithms.size() == 2);
  CHECK(spec.solver.rank.r_lim == 10);
  std::istringstream bad("target = generic1\nd = 6\n");
  CHECK_THROWS_AS(parse_experiment(bad), FormatError);
}

TEST_CASE("config snapshot lists every option") {
  SolverConfig cfg;
  const auto j = to_json(cfg);
  for (const auto& [k, v] : j.items()) {
    SolverConfig copy;
    const std::string text = v.is_string() ? v.get<std::string>() : v.is_boolean() ? (v.get<bool>() ? "true" : "false") : v.dump();
    CHECK_MESSAGE(apply_solver_option(copy, k, text), k);
  }
}
