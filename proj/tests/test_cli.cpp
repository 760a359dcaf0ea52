#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SALSA_TT_BINARY) + " -q " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("salsa_tt_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("bad input exits with 2") {
  const fs::path dir = scratch("bad");
  CHECK(run("gen-target --kind nonsense --out " + (dir / "t.tt").string()) == 2);
  CHECK(run("solve --samples " + (dir / "missing.txt").string()) == 2);
  CHECK(run("") == 2);
}

TEST_CASE("generate, sample and solve a rank-one target") {
  const fs::path dir = scratch("solve");
  const std::string tt = (dir / "t.tt").string();
  REQUIRE(run("gen-target --kind random_tt --d 4 --n 5 --k 1 --seed 3 --out " + tt) == 0);
  CHECK(fs::exists(tt + ".manifest.json"));
  const std::string p = (dir / "p.txt").string(), c = (dir / "c.txt").string();
  REQUIRE(run("sample --target " + tt + " --csf 8 --rp 1 --seed 4 --out " + p + " --control-out " + c) == 0);
  const std::string v = (dir / "v.txt").string();
  REQUIRE(run("sample --target " + tt + " --csf 8 --rp 1 --seed 5 --out " + v) == 0);

  const fs::path trace = dir / "trace.csv", out = dir / "summary.json";
  const std::string solve = "solve --samples " + p + " --control " + c + " --verify " + v + " --rlim 3 --seed 6";
  REQUIRE(run(solve + " --trace " + trace.string() + " --out " + out.string()) == 0);
  const auto summary = nlohmann::json::parse(slurp(out))["summary"];
  CHECK(summary["verdict"] != "diverged");
  CHECK(summary["res_P_rel"].get<double>() < 1e-8);

  const std::string text = slurp(trace);
  std::istringstream lines(text);
  std::string line;
  int count = 0;
  std::getline(lines, line);
  CHECK(line == "iter,omega_tilde,omega,res_P_rel,res_P2_rel,ranks,stabilized_ranks,sigma_min");
  while (std::getline(lines, line)) ++count;
  CHECK(count == summary["iterations"].get<int>() + 1);

  const fs::path trace2 = dir / "trace2.csv";
  REQUIRE(run(solve + " --trace " + trace2.string() + " --out " + (dir / "s2.json").string()) == 0);
  CHECK(slurp(trace2) == text);
}

TEST_CASE("benchmark smoke run") {
  const fs::path dir = scratch("bench");
  {
    std::ofstream spec(dir / "spec.txt");
    spec << "target = domino\nd = 3\nn = 5\nC_sf = 2\nr_P = 2\ntrials = 2\nr_lim = 3\nalgorithms = salsa, als\n";
  }
  REQUIRE(run("benchmark --spec " + (dir / "spec.txt").string() + " --out-dir " + (dir / "out").string()) == 0);
  const std::string report = slurp(dir / "out" / "report.csv");
  std::istringstream lines(report);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 3);
  CHECK(fs::exists(dir / "out" / "trials.csv"));
}
