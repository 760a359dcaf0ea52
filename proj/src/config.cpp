#include "ttsalsa/config.hpp"

#include "ttsalsa/errors.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace ttsalsa {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw FormatError("option '" + key + "': expected a number, got '" + v + "'");
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw FormatError("option '" + key + "': expected an integer, got '" + v + "'");
  }
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw FormatError("option '" + key + "': expected an unsigned integer, got '" + v + "'");
  }
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw FormatError("option '" + key + "': expected true or false, got '" + v + "'");
}

template <typename F>
auto wrap(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ArgumentError& e) {
    throw FormatError("option '" + key + "': " + e.what());
  }
}

}  // namespace

std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw FormatError("line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) throw FormatError("line " + std::to_string(lineno) + ": repeated key " + key);
  }
  return out;
}

bool apply_solver_option(SolverConfig& cfg, const std::string& key, const std::string& v) {
  RankControlParams& r = cfg.rank;
  if (key == "algorithm") cfg.algorithm = wrap(key, [&] { return parse_algorithm(v); });
  else if (key == "control_fraction") cfg.control_fraction = to_double(key, v);
  else if (key == "max_iters") cfg.max_iters = to_int(key, v);
  else if (key == "warmup_sweeps") cfg.warmup_sweeps = to_int(key, v);
  else if (key == "virtual_rank_iter") cfg.virtual_rank_iter = to_int(key, v);
  else if (key == "final_cut") cfg.final_cut = to_bool(key, v);
  else if (key == "exact_fit_tol") cfg.exact_fit_tol = to_double(key, v);
  else if (key == "seed") cfg.seed = to_u64(key, v);
  else if (key == "order") {
    if (v == "bidirectional") cfg.order = SweepOrder::bidirectional;
    else if (v == "forward") cfg.order = SweepOrder::forward;
    else throw FormatError("option 'order': expected bidirectional or forward");
  } else if (key == "greedy_selection") {
    if (v == "max") cfg.greedy_selection = GreedySelection::max;
    else if (v == "min") cfg.greedy_selection = GreedySelection::min;
    else throw FormatError("option 'greedy_selection': expected max or min");
  } else if (key == "als_rank") cfg.als_rank = to_int(key, v);
  else if (key == "inner_max_sweeps") cfg.inner_max_sweeps = to_int(key, v);
  else if (key == "theta_virt") r.theta_virt = to_double(key, v);
  else if (key == "theta_stab") r.theta_stab = to_double(key, v);
  else if (key == "theta_stab_tilde") r.theta_stab_tilde = to_double(key, v);
  else if (key == "omega_tilde0") r.omega_tilde0 = to_double(key, v);
  else if (key == "f_omega") r.f_omega = to_double(key, v);
  else if (key == "gamma_star") r.gamma_star = to_double(key, v);
  else if (key == "beta_min") r.beta_min = to_double(key, v);
  else if (key == "f_p2") r.f_p2 = to_double(key, v);
  else if (key == "spectrum_tol") r.spectrum_tol = to_double(key, v);
  else if (key == "window") r.window = to_int(key, v);
  else if (key == "r_lim") r.r_lim = to_int(key, v);
  else if (key == "fixpoint_damping") r.fixpoint_damping = to_double(key, v);
  else if (key == "fixpoint_steps") r.fixpoint_steps = to_int(key, v);
  else if (key == "accelerate") r.accelerate = to_bool(key, v);
  else if (key == "divergence_min_iter") r.divergence_min_iter = to_int(key, v);
  else if (key == "boundary") r.boundary = wrap(key, [&] { return parse_boundary_rule(v); });
  else return false;
  return true;
}

SolverConfig load_solver_config(const std::string& path, SolverConfig base) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file " + path);
  for (const auto& [k, v] : parse_key_values(in)) {
    if (!apply_solver_option(base, k, v)) throw FormatError("unknown config key '" + k + "'");
  }
  return base;
}

ExperimentSpec parse_experiment(std::istream& in) {
  ExperimentSpec spec;
  for (const auto& [k, v] : parse_key_values(in)) {
    if (k == "target") spec.kind = wrap(k, [&] { return parse_target_kind(v); });
    else if (k == "d") spec.d = to_int(k, v);
    else if (k == "n") spec.n = to_int(k, v);
    else if (k == "C_sf" || k == "c_sf") spec.c_sf = to_double(k, v);
    else if (k == "r_P" || k == "r_p") spec.r_p = to_int(k, v);
    else if (k == "k") spec.k = to_int(k, v);
    else if (k == "alpha") spec.alpha = to_double(k, v);
    else if (k == "beta") spec.beta = to_double(k, v);
    else if (k == "trials") spec.trials = to_int(k, v);
    else if (k == "seed") spec.seed = to_u64(k, v);
    else if (k == "success_tol") spec.success_tol = to_double(k, v);
    else if (k == "algorithms") {
      spec.algorithms.clear();
      std::stringstream ss(v);
      for (std::string item; std::getline(ss, item, ',');) {
        spec.algorithms.push_back(wrap(k, [&] { return parse_algorithm(trim(item)); }));
      }
    } else if (!apply_solver_option(spec.solver, k, v)) {
      throw FormatError("unknown experiment key '" + k + "'");
    }
  }
  wrap("experiment", [&] {
    validate(spec);
    return 0;
  });
  return spec;
}

ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open experiment file " + path);
  return parse_experiment(in);
}

nlohmann::json to_json(const SolverConfig& cfg) {
  const RankControlParams& r = cfg.rank;
  nlohmann::json j;
  j["algorithm"] = to_string(cfg.algorithm);
  j["control_fraction"] = cfg.control_fraction;
  j["max_iters"] = cfg.max_iters;
  j["warmup_sweeps"] = cfg.warmup_sweeps;
  j["virtual_rank_iter"] = cfg.virtual_rank_iter;
  j["final_cut"] = cfg.final_cut;
  j["exact_fit_tol"] = cfg.exact_fit_tol;
  j["seed"] = cfg.seed;
  j["order"] = cfg.order == SweepOrder::forward ? "forward" : "bidirectional";
  j["greedy_selection"] = cfg.greedy_selection == GreedySelection::max ? "max" : "min";
  j["als_rank"] = cfg.als_rank;
  j["inner_max_sweeps"] = cfg.inner_max_sweeps;
  j["theta_virt"] = r.theta_virt;
  j["theta_stab"] = r.theta_stab;
  j["theta_stab_tilde"] = r.theta_stab_tilde;
  j["omega_tilde0"] = r.omega_tilde0;
  j["f_omega"] = r.f_omega;
  j["gamma_star"] = r.gamma_star;
  j["beta_min"] = r.beta_min;
  j["f_p2"] = r.f_p2;
  j["spectrum_tol"] = r.spectrum_tol;
  j["window"] = r.window;
  j["r_lim"] = r.r_lim;
  j["fixpoint_damping"] = r.fixpoint_damping;
  j["fixpoint_steps"] = r.fixpoint_steps;
  j["accelerate"] = r.accelerate;
  j["divergence_min_iter"] = r.divergence_min_iter;
  j["boundary"] = to_string(r.boundary);
  return j;
}

}  // namespace ttsalsa
