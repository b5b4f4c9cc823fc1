/*
 Copyright 2026 The motr-bench Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#include "motr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace motr {

namespace {

const std::set<std::string> kControllerNames{"LQR", "GPC", "Hinf"};
const std::set<std::string> kGeneratorNames{"MOTR",     "OGA",      "Hinf", "Random",
                                            "Sinusoid", "Gaussian", "Zero"};

std::string budget_name(BudgetMode m) {
  return m == BudgetMode::kClip ? "clip" : "fixed_norm";
}

BudgetMode budget_from_name(const std::string& s, const std::string& path) {
  if (s == "clip") return BudgetMode::kClip;
  if (s == "fixed_norm") return BudgetMode::kFixedNorm;
  throw ConfigError(path, "expected \"clip\" or \"fixed_norm\", got \"" + s + "\"");
}

double mean_of(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

// Population std.
double std_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / v.size());
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

std::uint64_t parse_hex64(const std::string& s, const std::string& path) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(s, &used, 16);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(path, "expected a hex string");
  }
}

}  // namespace

void ExperimentConfig::materialize() {
  if (eta <= 0.0) {
    eta = default_eta(1.0, H * disturbance_dim * control_dim, D_M, H, T);
  }
  if (eps <= 0.0) eps = 1.0 / T;
  if (gpc_learning_rate <= 0.0) gpc_learning_rate = 1.0 / std::sqrt(T);
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const char* field, const char* what) {
    if (!ok) throw ConfigError(field, what);
  };
  need(state_dim >= 1, "dims.state", "must be >= 1");
  need(control_dim >= 1, "dims.control", "must be >= 1");
  need(disturbance_dim >= 1, "dims.disturbance", "must be >= 1");
  need(T >= 1, "T", "must be >= 1");
  need(n_systems >= 1, "n_systems", "must be >= 1");
  need(n_seeds >= 1, "n_seeds", "must be >= 1");
  need(target_radius > 0.0 && target_radius < 1.0, "target_radius",
       "must lie in (0, 1)");
  need(initial_state_norm >= 0.0, "initial_state_norm", "must be >= 0");
  need(q_weight >= 0.0, "cost.q_weight", "must be >= 0");
  need(r_weight > 0.0, "cost.r_weight", "must be > 0");
  need(W_max > 0.0, "W_max", "must be > 0");
  need(H >= 1, "motr.H", "must be >= 1");
  need(D_M > 0.0, "motr.D_M", "must be > 0");
  need(eta >= 0.0, "motr.eta", "must be >= 0");
  need(eps >= 0.0, "motr.eps", "must be >= 0");
  need(oga_step > 0.0, "motr.oga_step", "must be > 0");
  need(gpc_history >= 1, "gpc.history", "must be >= 1");
  need(gpc_learning_rate >= 0.0, "gpc.learning_rate", "must be >= 0");
  need(gpc_radius_scale > 0.0, "gpc.radius_scale", "must be > 0");
  need(hinf_gamma_lo > 0.0 && hinf_gamma_hi > hinf_gamma_lo, "hinf",
       "need 0 < gamma_lo < gamma_hi");
  need(hinf_rel_tol > 0.0, "hinf.rel_tol", "must be > 0");
  need(sinusoid_frequencies >= 1 && sinusoid_phases >= 1 &&
           sinusoid_random_directions >= 0,
       "sinusoid", "grid sizes must be positive");
  need(!controllers.empty(), "controllers", "must not be empty");
  need(!generators.empty(), "generators", "must not be empty");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < controllers.size(); ++i) {
    const std::string path = "controllers[" + std::to_string(i) + "]";
    if (!kControllerNames.count(controllers[i]))
      throw ConfigError(path, "unknown controller \"" + controllers[i] + "\"");
    if (!seen.insert("c" + controllers[i]).second)
      throw ConfigError(path, "duplicate entry");
  }
  for (std::size_t i = 0; i < generators.size(); ++i) {
    const std::string path = "generators[" + std::to_string(i) + "]";
    if (!kGeneratorNames.count(generators[i]))
      throw ConfigError(path, "unknown generator \"" + generators[i] + "\"");
    if (!seen.insert("g" + generators[i]).second)
      throw ConfigError(path, "duplicate entry");
  }
}

MotrConfig ExperimentConfig::motr_config(std::uint64_t seed) const {
  MotrConfig m;
  m.H = H;
  m.D_M = D_M;
  m.eta = eta;
  m.eps = eps;
  m.W_max = W_max;
  m.residual_bias = residual_bias;
  m.seed = seed;
  m.budget = budget;
  m.horizon = T;
  m.oga_step = oga_step;
  return m;
}

SinusoidGrid ExperimentConfig::sinusoid_grid() const {
  SinusoidGrid g;
  const double pi = std::acos(-1.0);
  for (int k = 0; k < sinusoid_frequencies; ++k) g.frequencies.push_back(pi * k / 16.0);
  for (int j = 0; j < sinusoid_phases; ++j)
    g.phases.push_back(2.0 * pi * j / sinusoid_phases);
  g.random_directions = sinusoid_random_directions;
  return g;
}

CostWeights ExperimentConfig::cost() const {
  return CostWeights(q_weight * MatrixXd::Identity(state_dim, state_dim),
                     r_weight * MatrixXd::Identity(control_dim, control_dim));
}

Json config_to_json(const ExperimentConfig& c) {
  return {
      {"dims",
       {{"state", c.state_dim}, {"control", c.control_dim},
        {"disturbance", c.disturbance_dim}}},
      {"T", c.T},
      {"n_systems", c.n_systems},
      {"n_seeds", c.n_seeds},
      {"base_seed", c.base_seed},
      {"target_radius", c.target_radius},
      {"initial_state_norm", c.initial_state_norm},
      {"cost", {{"q_weight", c.q_weight}, {"r_weight", c.r_weight}}},
      {"controllers", c.controllers},
      {"generators", c.generators},
      {"W_max", c.W_max},
      {"budget", budget_name(c.budget)},
      {"motr",
       {{"H", c.H}, {"D_M", c.D_M}, {"eta", c.eta}, {"eps", c.eps},
        {"residual_bias", c.residual_bias}, {"oga_step", c.oga_step}}},
      {"gpc",
       {{"history", c.gpc_history}, {"learning_rate", c.gpc_learning_rate},
        {"radius_scale", c.gpc_radius_scale}}},
      {"hinf",
       {{"gamma_lo", c.hinf_gamma_lo}, {"gamma_hi", c.hinf_gamma_hi},
        {"rel_tol", c.hinf_rel_tol}}},
      {"sinusoid",
       {{"frequencies", c.sinusoid_frequencies}, {"phases", c.sinusoid_phases},
        {"random_directions", c.sinusoid_random_directions}}},
      {"output_dir", c.output_dir},
  };
}

namespace {

void reject_unknown(const Json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) {
      throw ConfigError(path.empty() ? it.key() : path + "." + it.key(),
                        "unknown field");
    }
  }
}

template <typename T>
void read(const Json& j, const char* key, const std::string& path, T& out) {
  out = get_field_or<T>(j, key, path, out);
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  reject_unknown(j, "",
                 {"dims", "T", "n_systems", "n_seeds", "base_seed", "target_radius",
                  "initial_state_norm", "cost", "controllers", "generators",
                  "W_max", "budget", "motr", "gpc", "hinf", "sinusoid",
                  "output_dir"});
  const std::string root;
  if (j.contains("dims")) {
    const Json& d = j["dims"];
    reject_unknown(d, "dims", {"state", "control", "disturbance"});
    read(d, "state", "dims", c.state_dim);
    read(d, "control", "dims", c.control_dim);
    read(d, "disturbance", "dims", c.disturbance_dim);
  }
  read(j, "T", root, c.T);
  read(j, "n_systems", root, c.n_systems);
  read(j, "n_seeds", root, c.n_seeds);
  read(j, "base_seed", root, c.base_seed);
  read(j, "target_radius", root, c.target_radius);
  read(j, "initial_state_norm", root, c.initial_state_norm);
  if (j.contains("cost")) {
    reject_unknown(j["cost"], "cost", {"q_weight", "r_weight"});
    read(j["cost"], "q_weight", "cost", c.q_weight);
    read(j["cost"], "r_weight", "cost", c.r_weight);
  }
  read(j, "controllers", root, c.controllers);
  read(j, "generators", root, c.generators);
  read(j, "W_max", root, c.W_max);
  if (j.contains("budget")) {
    c.budget = budget_from_name(get_field<std::string>(j, "budget", root), "budget");
  }
  if (j.contains("motr")) {
    const Json& m = j["motr"];
    reject_unknown(m, "motr", {"H", "D_M", "eta", "eps", "residual_bias", "oga_step"});
    read(m, "H", "motr", c.H);
    read(m, "D_M", "motr", c.D_M);
    read(m, "eta", "motr", c.eta);
    read(m, "eps", "motr", c.eps);
    read(m, "residual_bias", "motr", c.residual_bias);
    read(m, "oga_step", "motr", c.oga_step);
  }
  if (j.contains("gpc")) {
    const Json& g = j["gpc"];
    reject_unknown(g, "gpc", {"history", "learning_rate", "radius_scale"});
    read(g, "history", "gpc", c.gpc_history);
    read(g, "learning_rate", "gpc", c.gpc_learning_rate);
    read(g, "radius_scale", "gpc", c.gpc_radius_scale);
  }
  if (j.contains("hinf")) {
    const Json& h = j["hinf"];
    reject_unknown(h, "hinf", {"gamma_lo", "gamma_hi", "rel_tol"});
    read(h, "gamma_lo", "hinf", c.hinf_gamma_lo);
    read(h, "gamma_hi", "hinf", c.hinf_gamma_hi);
    read(h, "rel_tol", "hinf", c.hinf_rel_tol);
  }
  if (j.contains("sinusoid")) {
    const Json& s = j["sinusoid"];
    reject_unknown(s, "sinusoid", {"frequencies", "phases", "random_directions"});
    read(s, "frequencies", "sinusoid", c.sinusoid_frequencies);
    read(s, "phases", "sinusoid", c.sinusoid_phases);
    read(s, "random_directions", "sinusoid", c.sinusoid_random_directions);
  }
  read(j, "output_dir", root, c.output_dir);
  c.validate();
  c.materialize();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path, e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------

void StableHash::byte(unsigned char b) {
  h_ ^= b;
  h_ *= 1099511628211ULL;
}

StableHash& StableHash::add(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) byte(static_cast<unsigned char>(v >> (8 * i)));
  return *this;
}

StableHash& StableHash::add(const std::string& s) {
  add(static_cast<std::uint64_t>(s.size()));
  for (char ch : s) byte(static_cast<unsigned char>(ch));
  return *this;
}

std::uint64_t StableHash::value() const {
  std::uint64_t z = h_ + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t episode_seed(std::uint64_t base_seed, int system_index,
                           int seed_index, const std::string& controller,
                           const std::string& generator) {
  return StableHash()
      .add(base_seed)
      .add(static_cast<std::uint64_t>(system_index))
      .add(static_cast<std::uint64_t>(seed_index))
      .add(controller)
      .add(generator)
      .value();
}

std::uint64_t system_seed(std::uint64_t base_seed, int system_index) {
  return StableHash()
      .add(std::string("system"))
      .add(base_seed)
      .add(static_cast<std::uint64_t>(system_index))
      .value();
}

VectorXd initial_state(std::uint64_t base_seed, int system_index, int seed_index,
                       int state_dim, double norm) {
  std::mt19937_64 rng(StableHash()
                          .add(std::string("x0"))
                          .add(base_seed)
                          .add(static_cast<std::uint64_t>(system_index))
                          .add(static_cast<std::uint64_t>(seed_index))
                          .value());
  std::normal_distribution<double> n01;
  VectorXd x(state_dim);
  for (int i = 0; i < state_dim; ++i) x(i) = n01(rng);
  const double len = x.norm();
  return len > 0.0 ? VectorXd(x * (norm / len)) : VectorXd::Zero(state_dim);
}

// ---------------------------------------------------------------------------

double RunRecord::recomputed_average() const {
  double total = 0.0;
  for (double c : stage_costs) total += c;
  return total / T;
}

Json record_to_json(const RunRecord& r) {
  Json j = {{"system_index", r.system_index},
            {"seed_index", r.seed_index},
            {"controller", r.controller},
            {"generator", r.generator},
            {"episode_seed", hex64(r.episode_seed)},
            {"T", r.T},
            {"cumulative_average_cost", r.cumulative_average_cost},
            {"max_control_norm", r.max_control_norm},
            {"max_state_norm", r.max_state_norm},
            {"max_disturbance_norm", r.max_disturbance_norm},
            {"diverged", r.diverged},
            {"diverged_at", r.diverged_at},
            {"trajectory_hash", hex64(r.trajectory_hash)},
            {"stage_costs", r.stage_costs},
            {"disturbances", r.disturbances}};
  if (r.regret) {
    j["regret"] = {{"hindsight", r.regret->hindsight},
                   {"achieved", r.regret->achieved}};
  } else {
    j["regret"] = nullptr;
  }
  return j;
}

RunRecord record_from_json(const Json& j) {
  const std::string p = "record";
  RunRecord r;
  r.system_index = get_field<int>(j, "system_index", p);
  r.seed_index = get_field<int>(j, "seed_index", p);
  r.controller = get_field<std::string>(j, "controller", p);
  r.generator = get_field<std::string>(j, "generator", p);
  r.episode_seed = parse_hex64(get_field<std::string>(j, "episode_seed", p),
                               p + ".episode_seed");
  r.T = get_field<int>(j, "T", p);
  r.cumulative_average_cost = get_field<double>(j, "cumulative_average_cost", p);
  r.max_control_norm = get_field<double>(j, "max_control_norm", p);
  r.max_state_norm = get_field<double>(j, "max_state_norm", p);
  r.max_disturbance_norm = get_field<double>(j, "max_disturbance_norm", p);
  r.diverged = get_field<bool>(j, "diverged", p);
  r.diverged_at = get_field<int>(j, "diverged_at", p);
  r.trajectory_hash = parse_hex64(get_field<std::string>(j, "trajectory_hash", p),
                                  p + ".trajectory_hash");
  r.stage_costs = get_field<std::vector<double>>(j, "stage_costs", p);
  r.disturbances =
      get_field<std::vector<std::vector<double>>>(j, "disturbances", p);
  const Json& reg = get_field<Json>(j, "regret", p);
  if (!reg.is_null()) {
    r.regret = RegretAudit{get_field<double>(reg, "hindsight", p + ".regret"),
                           get_field<double>(reg, "achieved", p + ".regret")};
  }
  return r;
}

RunRecord run_episode(const LinearSystem& sys, Controller& controller,
                      Generator& generator, const CostWeights& cw, int T,
                      const VectorXd& x0, TrajectoryLog* log) {
  detail::require(T >= 1, "run_episode: T must be >= 1");
  detail::require(x0.size() == sys.state_dim(), "run_episode: x0 has wrong size");
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.controller = controller.name();
  rec.generator = generator.name();
  rec.T = T;
  rec.stage_costs.reserve(T);

  StableHash hash;
  auto absorb = [&hash](const VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      std::uint64_t bits;
      const double d = v(i);
      std::memcpy(&bits, &d, sizeof bits);
      hash.add(bits);
    }
  };

  if (log) *log = TrajectoryLog{};
  VectorXd x = x0;
  if (log) log->states.push_back(x);
  absorb(x);
  rec.max_state_norm = x.norm();
  double total = 0.0;
  for (int t = 0; t < T; ++t) {
    const VectorXd u = controller.control(x);
    const VectorXd w = generator.emit(x);
    const double c = stage_cost(cw, x, u);
    VectorXd next = step(sys, x, u, w);
    total += c;
    rec.stage_costs.push_back(c);
    rec.disturbances.emplace_back(w.data(), w.data() + w.size());
    if (log) {
      log->controls.push_back(u);
      log->disturbances.push_back(w);
      log->stage_costs.push_back(c);
    }
    rec.max_control_norm = std::max(rec.max_control_norm, u.norm());
    rec.max_disturbance_norm = std::max(rec.max_disturbance_norm, w.norm());
    const double n = next.norm();
    if (!(n <= kDivergenceThreshold)) {
      rec.diverged = true;
      rec.diverged_at = t;
      break;
    }
    generator.reveal(u, c, next);
    controller.observe(x, u, next);
    x = std::move(next);
    if (log) log->states.push_back(x);
    absorb(x);
    rec.max_state_norm = std::max(rec.max_state_norm, n);
  }
  rec.cumulative_average_cost = total / T;
  rec.trajectory_hash = hash.value();
  rec.regret = generator.regret_pair();
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                      .count();
  return rec;
}

SystemSetup make_system(const ExperimentConfig& cfg, int system_index) {
  LinearSystem sys =
      random_system(cfg.state_dim, cfg.control_dim, cfg.disturbance_dim,
                    system_seed(cfg.base_seed, system_index), cfg.target_radius);
  CostWeights cw = cfg.cost();
  LqrSolution lqr = solve_dare(sys, cw);
  HinfSolution hinf = hinf_bisection(sys, cw, cfg.hinf_gamma_lo, cfg.hinf_gamma_hi,
                                     cfg.hinf_rel_tol);
  return {std::move(sys), std::move(cw), std::move(lqr), std::move(hinf)};
}

std::unique_ptr<Controller> make_controller(const ExperimentConfig& cfg,
                                            const SystemSetup& s,
                                            const std::string& name) {
  if (name == "LQR") return std::make_unique<LinearFeedbackController>("LQR", s.lqr.K);
  if (name == "Hinf") return hinf_controller(s.hinf);
  if (name == "GPC") {
    GpcOptions o;
    o.history = cfg.gpc_history;
    o.learning_rate = cfg.gpc_learning_rate;
    o.radius = cfg.gpc_radius_scale * s.lqr.K.norm();
    o.horizon = cfg.T;
    return gpc_controller(s.sys, s.cw, s.lqr.K, o);
  }
  throw ArgumentError("make_controller: unknown controller " + name);
}

std::unique_ptr<Generator> make_generator(const ExperimentConfig& cfg,
                                          const SystemSetup& s,
                                          const std::string& name,
                                          std::uint64_t seed) {
  const int dw = cfg.disturbance_dim;
  if (name == "MOTR") return motr_generator(s.sys, s.cw, s.hinf, cfg.motr_config(seed));
  if (name == "OGA") return oga_generator(s.sys, s.cw, s.hinf, cfg.motr_config(seed));
  if (name == "Hinf") return hinf_generator(s.hinf, cfg.W_max, cfg.budget);
  if (name == "Random") return random_direction_generator(dw, cfg.W_max, seed);
  if (name == "Gaussian") return gaussian_generator(dw, cfg.W_max, seed);
  if (name == "Zero") return zero_generator(dw);
  if (name == "Sinusoid") {
    return sinusoid_generator(s.sys, s.cw, cfg.W_max, cfg.T, cfg.sinusoid_grid(),
                              seed);
  }
  throw ArgumentError("make_generator: unknown generator " + name);
}

EpisodeKey key_of(const RunRecord& r) {
  return {r.system_index, r.seed_index, r.controller, r.generator};
}

void sort_records(std::vector<RunRecord>& records) {
  std::sort(records.begin(), records.end(),
            [](const RunRecord& a, const RunRecord& b) { return key_of(a) < key_of(b); });
}

GridResult run_grid(const ExperimentConfig& cfg, int jobs,
                    const std::vector<EpisodeKey>& skip) {
  const std::set<EpisodeKey> done(skip.begin(), skip.end());
  std::vector<EpisodeKey> todo;
  for (int i = 0; i < cfg.n_systems; ++i)
    for (int j = 0; j < cfg.n_seeds; ++j)
      for (const auto& c : cfg.controllers)
        for (const auto& g : cfg.generators) {
          EpisodeKey k{i, j, c, g};
          if (!done.count(k)) todo.push_back(std::move(k));
        }

  GridResult out;
  // Systems are shared read-only across workers.
  std::vector<std::optional<SystemSetup>> setups(cfg.n_systems);
  std::vector<std::string> setup_errors(cfg.n_systems);
  for (int i = 0; i < cfg.n_systems; ++i) {
    try {
      setups[i] = make_system(cfg, i);
    } catch (const std::exception& e) {
      setup_errors[i] = e.what();
    }
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= todo.size()) return;
      const EpisodeKey& k = todo[idx];
      const auto& setup = setups[k.system_index];
      try {
        if (!setup) throw SolverError("system setup failed: " + setup_errors[k.system_index]);
        const std::uint64_t seed =
            episode_seed(cfg.base_seed, k.system_index, k.seed_index, k.controller,
                         k.generator);
        auto ctrl = make_controller(cfg, *setup, k.controller);
        auto gen = make_generator(cfg, *setup, k.generator, seed);
        RunRecord rec = run_episode(
            setup->sys, *ctrl, *gen, setup->cw, cfg.T,
            initial_state(cfg.base_seed, k.system_index, k.seed_index,
                          cfg.state_dim, cfg.initial_state_norm));
        rec.system_index = k.system_index;
        rec.seed_index = k.seed_index;
        rec.controller = k.controller;
        rec.generator = k.generator;
        rec.episode_seed = seed;
        std::lock_guard<std::mutex> lock(mu);
        out.records.push_back(std::move(rec));
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        out.failures.push_back({k, e.what()});
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(todo.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  sort_records(out.records);
  std::sort(out.failures.begin(), out.failures.end(),
            [](const EpisodeFailure& a, const EpisodeFailure& b) { return a.key < b.key; });
  return out;
}

// ---------------------------------------------------------------------------

const AggregateCell& AggregateTable::at(const std::string& controller,
                                        const std::string& generator) const {
  for (const auto& c : cells)
    if (c.controller == controller && c.generator == generator) return c;
  throw ArgumentError("AggregateTable: no cell " + controller + "/" + generator);
}

AggregateTable normalize_scores(std::vector<RunRecord> records) {
  if (records.empty()) throw AggregationError("normalize_scores: no records", {});
  sort_records(records);
  std::set<int> systems, seeds;
  std::set<std::string> ctrls, gens;
  std::map<EpisodeKey, const RunRecord*> index;
  for (const auto& r : records) {
    systems.insert(r.system_index);
    seeds.insert(r.seed_index);
    ctrls.insert(r.controller);
    gens.insert(r.generator);
    if (!index.emplace(key_of(r), &r).second) {
      throw AggregationError("normalize_scores: duplicate record " + r.controller +
                                 "/" + r.generator,
                             {});
    }
  }
  std::vector<EpisodeKey> missing;
  for (int i : systems)
    for (int j : seeds)
      for (const auto& c : ctrls)
        for (const auto& g : gens)
          if (!index.count({i, j, c, g})) missing.push_back({i, j, c, g});
  if (!missing.empty()) {
    std::ostringstream os;
    os << "normalize_scores: incomplete grid, missing " << missing.size() << " cell(s):";
    for (const auto& k : missing) {
      os << " (system " << k.system_index << ", seed " << k.seed_index << ", "
         << k.controller << ", " << k.generator << ")";
    }
    throw AggregationError(os.str(), std::move(missing));
  }

  AggregateTable table;
  table.controllers.assign(ctrls.begin(), ctrls.end());
  table.generators.assign(gens.begin(), gens.end());
  table.n_systems = static_cast<int>(systems.size());
  table.n_seeds = static_cast<int>(seeds.size());
  const std::size_t G = gens.size();

  for (const auto& c : table.controllers) {
    std::vector<std::vector<double>> ratio(G), minmax(G);
    std::vector<int> diverged(G, 0);
    for (int i : systems) {
      // Worst finite cost in the (system, controller) cell stands in for
      // diverged runs.
      double worst = 0.0;
      for (int j : seeds)
        for (const auto& g : gens) {
          const RunRecord* r = index.at({i, j, c, g});
          if (!r->diverged) worst = std::max(worst, r->cumulative_average_cost);
        }
      std::vector<double> mean(G, 0.0);
      std::size_t gi = 0;
      for (const auto& g : gens) {
        for (int j : seeds) {
          const RunRecord* r = index.at({i, j, c, g});
          if (r->diverged) ++diverged[gi];
          mean[gi] += r->diverged ? worst : r->cumulative_average_cost;
        }
        mean[gi] /= seeds.size();
        ++gi;
      }
      const double hi = *std::max_element(mean.begin(), mean.end());
      const double lo = *std::min_element(mean.begin(), mean.end());
      for (std::size_t g = 0; g < G; ++g) {
        ratio[g].push_back(hi > 0.0 ? mean[g] / hi : 1.0);
        minmax[g].push_back(hi > lo ? (mean[g] - lo) / (hi - lo) : 1.0);
      }
    }
    std::vector<AggregateCell> column(G);
    double best_ratio = 0.0, best_minmax = 0.0;
    std::size_t gi = 0;
    for (const auto& g : gens) {
      auto& cell = column[gi];
      cell.controller = c;
      cell.generator = g;
      cell.ratio_mean = mean_of(ratio[gi]);
      cell.ratio_std = std_of(ratio[gi]);
      cell.minmax_mean = mean_of(minmax[gi]);
      cell.minmax_std = std_of(minmax[gi]);
      cell.diverged = diverged[gi];
      best_ratio = std::max(best_ratio, cell.ratio_mean);
      best_minmax = std::max(best_minmax, cell.minmax_mean);
      ++gi;
    }
    for (auto& cell : column) {
      if (best_ratio > 0.0) {
        cell.ratio_mean /= best_ratio;
        cell.ratio_std /= best_ratio;
      }
      if (best_minmax > 0.0) {
        cell.minmax_mean /= best_minmax;
        cell.minmax_std /= best_minmax;
      }
      table.cells.push_back(std::move(cell));
    }
  }
  return table;
}

std::string table_csv(const AggregateTable& table, bool ratio) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "controller,generator,mean,std,n_systems,n_seeds,diverged\n";
  for (const auto& c : table.cells) {
    os << c.controller << ',' << c.generator << ','
       << (ratio ? c.ratio_mean : c.minmax_mean) << ','
       << (ratio ? c.ratio_std : c.minmax_std) << ',' << table.n_systems << ','
       << table.n_seeds << ',' << c.diverged << '\n';
  }
  return os.str();
}

std::string table_text(const AggregateTable& table) {
  std::ostringstream os;
  auto section = [&](bool ratio, const char* title) {
    os << title << "\n";
    os << std::left << std::setw(12) << "generator";
    for (const auto& c : table.controllers) os << std::setw(18) << c;
    os << "\n";
    for (const auto& g : table.generators) {
      os << std::setw(12) << g;
      for (const auto& c : table.controllers) {
        const auto& cell = table.at(c, g);
        std::ostringstream v;
        v << std::fixed << std::setprecision(3)
          << (ratio ? cell.ratio_mean : cell.minmax_mean) << " +- "
          << (ratio ? cell.ratio_std : cell.minmax_std);
        os << std::setw(18) << v.str();
      }
      os << "\n";
    }
  };
  section(true, "ratio to best (mean +- std over systems)");
  os << "\n";
  section(false, "min-max rescaled (mean +- std over systems)");
  os << "\n" << table.n_systems << " systems, " << table.n_seeds << " seeds\n";
  return os.str();
}

// ---------------------------------------------------------------------------

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  detail::require(x.size() == y.size(), "loglog_slope: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.size() < 2) return 0.0;
  const double mx = mean_of(lx), my = mean_of(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

std::vector<RegretRow> regret_curve(
    const SystemSetup& setup,
    const std::function<std::unique_ptr<Controller>(int T)>& make_ctrl,
    const MotrConfig& base, std::span<const int> T_grid, int seeds,
    std::uint64_t base_seed, double x0_norm) {
  detail::require(seeds >= 1, "regret_curve: seeds must be >= 1");
  for (std::size_t i = 1; i < T_grid.size(); ++i) {
    detail::require(T_grid[i] > T_grid[i - 1], "regret_curve: T_grid must increase");
  }
  std::vector<RegretRow> rows;
  for (int T : T_grid) {
    RegretRow row;
    row.T = T;
    for (int s = 0; s < seeds; ++s) {
      MotrConfig cfg = base;
      cfg.horizon = T;
      cfg.record_history = true;
      cfg.seed = StableHash()
                     .add(std::string("regret"))
                     .add(base_seed)
                     .add(static_cast<std::uint64_t>(T))
                     .add(static_cast<std::uint64_t>(s))
                     .value();
      auto gen = motr_generator(setup.sys, setup.cw, setup.hinf, cfg);
      auto ctrl = make_ctrl(T);
      run_episode(setup.sys, *ctrl, *gen, setup.cw, T,
                  initial_state(base_seed, 0, s, setup.sys.state_dim(), x0_norm));
      const RegretAudit a = regret_audit(gen->history(), gen->plays(), cfg.D_M);
      row.hindsight += a.hindsight / seeds;
      row.achieved += a.achieved / seeds;
    }
    row.regret = row.hindsight - row.achieved;
    row.regret_per_T = row.regret / T;
    rows.push_back(row);
  }
  std::vector<double> xs, ys;
  for (const auto& r : rows) {
    xs.push_back(r.T);
    ys.push_back(r.regret);
  }
  const double slope = loglog_slope(xs, ys);
  for (auto& r : rows) r.slope = slope;
  return rows;
}

std::string regret_csv(std::span<const RegretRow> rows) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "T,hindsight,achieved,regret,regret_per_T,slope\n";
  for (const auto& r : rows) {
    os << r.T << ',' << r.hindsight << ',' << r.achieved << ',' << r.regret << ','
       << r.regret_per_T << ',' << r.slope << '\n';
  }
  return os.str();
}

}  // namespace motr
