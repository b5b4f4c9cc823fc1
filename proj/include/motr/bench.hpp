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
#pragma once

// Experiment harness: episode runner, per-episode seeding, score
// normalization and empirical regret curves.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motr/common.hpp"
#include "motr/controllers.hpp"
#include "motr/generators.hpp"
#include "motr/lds_core.hpp"
#include "motr/serialization.hpp"

namespace motr {

inline constexpr double kDivergenceThreshold = 1e12;

/// Every knob of a benchmark run. After load() nothing is implicit, so the
/// snapshot written next to the outputs reproduces the run on its own.
struct ExperimentConfig {
  int state_dim = 4;
  int control_dim = 2;
  int disturbance_dim = 2;
  int T = 200;
  int n_systems = 11;
  int n_seeds = 10;
  std::uint64_t base_seed = 20260101;
  double target_radius = 0.9;
  double initial_state_norm = 1.0;
  double q_weight = 1.0;  // Q = q I
  double r_weight = 1.0;  // R = r I

  std::vector<std::string> controllers{"LQR", "GPC", "Hinf"};
  std::vector<std::string> generators{"MOTR", "OGA",      "Hinf",
                                      "Random", "Sinusoid", "Gaussian"};

  double W_max = 1.0;
  BudgetMode budget = BudgetMode::kFixedNorm;

  // MOTR / OGA
  int H = 8;
  double D_M = 0.5;
  double eta = 1.0;  // 0 resolves to the theory rate, far too noisy at T = 200
  double eps = 0.0;  // 0 resolves to 1/T
  bool residual_bias = true;
  double oga_step = 0.01;

  // GPC
  int gpc_history = 5;
  double gpc_learning_rate = 0.0;  // 0 resolves to 1/sqrt(T)
  double gpc_radius_scale = 10.0;  // radius = scale * |K_lqr|_F

  // H-infinity synthesis
  double hinf_gamma_lo = 1e-3;
  double hinf_gamma_hi = 1e6;
  double hinf_rel_tol = 1e-4;

  // Sinusoid search grid
  int sinusoid_frequencies = 17;  // omega = pi k / 16
  int sinusoid_phases = 8;
  int sinusoid_random_directions = 8;

  std::string output_dir = "out";

  /// Replaces the 0 sentinels with their resolved values.
  void materialize();
  void validate() const;
  MotrConfig motr_config(std::uint64_t seed) const;
  SinusoidGrid sinusoid_grid() const;
  CostWeights cost() const;
};

Json config_to_json(const ExperimentConfig& cfg);
/// Missing fields take defaults; unknown fields and bad values throw
/// ConfigError naming the field. The result is materialized and validated.
ExperimentConfig config_from_json(const Json& j);
/// Parses a file; JSON syntax errors carry line and column.
ExperimentConfig load_config(const std::string& path);

/// FNV-1a over the fed words, finished with a splitmix64 round.
class StableHash {
 public:
  StableHash& add(std::uint64_t v);
  StableHash& add(const std::string& s);
  std::uint64_t value() const;

 private:
  void byte(unsigned char b);
  std::uint64_t h_ = 14695981039346656037ULL;
};

std::uint64_t episode_seed(std::uint64_t base_seed, int system_index,
                           int seed_index, const std::string& controller,
                           const std::string& generator);
std::uint64_t system_seed(std::uint64_t base_seed, int system_index);
/// Shared by every (controller, generator) pair of a (system, seed) cell.
VectorXd initial_state(std::uint64_t base_seed, int system_index, int seed_index,
                       int state_dim, double norm);

struct RunRecord {
  int system_index = 0;
  int seed_index = 0;
  std::string controller;
  std::string generator;
  std::uint64_t episode_seed = 0;
  int T = 0;
  double cumulative_average_cost = 0.0;
  double max_control_norm = 0.0;
  double max_state_norm = 0.0;
  double max_disturbance_norm = 0.0;
  bool diverged = false;
  int diverged_at = -1;
  std::optional<RegretAudit> regret;
  std::vector<double> stage_costs;  // the trajectory digest
  std::vector<std::vector<double>> disturbances;  // emitted w_t, for audit
  std::uint64_t trajectory_hash = 0;
  double wall_time = 0.0;  // kept out of runs.jsonl

  /// Sum of the digest over T.
  double recomputed_average() const;
};

Json record_to_json(const RunRecord& r);
RunRecord record_from_json(const Json& j);

/// Plays T rounds: u_t = controller(x_t), w_t = generator(x_t), cost, step,
/// then both sides observe. Stops early and flags divergence once |x| > 1e12.
/// When `log` is given it receives the full trajectory.
RunRecord run_episode(const LinearSystem& sys, Controller& controller,
                      Generator& generator, const CostWeights& cw, int T,
                      const VectorXd& x0, TrajectoryLog* log = nullptr);

/// Plant and synthesized gains of one benchmark system.
struct SystemSetup {
  LinearSystem sys;
  CostWeights cw;
  LqrSolution lqr;
  HinfSolution hinf;
};

SystemSetup make_system(const ExperimentConfig& cfg, int system_index);

std::unique_ptr<Controller> make_controller(const ExperimentConfig& cfg,
                                            const SystemSetup& setup,
                                            const std::string& name);
std::unique_ptr<Generator> make_generator(const ExperimentConfig& cfg,
                                          const SystemSetup& setup,
                                          const std::string& name,
                                          std::uint64_t seed);

struct EpisodeKey {
  int system_index;
  int seed_index;
  std::string controller;
  std::string generator;
  auto operator<=>(const EpisodeKey&) const = default;
};

EpisodeKey key_of(const RunRecord& r);

struct EpisodeFailure {
  EpisodeKey key;
  std::string message;
};

struct GridResult {
  std::vector<RunRecord> records;  // sorted by key
  std::vector<EpisodeFailure> failures;
};

/// Runs every cell of the grid not listed in `skip`, on `jobs` threads.
GridResult run_grid(const ExperimentConfig& cfg, int jobs,
                    const std::vector<EpisodeKey>& skip = {});

void sort_records(std::vector<RunRecord>& records);

struct AggregateCell {
  std::string controller;
  std::string generator;
  double ratio_mean = 0.0;
  double ratio_std = 0.0;
  double minmax_mean = 0.0;
  double minmax_std = 0.0;
  int diverged = 0;
};

struct AggregateTable {
  std::vector<std::string> controllers;  // sorted
  std::vector<std::string> generators;   // sorted
  std::vector<AggregateCell> cells;      // controller-major
  int n_systems = 0;
  int n_seeds = 0;

  const AggregateCell& at(const std::string& controller,
                          const std::string& generator) const;
};

class AggregationError : public std::runtime_error {
 public:
  AggregationError(const std::string& what, std::vector<EpisodeKey> missing)
      : std::runtime_error(what), missing_(std::move(missing)) {}
  const std::vector<EpisodeKey>& missing() const { return missing_; }

 private:
  std::vector<EpisodeKey> missing_;
};

/// Seed-average per (system, controller, generator); per (system, controller)
/// both divide by the worst generator (ratio) and min-max rescale; average
/// over systems; finally each controller column is divided by its best
/// generator. Std is over systems. Diverged runs take the worst finite cost of
/// their (system, controller) cell.
AggregateTable normalize_scores(std::vector<RunRecord> records);

std::string table_csv(const AggregateTable& table, bool ratio);
std::string table_text(const AggregateTable& table);

struct RegretRow {
  int T = 0;
  double hindsight = 0.0;
  double achieved = 0.0;
  double regret = 0.0;
  double regret_per_T = 0.0;
  double slope = 0.0;  // least-squares slope of log regret vs log T, whole grid
};

/// Least-squares slope of log y against log x over the positive-y points.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Average surrogate regret of MOTR over `seeds` episodes per horizon.
/// eta and eps are re-resolved for each T when the base config leaves them 0.
std::vector<RegretRow> regret_curve(
    const SystemSetup& setup,
    const std::function<std::unique_ptr<Controller>(int T)>& make_ctrl,
    const MotrConfig& base, std::span<const int> T_grid, int seeds,
    std::uint64_t base_seed, double x0_norm);

std::string regret_csv(std::span<const RegretRow> rows);

}  // namespace motr
