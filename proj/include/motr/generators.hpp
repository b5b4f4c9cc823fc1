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

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "motr/cdg.hpp"
#include "motr/common.hpp"
#include "motr/controllers.hpp"
#include "motr/lds_core.hpp"
#include "motr/online_learner.hpp"

namespace motr {

/// How the per-step disturbance budget W_max is enforced.
///   kClip:      scale down only when |w| > W_max.
///   kFixedNorm: every nonzero w is rescaled to |w| = W_max, so generators
///               compete on direction alone.
enum class BudgetMode { kClip, kFixedNorm };

/// w unchanged if |w| <= W_max, else w * W_max / |w|.
VectorXd normalize_budget(const VectorXd& w, double W_max);

VectorXd apply_budget(const VectorXd& w, double W_max, BudgetMode mode);

/// Thrown when emit/reveal are called out of order.
class CausalityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Round protocol shared by every disturbance generator. At round t the
/// generator sees x_t and emits w_t; only afterwards is it shown u_t, the stage
/// cost and x_{t+1}.
class Generator {
 public:
  explicit Generator(std::string name) : name_(std::move(name)) {}
  virtual ~Generator() = default;

  VectorXd emit(const VectorXd& x) {
    if (awaiting_reveal_) {
      throw CausalityError(name_ + ": emit called twice without reveal");
    }
    awaiting_reveal_ = true;
    return do_emit(x);
  }

  void reveal(const VectorXd& u, double cost, const VectorXd& x_next) {
    if (!awaiting_reveal_) {
      throw CausalityError(name_ + ": reveal called before emit");
    }
    awaiting_reveal_ = false;
    do_reveal(u, cost, x_next);
  }

  const std::string& name() const { return name_; }

  /// Surrogate-reward regret bookkeeping; only learning generators have it.
  virtual std::optional<RegretAudit> regret_pair() const { return std::nullopt; }

 protected:
  virtual VectorXd do_emit(const VectorXd& x) = 0;
  virtual void do_reveal(const VectorXd& /*u*/, double /*cost*/,
                         const VectorXd& /*x_next*/) {}

 private:
  std::string name_;
  bool awaiting_reveal_ = false;
};

struct MotrConfig {
  int H = 8;
  double D_M = 0.5;
  double eta = 0.0;  // <= 0: default_eta(R = 1, d = H d_w d_u, D_M, H, T)
  double eps = 0.0;  // <= 0: 1 / T
  double W_max = 1.0;
  bool residual_bias = true;
  std::uint64_t seed = 0;
  BudgetMode budget = BudgetMode::kFixedNorm;
  int horizon = 200;        // T, used for the eta and eps defaults
  double oga_step = 0.01;   // OGA only
  bool learning = true;     // false freezes the initial policy
  bool record_history = false;  // keep per-round memory quadratics for audits

  double resolved_eps() const;
  double resolved_eta(int disturbance_dim, int control_dim) const;
};

/// (A - B K_H, B, C). Throws DomainError if the result is not stable.
LinearSystem transform_residual(const LinearSystem& sys, const HinfSolution& hinf);

/// CDG generator whose policy is learned online. MOTR and OGA differ only in
/// the update rule; both share the bias, residual and budget paths.
class CdgGenerator : public Generator {
 public:
  enum class Rule { kMotr, kOga };

  CdgGenerator(std::string name, Rule rule, const LinearSystem& sys,
               const CostWeights& cw, const HinfSolution& hinf, MotrConfig cfg);

  std::optional<RegretAudit> regret_pair() const override;

  const CdgPolicy& policy() const { return policy_; }
  const LinearSystem& model() const { return model_; }
  const std::vector<MemoryQuadratic>& history() const { return history_; }
  const std::vector<VectorXd>& plays() const { return plays_log_; }

 protected:
  VectorXd do_emit(const VectorXd& x) override;
  void do_reveal(const VectorXd& u, double cost, const VectorXd& x_next) override;

 private:
  template <typename T>
  static void push_front(std::vector<T>& ring, T value) {
    ring.pop_back();
    ring.insert(ring.begin(), std::move(value));
  }

  Rule rule_;
  MotrConfig cfg_;
  LinearSystem model_;
  CostWeights cw_;
  MatrixXd K_;
  MatrixXd W_;
  int round_ = 0;
  VectorXd x_;                          // x_t of the current round
  VectorXd bias_;                       // b_t of the current round
  std::vector<VectorXd> controls_;      // r_{t-1} .. r_{t-1-2H}
  std::vector<VectorXd> biases_;        // b_{t-1} .. b_{t-1-H}
  std::vector<VectorXd> recent_plays_;  // m_{t-1} .. m_{t-1-H}
  VectorXd m_;                          // current play m_t
  CdgPolicy policy_;
  std::optional<OnlineTrustRegion> learner_;
  CollapsedQuadratic total_;
  double achieved_ = 0.0;
  std::vector<MemoryQuadratic> history_;
  std::vector<VectorXd> plays_log_;
};

std::unique_ptr<CdgGenerator> motr_generator(const LinearSystem& sys,
                                             const CostWeights& cw,
                                             const HinfSolution& hinf,
                                             const MotrConfig& cfg);

std::unique_ptr<CdgGenerator> oga_generator(const LinearSystem& sys,
                                            const CostWeights& cw,
                                            const HinfSolution& hinf,
                                            const MotrConfig& cfg);

/// w_t = W_H x_t under the budget.
std::unique_ptr<Generator> hinf_generator(const HinfSolution& hinf, double W_max,
                                          BudgetMode mode = BudgetMode::kFixedNorm);

struct SinusoidGrid {
  std::vector<double> frequencies;
  std::vector<double> phases;
  int random_directions = 8;

  /// omega = pi k / 16 for k = 0..16, phi = 2 pi j / 8 for j = 0..7.
  static SinusoidGrid standard();
};

/// Offline search over (direction, omega, phi) against the open-loop plant
/// (u = 0, zero initial state), then replays the winner. Ties keep the first
/// candidate in (direction, frequency, phase) order. The amplitude follows
/// the waveform, |w_t| = W_max |sin(omega t + phi)|, in every budget mode.
class SinusoidGenerator : public Generator {
 public:
  SinusoidGenerator(const LinearSystem& sys, const CostWeights& cw, double W_max,
                    int T, const SinusoidGrid& grid, std::uint64_t seed);

  double frequency() const { return omega_; }
  double phase() const { return phi_; }
  const VectorXd& direction() const { return direction_; }
  int candidate_index() const { return index_; }

 protected:
  VectorXd do_emit(const VectorXd& x) override;

 private:
  VectorXd waveform(int t, const VectorXd& v, double omega, double phi) const;

  double W_max_;
  double omega_ = 0.0;
  double phi_ = 0.0;
  VectorXd direction_;
  int index_ = 0;
  int t_ = 0;
};

std::unique_ptr<SinusoidGenerator> sinusoid_generator(
    const LinearSystem& sys, const CostWeights& cw, double W_max, int T,
    const SinusoidGrid& grid, std::uint64_t seed);

/// Scale factor putting E|w| at 1.05 W_max.
inline constexpr double kGaussianNormRatio = 1.05;

/// E|z| for z ~ N(0, I_d).
double expected_gaussian_norm(int d);

/// i.i.d. N(0, s^2 I) with E|w| = 1.05 W_max; not budget limited.
std::unique_ptr<Generator> gaussian_generator(int disturbance_dim, double W_max,
                                              std::uint64_t seed);

/// Uniform unit direction times W_max.
std::unique_ptr<Generator> random_direction_generator(int disturbance_dim,
                                                      double W_max,
                                                      std::uint64_t seed);

/// Always zero.
std::unique_ptr<Generator> zero_generator(int disturbance_dim);

}  // namespace motr
