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
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "motr/common.hpp"
#include "motr/trust_region.hpp"

namespace motr {

/// Round reward over the last H decisions, each of dimension d:
/// f(z) = z^T P z + p^T z + constant with z = (z_{t-H+1}, ..., z_t) stacked
/// oldest first.
struct MemoryQuadratic {
  MatrixXd P;
  VectorXd p;
  double constant = 0.0;
  int d = 0;
  int H = 0;

  MemoryQuadratic(MatrixXd P_, VectorXd p_, double constant_, int d_, int H_);

  double evaluate(const VectorXd& window) const;
  /// `plays` holds exactly H decisions, oldest first.
  double evaluate(std::span<const VectorXd> plays) const;
  VectorXd gradient(const VectorXd& window) const;
};

/// g(z) = f(z, ..., z) = z^T C z + d^T z + constant.
struct CollapsedQuadratic {
  MatrixXd C;
  VectorXd d;
  double constant = 0.0;

  static CollapsedQuadratic zero(int dim);

  int dim() const { return static_cast<int>(d.size()); }
  double evaluate(const VectorXd& z) const {
    return z.dot(C * z) + d.dot(z) + constant;
  }
  CollapsedQuadratic& operator+=(const CollapsedQuadratic& other);
  CollapsedQuadratic operator-() const { return {-C, -d, -constant}; }
};

/// Sums the H^2 blocks of P and the H blocks of p.
CollapsedQuadratic collapse(const MemoryQuadratic& mq);

/// i.i.d. Exp(rate = eta) coordinates.
VectorXd sample_perturbation(double eta, int d, std::mt19937_64& rng);

/// Uniform sample from the Euclidean ball of radius D.
VectorXd sample_ball(int d, double D, std::mt19937_64& rng);

/// R / (d^{3/2} D H^{3/2} sqrt(T)).
double default_eta(double R, int d, double D, int H, int T);

/// Follow the perturbed leader with memory, reward-maximizing form.
///
/// `Payoff` is an additive payoff type (operator+=). `Oracle` is any callable
/// (const Payoff& cumulative, const VectorXd& sigma) -> VectorXd returning an
/// eps-approximate maximizer of cumulative(z) - <sigma, z> over the decision
/// set. Each update draws a fresh perturbation.
template <typename Payoff, typename Oracle>
class FollowThePerturbedLeader {
 public:
  FollowThePerturbedLeader(Payoff zero, Oracle oracle, int dim, double eta,
                           std::uint64_t seed)
      : cumulative_(std::move(zero)),
        oracle_(std::move(oracle)),
        dim_(dim),
        eta_(eta),
        rng_(seed) {
    detail::require(eta > 0.0, "FollowThePerturbedLeader: eta must be positive");
    detail::require(dim > 0, "FollowThePerturbedLeader: dim must be positive");
  }

  void observe(const Payoff& g) {
    cumulative_ += g;
    ++round_;
  }

  const VectorXd& update() {
    last_sigma_ = forced_sigma_ ? *forced_sigma_
                                : sample_perturbation(eta_, dim_, rng_);
    current_ = oracle_(cumulative_, last_sigma_);
    return current_;
  }

  /// Test hook: use this perturbation instead of sampling.
  void force_perturbation(std::optional<VectorXd> sigma) {
    forced_sigma_ = std::move(sigma);
  }

  void set_current(VectorXd z) { current_ = std::move(z); }

  const Payoff& cumulative() const { return cumulative_; }
  const VectorXd& current() const { return current_; }
  const VectorXd& last_perturbation() const { return last_sigma_; }
  std::mt19937_64& rng() { return rng_; }
  int round() const { return round_; }
  int dim() const { return dim_; }
  double eta() const { return eta_; }

 private:
  Payoff cumulative_;
  Oracle oracle_;
  int dim_;
  double eta_;
  std::mt19937_64 rng_;
  int round_ = 0;
  VectorXd current_;
  VectorXd last_sigma_;
  std::optional<VectorXd> forced_sigma_;
};

/// Oracle for quadratic payoffs over the ball: a trust-region solve on
/// (C, d - sigma, D).
struct TrustRegionOracle {
  double radius;
  double eps;
  VectorXd operator()(const CollapsedQuadratic& cumulative,
                      const VectorXd& sigma) const;
};

/// Online trust region with memory. The learner keeps S = sum C_s and
/// s = sum d_s and plays TrustRegion(S, s - sigma, D, eps) each round.
class OnlineTrustRegion {
 public:
  OnlineTrustRegion(int dim, double radius, double eta, double eps,
                    std::uint64_t seed);

  /// Initial plays z_0..z_{count-1}, uniform in the ball. The last one becomes
  /// the current play.
  std::vector<VectorXd> initialize(int count);

  void observe(const CollapsedQuadratic& g);
  const VectorXd& update();

  void force_perturbation(std::optional<VectorXd> sigma) {
    fpl_.force_perturbation(std::move(sigma));
  }

  const MatrixXd& S() const { return fpl_.cumulative().C; }
  const VectorXd& s() const { return fpl_.cumulative().d; }
  const CollapsedQuadratic& cumulative() const { return fpl_.cumulative(); }
  const VectorXd& current() const { return fpl_.current(); }
  double radius() const { return radius_; }
  double eta() const { return fpl_.eta(); }
  double eps() const { return eps_; }
  int round() const { return fpl_.round(); }
  int dim() const { return fpl_.dim(); }

 private:
  double radius_;
  double eps_;
  FollowThePerturbedLeader<CollapsedQuadratic, TrustRegionOracle> fpl_;
};

struct RegretAudit {
  double hindsight = 0.0;  // max over |z| <= D of sum g_t(z)
  double achieved = 0.0;   // sum f_t on the played windows
  double regret() const { return hindsight - achieved; }
};

/// history[t] is the reward of round t, played on window plays[t-H+1..t].
/// Rounds without a full window (t < H - 1) are left out of both sums.
RegretAudit regret_audit(std::span<const MemoryQuadratic> history,
                         std::span<const VectorXd> plays, double D);

}  // namespace motr
