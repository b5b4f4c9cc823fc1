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
#include "motr/generators.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace motr {

VectorXd normalize_budget(const VectorXd& w, double W_max) {
  detail::require(W_max > 0.0, "normalize_budget: W_max must be positive");
  const double n = w.norm();
  if (n <= W_max) return w;
  return w * (W_max / n);
}

VectorXd apply_budget(const VectorXd& w, double W_max, BudgetMode mode) {
  if (mode == BudgetMode::kClip) return normalize_budget(w, W_max);
  detail::require(W_max > 0.0, "apply_budget: W_max must be positive");
  const double n = w.norm();
  if (n == 0.0) return w;
  return w * (W_max / n);
}

double MotrConfig::resolved_eps() const {
  return eps > 0.0 ? eps : 1.0 / horizon;
}

double MotrConfig::resolved_eta(int disturbance_dim, int control_dim) const {
  if (eta > 0.0) return eta;
  return default_eta(1.0, H * disturbance_dim * control_dim, D_M, H, horizon);
}

LinearSystem transform_residual(const LinearSystem& sys,
                                const HinfSolution& hinf) {
  LinearSystem out = stabilize(sys, hinf.K);
  const double rho = spectral_radius(out.A());
  if (!(rho < 1.0)) {
    throw DomainError("transform_residual: A - B K_H has spectral radius " +
                      std::to_string(rho));
  }
  return out;
}

namespace {

LinearSystem learning_model(const LinearSystem& sys, const HinfSolution& hinf,
                            bool residual) {
  if (residual) return transform_residual(sys, hinf);
  const double rho = spectral_radius(sys.A());
  if (!(rho < 1.0)) {
    throw DomainError(
        "CdgGenerator: raw-control mode needs an open-loop stable plant");
  }
  return sys;
}

}  // namespace

CdgGenerator::CdgGenerator(std::string name, Rule rule, const LinearSystem& sys,
                           const CostWeights& cw, const HinfSolution& hinf,
                           MotrConfig cfg)
    : Generator(std::move(name)),
      rule_(rule),
      cfg_(cfg),
      model_(learning_model(sys, hinf, cfg.residual_bias)),
      cw_(cw),
      K_(hinf.K),
      W_(hinf.W),
      policy_(CdgPolicy::zero(cfg.H, sys.disturbance_dim(), sys.control_dim())),
      total_(CollapsedQuadratic::zero(cfg.H * sys.disturbance_dim() *
                                      sys.control_dim())) {
  detail::require(cfg_.H >= 1, "MotrConfig: H must be >= 1");
  detail::require(cfg_.D_M > 0.0 && cfg_.W_max > 0.0 && cfg_.horizon >= 1,
                  "MotrConfig: D_M, W_max and horizon must be positive");
  const int du = sys.control_dim();
  const int dw = sys.disturbance_dim();
  const int dx = sys.state_dim();
  const int n = cfg_.H * dw * du;

  controls_.assign(2 * cfg_.H + 1, VectorXd::Zero(du));
  biases_.assign(cfg_.H + 1, VectorXd::Zero(dw));

  // Both rules draw the initial policy from the same stream so that frozen
  // MOTR and OGA emit identical sequences.
  if (rule_ == Rule::kMotr) {
    learner_.emplace(n, cfg_.D_M, cfg_.resolved_eta(dw, du),
                     cfg_.resolved_eps(), cfg_.seed);
    m_ = learner_->initialize(1).front();
  } else {
    std::mt19937_64 rng(cfg_.seed);
    m_ = sample_ball(n, cfg_.D_M, rng);
  }
  policy_ = CdgPolicy::from_vector(m_, cfg_.H, dw, du, VectorXd::Zero(dw));
  recent_plays_.assign(cfg_.H + 1, m_);
  x_ = VectorXd::Zero(dx);
  bias_ = VectorXd::Zero(dw);
}

VectorXd CdgGenerator::do_emit(const VectorXd& x) {
  x_ = x;
  const std::span<const VectorXd> past(controls_.data(), cfg_.H);
  bias_ = cfg_.residual_bias ? VectorXd(W_ * x)
                             : VectorXd::Zero(model_.disturbance_dim());
  VectorXd w = disturbance(policy_, past, x, cfg_.residual_bias,
                           cfg_.residual_bias ? std::optional<MatrixXd>(W_)
                                              : std::nullopt);
  return apply_budget(w, cfg_.W_max, cfg_.budget);
}

void CdgGenerator::do_reveal(const VectorXd& u, double /*cost*/,
                             const VectorXd& /*x_next*/) {
  const VectorXd r = cfg_.residual_bias ? VectorXd(K_ * x_ + u) : u;
  const VectorXd bias_part = bias_contribution(model_, biases_);
  const GtQuadratic gq = gt_quadratic(model_, cw_, controls_, u, cfg_.H, bias_part);

  const CollapsedQuadratic g = gq.collapsed();
  total_ += g;
  achieved_ += gq.evaluate_window(recent_plays_);
  if (cfg_.record_history) {
    history_.push_back(gq.memory_form());
    plays_log_.push_back(recent_plays_.front());
  }

  VectorXd next = m_;
  if (cfg_.learning) {
    try {
      if (rule_ == Rule::kMotr) {
        learner_->observe(g);
        next = learner_->update();
      } else {
        next = m_ + cfg_.oga_step * ((gq.P + gq.P.transpose()) * m_ + gq.p);
      }
    } catch (const SolverError& e) {
      throw SolverError(name() + " round " + std::to_string(round_) + ": " +
                        e.what());
    }
  }
  const double norm = next.norm();
  if (norm > cfg_.D_M) next *= cfg_.D_M / norm;

  push_front(controls_, r);
  push_front(biases_, bias_);
  push_front(recent_plays_, m_);
  m_ = std::move(next);
  policy_ = CdgPolicy::from_vector(m_, cfg_.H, model_.disturbance_dim(),
                                   model_.control_dim(),
                                   VectorXd::Zero(model_.disturbance_dim()));
  ++round_;
}

std::optional<RegretAudit> CdgGenerator::regret_pair() const {
  RegretAudit audit;
  audit.achieved = achieved_;
  audit.hindsight =
      solve(TrustRegionProblem(total_.C, total_.d, cfg_.D_M), 1e-9).value +
      total_.constant;
  return audit;
}

std::unique_ptr<CdgGenerator> motr_generator(const LinearSystem& sys,
                                             const CostWeights& cw,
                                             const HinfSolution& hinf,
                                             const MotrConfig& cfg) {
  return std::make_unique<CdgGenerator>("MOTR", CdgGenerator::Rule::kMotr, sys,
                                        cw, hinf, cfg);
}

std::unique_ptr<CdgGenerator> oga_generator(const LinearSystem& sys,
                                            const CostWeights& cw,
                                            const HinfSolution& hinf,
                                            const MotrConfig& cfg) {
  return std::make_unique<CdgGenerator>("OGA", CdgGenerator::Rule::kOga, sys, cw,
                                        hinf, cfg);
}

namespace {

class LinearFeedbackGenerator : public Generator {
 public:
  LinearFeedbackGenerator(MatrixXd W, double W_max, BudgetMode mode)
      : Generator("Hinf"), W_(std::move(W)), W_max_(W_max), mode_(mode) {
    detail::require(W_max > 0.0, "hinf_generator: W_max must be positive");
  }

 protected:
  VectorXd do_emit(const VectorXd& x) override {
    return apply_budget(W_ * x, W_max_, mode_);
  }

 private:
  MatrixXd W_;
  double W_max_;
  BudgetMode mode_;
};

class GaussianGenerator : public Generator {
 public:
  GaussianGenerator(int dim, double W_max, std::uint64_t seed)
      : Generator("Gaussian"),
        dim_(dim),
        scale_(kGaussianNormRatio * W_max / expected_gaussian_norm(dim)),
        rng_(seed) {
    detail::require(W_max > 0.0, "gaussian_generator: W_max must be positive");
  }

 protected:
  VectorXd do_emit(const VectorXd&) override {
    VectorXd w(dim_);
    for (int i = 0; i < dim_; ++i) w(i) = scale_ * normal_(rng_);
    return w;
  }

 private:
  int dim_;
  double scale_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

class RandomDirectionGenerator : public Generator {
 public:
  RandomDirectionGenerator(int dim, double W_max, std::uint64_t seed)
      : Generator("Random"), dim_(dim), W_max_(W_max), rng_(seed) {
    detail::require(W_max > 0.0,
                    "random_direction_generator: W_max must be positive");
  }

 protected:
  VectorXd do_emit(const VectorXd&) override {
    VectorXd w(dim_);
    double n = 0.0;
    while (n == 0.0) {
      for (int i = 0; i < dim_; ++i) w(i) = normal_(rng_);
      n = w.norm();
    }
    return w * (W_max_ / n);
  }

 private:
  int dim_;
  double W_max_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

class ZeroGenerator : public Generator {
 public:
  explicit ZeroGenerator(int dim) : Generator("Zero"), dim_(dim) {}

 protected:
  VectorXd do_emit(const VectorXd&) override { return VectorXd::Zero(dim_); }

 private:
  int dim_;
};

}  // namespace

std::unique_ptr<Generator> hinf_generator(const HinfSolution& hinf, double W_max,
                                          BudgetMode mode) {
  return std::make_unique<LinearFeedbackGenerator>(hinf.W, W_max, mode);
}

SinusoidGrid SinusoidGrid::standard() {
  SinusoidGrid grid;
  for (int k = 0; k <= 16; ++k) grid.frequencies.push_back(std::numbers::pi * k / 16);
  for (int j = 0; j < 8; ++j) grid.phases.push_back(2.0 * std::numbers::pi * j / 8);
  return grid;
}

SinusoidGenerator::SinusoidGenerator(const LinearSystem& sys,
                                     const CostWeights& cw, double W_max, int T,
                                     const SinusoidGrid& grid,
                                     std::uint64_t seed)
    : Generator("Sinusoid"), W_max_(W_max) {
  detail::require(W_max > 0.0, "sinusoid_generator: W_max must be positive");
  detail::require(T >= 1, "sinusoid_generator: T must be >= 1");
  detail::require(!grid.frequencies.empty() && !grid.phases.empty(),
                  "sinusoid_generator: empty frequency or phase grid");
  const int dw = sys.disturbance_dim();
  std::vector<VectorXd> directions;
  for (int i = 0; i < dw; ++i) directions.push_back(VectorXd::Unit(dw, i));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < grid.random_directions; ++k) {
    VectorXd v(dw);
    double n = 0.0;
    while (n == 0.0) {
      for (int i = 0; i < dw; ++i) v(i) = normal(rng);
      n = v.norm();
    }
    directions.push_back(v / n);
  }

  const VectorXd u0 = VectorXd::Zero(sys.control_dim());
  double best = -std::numeric_limits<double>::infinity();
  int index = 0;
  for (const VectorXd& v : directions) {
    for (double omega : grid.frequencies) {
      for (double phi : grid.phases) {
        VectorXd x = VectorXd::Zero(sys.state_dim());
        double total = 0.0;
        for (int t = 0; t < T; ++t) {
          total += stage_cost(cw, x, u0);
          x = step(sys, x, u0, waveform(t, v, omega, phi));
        }
        if (total > best) {
          best = total;
          omega_ = omega;
          phi_ = phi;
          direction_ = v;
          index_ = index;
        }
        ++index;
      }
    }
  }
}

VectorXd SinusoidGenerator::waveform(int t, const VectorXd& v, double omega,
                                     double phi) const {
  return W_max_ * std::sin(omega * t + phi) * v;
}

VectorXd SinusoidGenerator::do_emit(const VectorXd&) {
  return waveform(t_++, direction_, omega_, phi_);
}

std::unique_ptr<SinusoidGenerator> sinusoid_generator(
    const LinearSystem& sys, const CostWeights& cw, double W_max, int T,
    const SinusoidGrid& grid, std::uint64_t seed) {
  return std::make_unique<SinusoidGenerator>(sys, cw, W_max, T, grid, seed);
}

double expected_gaussian_norm(int d) {
  detail::require(d >= 1, "expected_gaussian_norm: d must be >= 1");
  return std::sqrt(2.0) *
         std::exp(std::lgamma(0.5 * (d + 1)) - std::lgamma(0.5 * d));
}

std::unique_ptr<Generator> gaussian_generator(int disturbance_dim, double W_max,
                                              std::uint64_t seed) {
  return std::make_unique<GaussianGenerator>(disturbance_dim, W_max, seed);
}

std::unique_ptr<Generator> random_direction_generator(int disturbance_dim,
                                                      double W_max,
                                                      std::uint64_t seed) {
  return std::make_unique<RandomDirectionGenerator>(disturbance_dim, W_max, seed);
}

std::unique_ptr<Generator> zero_generator(int disturbance_dim) {
  return std::make_unique<ZeroGenerator>(disturbance_dim);
}

}  // namespace motr
