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

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "motr/common.hpp"
#include "motr/lds_core.hpp"

namespace motr {

struct LqrSolution {
  MatrixXd P;
  MatrixXd K;
  int iterations = 0;
};

/// Value iteration P <- Q + A'PA - A'PB (R + B'PB)^{-1} B'PA.
/// K = (R + B'PB)^{-1} B'PA so that u = -K x.
LqrSolution solve_dare(const LinearSystem& sys, const CostWeights& cw,
                       double tol = 1e-12, int max_iter = 100000);

/// |P - (Q + A'PA - A'PB (R + B'PB)^{-1} B'PA)|, max-abs entry.
double dare_residual(const LinearSystem& sys, const CostWeights& cw,
                     const MatrixXd& P);

/// Saddle point of the LQ game with stage payoff x'Qx + u'Ru - gamma^2 |w|^2.
/// The controller plays u = -K x, the disturber w = W x.
struct HinfSolution {
  MatrixXd P;
  MatrixXd K;
  MatrixXd W;
  double gamma_star = 0.0;
};

/// Returns std::nullopt when gamma is infeasible: the certificate
/// gamma^2 I - C'PC > 0 fails, the iteration blows up, or the saddle-point
/// closed loop is unstable. Throws SolverError on non-finite arithmetic or
/// if the iteration neither converges nor blows up within max_iter.
std::optional<HinfSolution> solve_hinf_game(const LinearSystem& sys,
                                            const CostWeights& cw, double gamma,
                                            double tol = 1e-10,
                                            int max_iter = 20000);

/// Smallest feasible gamma in [lo, hi] to relative tolerance, then re-solved
/// at 1.01 gamma for margin. Throws SolverError if hi is infeasible.
HinfSolution hinf_bisection(const LinearSystem& sys, const CostWeights& cw,
                            double lo, double hi, double rel_tol = 1e-4);

inline constexpr double kHinfSafetyFactor = 1.01;

/// One-step game payoff x'Qx + u'Ru - gamma^2 |w|^2 + x_+' P x_+.
double hinf_stage_game_value(const LinearSystem& sys, const CostWeights& cw,
                             const HinfSolution& sol, const VectorXd& x,
                             const VectorXd& u, const VectorXd& w);

/// Opaque controller contract used by the harness: control(x_t) yields u_t,
/// then observe() reveals the realized transition.
class Controller {
 public:
  explicit Controller(std::string name) : name_(std::move(name)) {}
  virtual ~Controller() = default;

  virtual VectorXd control(const VectorXd& x) = 0;
  virtual void observe(const VectorXd& /*x*/, const VectorXd& /*u*/,
                       const VectorXd& /*x_next*/) {}

  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// u = -K x.
class LinearFeedbackController : public Controller {
 public:
  LinearFeedbackController(std::string name, MatrixXd K)
      : Controller(std::move(name)), K_(std::move(K)) {}
  VectorXd control(const VectorXd& x) override { return -K_ * x; }
  const MatrixXd& gain() const { return K_; }

 private:
  MatrixXd K_;
};

std::unique_ptr<Controller> lqr_controller(const LinearSystem& sys,
                                           const CostWeights& cw);
std::unique_ptr<Controller> hinf_controller(const HinfSolution& sol);

struct GpcOptions {
  int history = 5;
  double learning_rate = 0.0;   // <= 0 means 1 / sqrt(horizon)
  double radius = 0.0;          // <= 0 means 10 |K_base|_F
  int horizon = 200;
};

/// Gradient perturbation controller:
/// u_t = -K x_t + sum_j N^{[j]} w_hat_{t-j} with w_hat_s = x_{s+1} - A x_s - B u_s,
/// N updated by one projected gradient step per round on the counterfactual
/// cost of the last `history` recovered disturbances. The step is
/// learning_rate / max(1, L) with L the largest counterfactual curvature seen.
class GpcController : public Controller {
 public:
  GpcController(const LinearSystem& sys, const CostWeights& cw, MatrixXd K_base,
                GpcOptions options);

  VectorXd control(const VectorXd& x) override;
  void observe(const VectorXd& x, const VectorXd& u,
               const VectorXd& x_next) override;

  double learning_rate() const { return lr_; }
  double radius() const { return radius_; }
  /// Frobenius norm of the stacked N blocks.
  double policy_norm() const { return N_.norm(); }
  const MatrixXd& stacked_policy() const { return N_; }

 private:
  LinearSystem sys_;
  CostWeights cw_;
  MatrixXd K_;
  MatrixXd closed_loop_;
  int h_;
  double lr_;
  double radius_;
  double curvature_ = 0.0;      // running max of the counterfactual Hessian norm
  MatrixXd N_;                  // (h d_u) x d_x, block j-1 is N^{[j]}
  std::vector<VectorXd> w_hat_;  // most recent first, length 2h
};

std::unique_ptr<Controller> gpc_controller(const LinearSystem& sys,
                                           const CostWeights& cw,
                                           const MatrixXd& K_base,
                                           GpcOptions options = {});

}  // namespace motr
