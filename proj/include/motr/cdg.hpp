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

// Control-disturbance generator policies and the quadratic surrogate rewards
// built from them.
//
// Index convention, fixed by the direct-simulation calibration tests:
//   * policies[k] is the policy that generated w_{t-k}, k = 0..H (H + 1 of
//     them, most recent first);
//   * controls[i] is u_{t-i}, i = 0..2H;
//   * Psi_i = A^i B [i <= H] + sum_{k=0}^{H} A^k C M_{t-k}^{[i-k]} [1 <= i-k <= H]
// so that x_{t+1} = A^{H+1} x_{t-H} + sum_i Psi_i u_{t-i}.
//
// vect(M) stacks the H blocks vertically into an (H d_w) x d_u matrix and
// flattens it column-major.

#include <optional>
#include <span>
#include <vector>

#include "motr/common.hpp"
#include "motr/lds_core.hpp"
#include "motr/online_learner.hpp"

namespace motr {

/// w_t = sum_{i=1}^H M^{[i]} u_{t-i} + bias.
class CdgPolicy {
 public:
  CdgPolicy(std::vector<MatrixXd> blocks, VectorXd bias);

  static CdgPolicy zero(int H, int disturbance_dim, int control_dim);
  /// Inverse of vectorize().
  static CdgPolicy from_vector(const VectorXd& m, int H, int disturbance_dim,
                               int control_dim, VectorXd bias);

  int H() const { return static_cast<int>(blocks_.size()); }
  int disturbance_dim() const { return static_cast<int>(blocks_[0].rows()); }
  int control_dim() const { return static_cast<int>(blocks_[0].cols()); }
  const std::vector<MatrixXd>& blocks() const { return blocks_; }
  const MatrixXd& block(int i) const { return blocks_[i - 1]; }  // 1-based
  const VectorXd& bias() const { return bias_; }

  /// sqrt(sum_i |M^{[i]}|_F^2)
  double frobenius_norm() const;
  VectorXd vectorize() const;
  MatrixXd stacked() const;

 private:
  std::vector<MatrixXd> blocks_;
  VectorXd bias_;
};

/// `past_controls` holds u_{t-1}..u_{t-H}, most recent first. In residual mode
/// the bias is W x instead of the policy's constant bias.
VectorXd disturbance(const CdgPolicy& policy,
                     std::span<const VectorXd> past_controls, const VectorXd& x,
                     bool residual_mode,
                     const std::optional<MatrixXd>& W = std::nullopt);

/// Radial projection of the blocks onto the Frobenius ball; bias untouched.
CdgPolicy project_frobenius(const CdgPolicy& policy, double D_M);

struct TransferStack {
  std::vector<MatrixXd> psi;  // 2H + 1 matrices, d_x x d_u
  int H() const { return static_cast<int>(psi.size() - 1) / 2; }
};

/// policies[k] generated w_{t-k}; H + 1 policies, most recent first.
TransferStack transfer_stack(const LinearSystem& sys,
                             std::span<const CdgPolicy> policies);

/// A^{H+1} x_past + sum_{i=0}^{2H} Psi_i u_{t-i}, with x_past = x_{t-H}.
VectorXd unrolled_state(const LinearSystem& sys, const VectorXd& x_past,
                        const TransferStack& stack,
                        std::span<const VectorXd> controls);

/// Truncated rollout from a zero state H + 1 steps back.
VectorXd approx_state(const LinearSystem& sys,
                      std::span<const CdgPolicy> policies,
                      std::span<const VectorXd> controls);

double approx_cost(const CostWeights& cw, const VectorXd& y, const VectorXd& u);

/// sum_{k=0}^{H} A^k C b_k where biases[k] = b_{t-1-k}.
VectorXd bias_contribution(const LinearSystem& sys,
                           std::span<const VectorXd> biases);

/// g_t(m) = |y_t(M,...,M)|_Q^2 + |u_t|_R^2 = m^T P m + p^T m + constant.
struct GtQuadratic {
  MatrixXd P;
  VectorXd p;
  double constant = 0.0;
  int H = 0;

  std::vector<MatrixXd> C_blocks;  // C_i, d_x x (H d_w), i = 0..2H
  std::vector<MatrixXd> D_blocks;  // D_i = A^i B [i <= H]
  /// G_k maps the policy that generated w_{t-1-k} to y_t; y = sum_k G_k m + y0.
  std::vector<MatrixXd> memory_blocks;
  VectorXd offset;  // y0
  MatrixXd Q;       // cost weight used for the state term

  double evaluate(const VectorXd& m) const {
    return m.dot(P * m) + p.dot(m) + constant;
  }
  /// Reward under a non-stationary policy sequence; plays[k] is the policy
  /// vector that generated w_{t-1-k}, k = 0..H.
  double evaluate_window(std::span<const VectorXd> plays) const;
  /// The same reward as a MemoryQuadratic over H + 1 plays, oldest first.
  MemoryQuadratic memory_form() const;
  CollapsedQuadratic collapsed() const;
};

/// window[i] = u_{t-1-i}, i = 0..2H; `current_control` is u_t.
/// `bias` is the fixed contribution of realized biases to y_t (see
/// bias_contribution), folded into the affine part.
GtQuadratic gt_quadratic(const LinearSystem& sys, const CostWeights& cw,
                         std::span<const VectorXd> window,
                         const VectorXd& current_control, int H,
                         const VectorXd& bias);

/// Hessian (P + P^T) and gradient p of g_t at m = 0.
std::pair<MatrixXd, VectorXd> hessian_gradient_at_zero(const GtQuadratic& gq);

}  // namespace motr
