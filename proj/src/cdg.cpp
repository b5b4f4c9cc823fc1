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
#include "motr/cdg.hpp"

#include <cmath>

namespace motr {

namespace {

std::vector<MatrixXd> powers(const MatrixXd& A, int count) {
  std::vector<MatrixXd> out;
  out.reserve(count);
  out.push_back(MatrixXd::Identity(A.rows(), A.cols()));
  for (int k = 1; k < count; ++k) out.push_back(A * out.back());
  return out;
}

void check_controls(const LinearSystem& sys, std::span<const VectorXd> controls,
                    std::size_t expected, const char* who) {
  detail::require(controls.size() == expected,
                  std::string(who) + ": expected " + std::to_string(expected) +
                      " controls, got " + std::to_string(controls.size()));
  for (const VectorXd& u : controls) {
    detail::require(u.size() == sys.control_dim(),
                    std::string(who) + ": control dimension mismatch");
  }
}

}  // namespace

CdgPolicy::CdgPolicy(std::vector<MatrixXd> blocks, VectorXd bias)
    : blocks_(std::move(blocks)), bias_(std::move(bias)) {
  detail::require(!blocks_.empty(), "CdgPolicy: need at least one block");
  for (const MatrixXd& b : blocks_) {
    detail::require(b.rows() == blocks_[0].rows() && b.cols() == blocks_[0].cols(),
                    "CdgPolicy: blocks must share dimensions");
    detail::require(b.allFinite(), "CdgPolicy: non-finite block entries");
  }
  detail::require(bias_.size() == blocks_[0].rows(),
                  "CdgPolicy: bias must have d_w entries");
}

CdgPolicy CdgPolicy::zero(int H, int disturbance_dim, int control_dim) {
  return CdgPolicy(std::vector<MatrixXd>(H, MatrixXd::Zero(disturbance_dim,
                                                           control_dim)),
                   VectorXd::Zero(disturbance_dim));
}

CdgPolicy CdgPolicy::from_vector(const VectorXd& m, int H, int disturbance_dim,
                                 int control_dim, VectorXd bias) {
  detail::require(m.size() == static_cast<Eigen::Index>(H) * disturbance_dim *
                                  control_dim,
                  "CdgPolicy::from_vector: size mismatch");
  const Eigen::Map<const MatrixXd> stacked(m.data(), H * disturbance_dim,
                                           control_dim);
  std::vector<MatrixXd> blocks;
  blocks.reserve(H);
  for (int i = 0; i < H; ++i) {
    blocks.push_back(stacked.middleRows(i * disturbance_dim, disturbance_dim));
  }
  return CdgPolicy(std::move(blocks), std::move(bias));
}

double CdgPolicy::frobenius_norm() const {
  double sq = 0.0;
  for (const MatrixXd& b : blocks_) sq += b.squaredNorm();
  return std::sqrt(sq);
}

MatrixXd CdgPolicy::stacked() const {
  const int dw = disturbance_dim();
  MatrixXd out(H() * dw, control_dim());
  for (int i = 0; i < H(); ++i) out.middleRows(i * dw, dw) = blocks_[i];
  return out;
}

VectorXd CdgPolicy::vectorize() const {
  const MatrixXd s = stacked();
  return Eigen::Map<const VectorXd>(s.data(), s.size());
}

VectorXd disturbance(const CdgPolicy& policy,
                     std::span<const VectorXd> past_controls, const VectorXd& x,
                     bool residual_mode, const std::optional<MatrixXd>& W) {
  detail::require(static_cast<int>(past_controls.size()) == policy.H(),
                  "disturbance: need exactly H past controls, got " +
                      std::to_string(past_controls.size()));
  VectorXd w = VectorXd::Zero(policy.disturbance_dim());
  for (int i = 1; i <= policy.H(); ++i) {
    detail::require(past_controls[i - 1].size() == policy.control_dim(),
                    "disturbance: control dimension mismatch");
    w += policy.block(i) * past_controls[i - 1];
  }
  if (residual_mode) {
    detail::require(W.has_value(), "disturbance: residual mode needs W");
    detail::require(W->rows() == policy.disturbance_dim() && W->cols() == x.size(),
                    "disturbance: W must be d_w x d_x");
    w += *W * x;
  } else {
    w += policy.bias();
  }
  return w;
}

CdgPolicy project_frobenius(const CdgPolicy& policy, double D_M) {
  detail::require(D_M > 0.0, "project_frobenius: radius must be positive");
  const double norm = policy.frobenius_norm();
  // Rounding slack keeps the projection idempotent.
  if (norm <= D_M * (1.0 + 1e-12)) return policy;
  std::vector<MatrixXd> blocks = policy.blocks();
  for (MatrixXd& b : blocks) b *= D_M / norm;
  return CdgPolicy(std::move(blocks), policy.bias());
}

TransferStack transfer_stack(const LinearSystem& sys,
                             std::span<const CdgPolicy> policies) {
  detail::require(!policies.empty(), "transfer_stack: no policies");
  const int H = policies[0].H();
  detail::require(static_cast<int>(policies.size()) == H + 1,
                  "transfer_stack: need H + 1 policies, got " +
                      std::to_string(policies.size()));
  for (const CdgPolicy& pol : policies) {
    detail::require(pol.H() == H && pol.disturbance_dim() == sys.disturbance_dim() &&
                        pol.control_dim() == sys.control_dim(),
                    "transfer_stack: policy dimension mismatch");
  }
  const std::vector<MatrixXd> Ak = powers(sys.A(), 2 * H + 1);
  TransferStack stack;
  stack.psi.reserve(2 * H + 1);
  for (int i = 0; i <= 2 * H; ++i) {
    MatrixXd psi = i <= H ? MatrixXd(Ak[i] * sys.B())
                          : MatrixXd::Zero(sys.state_dim(), sys.control_dim());
    for (int k = 0; k <= H; ++k) {
      const int b = i - k;
      if (b < 1 || b > H) continue;
      psi += Ak[k] * sys.C() * policies[k].block(b);
    }
    stack.psi.push_back(std::move(psi));
  }
  return stack;
}

VectorXd unrolled_state(const LinearSystem& sys, const VectorXd& x_past,
                        const TransferStack& stack,
                        std::span<const VectorXd> controls) {
  check_controls(sys, controls, stack.psi.size(), "unrolled_state");
  detail::require(x_past.size() == sys.state_dim(),
                  "unrolled_state: state dimension mismatch");
  VectorXd x = x_past;
  for (int k = 0; k <= stack.H(); ++k) x = sys.A() * x;
  for (std::size_t i = 0; i < controls.size(); ++i) {
    x += stack.psi[i] * controls[i];
  }
  return x;
}

VectorXd approx_state(const LinearSystem& sys,
                      std::span<const CdgPolicy> policies,
                      std::span<const VectorXd> controls) {
  const TransferStack stack = transfer_stack(sys, policies);
  return unrolled_state(sys, VectorXd::Zero(sys.state_dim()), stack, controls);
}

double approx_cost(const CostWeights& cw, const VectorXd& y, const VectorXd& u) {
  return stage_cost(cw, y, u);
}

VectorXd bias_contribution(const LinearSystem& sys,
                           std::span<const VectorXd> biases) {
  VectorXd out = VectorXd::Zero(sys.state_dim());
  MatrixXd Ak = MatrixXd::Identity(sys.state_dim(), sys.state_dim());
  for (const VectorXd& b : biases) {
    detail::require(b.size() == sys.disturbance_dim(),
                    "bias_contribution: bias dimension mismatch");
    out += Ak * (sys.C() * b);
    Ak = sys.A() * Ak;
  }
  return out;
}

double GtQuadratic::evaluate_window(std::span<const VectorXd> plays) const {
  detail::require(plays.size() == memory_blocks.size(),
                  "GtQuadratic::evaluate_window: need H + 1 plays");
  VectorXd y = offset;
  for (std::size_t k = 0; k < plays.size(); ++k) y += memory_blocks[k] * plays[k];
  return y.dot(Q * y) + constant - offset.dot(Q * offset);
}

MemoryQuadratic GtQuadratic::memory_form() const {
  const int n = static_cast<int>(p.size());
  const int span = static_cast<int>(memory_blocks.size());
  MatrixXd G(offset.size(), static_cast<Eigen::Index>(n) * span);
  // Oldest play first: column block j holds G_{H-j}.
  for (int j = 0; j < span; ++j) G.middleCols(j * n, n) = memory_blocks[span - 1 - j];
  MatrixXd Pm = G.transpose() * Q * G;
  VectorXd pm = 2.0 * G.transpose() * (Q * offset);
  return MemoryQuadratic(std::move(Pm), std::move(pm), constant, n, span);
}

CollapsedQuadratic GtQuadratic::collapsed() const {
  return {0.5 * (P + P.transpose()), p, constant};
}

GtQuadratic gt_quadratic(const LinearSystem& sys, const CostWeights& cw,
                         std::span<const VectorXd> window,
                         const VectorXd& current_control, int H,
                         const VectorXd& bias) {
  detail::require(H >= 1, "gt_quadratic: H must be >= 1");
  check_controls(sys, window, 2 * static_cast<std::size_t>(H) + 1, "gt_quadratic");
  detail::require(current_control.size() == sys.control_dim(),
                  "gt_quadratic: current control dimension mismatch");
  detail::require(bias.size() == sys.state_dim(),
                  "gt_quadratic: bias contribution must have d_x entries");
  detail::require(cw.Q().rows() == sys.state_dim() &&
                      cw.R().rows() == sys.control_dim(),
                  "gt_quadratic: cost weight dimension mismatch");
  const double rho = spectral_radius(sys.A());
  if (!(rho < 1.0)) {
    throw DomainError("gt_quadratic: system is not stable (spectral radius " +
                      std::to_string(rho) + ")");
  }

  const int dx = sys.state_dim();
  const int du = sys.control_dim();
  const int dw = sys.disturbance_dim();
  const int rows = H * dw;  // rows of the stacked policy matrix
  const int n = rows * du;
  const std::vector<MatrixXd> Ak = powers(sys.A(), 2 * H + 1);

  GtQuadratic gq;
  gq.H = H;
  gq.Q = cw.Q();

  // C_i: block b (1-based) is A^{i-b} C when 0 <= i - b <= H.
  gq.C_blocks.reserve(2 * H + 1);
  gq.D_blocks.reserve(2 * H + 1);
  for (int i = 0; i <= 2 * H; ++i) {
    MatrixXd Ci = MatrixXd::Zero(dx, rows);
    for (int b = 1; b <= H; ++b) {
      const int k = i - b;
      if (k < 0 || k > H) continue;
      Ci.middleCols((b - 1) * dw, dw) = Ak[k] * sys.C();
    }
    gq.C_blocks.push_back(std::move(Ci));
    gq.D_blocks.push_back(i <= H ? MatrixXd(Ak[i] * sys.B())
                                 : MatrixXd::Zero(dx, du));
  }

  // G_k = sum_b (u_{t-1-k-b}^T kron A^k C E_b). With column-major vect, column
  // block c of (u^T kron X) is u_c X.
  gq.memory_blocks.assign(H + 1, MatrixXd::Zero(dx, n));
  for (int k = 0; k <= H; ++k) {
    const MatrixXd AkC = Ak[k] * sys.C();
    for (int b = 1; b <= H; ++b) {
      const VectorXd& u = window[k + b];
      for (int c = 0; c < du; ++c) {
        gq.memory_blocks[k].block(0, c * rows + (b - 1) * dw, dx, dw) += u(c) * AkC;
      }
    }
  }
  MatrixXd G = MatrixXd::Zero(dx, n);
  for (const MatrixXd& Gk : gq.memory_blocks) G += Gk;

  gq.offset = bias;
  for (int i = 0; i <= H; ++i) gq.offset += gq.D_blocks[i] * window[i];

  const MatrixXd QG = cw.Q() * G;
  gq.P = G.transpose() * QG;
  gq.p = 2.0 * QG.transpose() * gq.offset;
  gq.constant = gq.offset.dot(cw.Q() * gq.offset) +
                current_control.dot(cw.R() * current_control);
  return gq;
}

std::pair<MatrixXd, VectorXd> hessian_gradient_at_zero(const GtQuadratic& gq) {
  return {gq.P + gq.P.transpose(), gq.p};
}

}  // namespace motr
