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
#include "motr/controllers.hpp"

#include <cmath>

namespace motr {

namespace {

void check_weights(const LinearSystem& sys, const CostWeights& cw) {
  detail::require(cw.Q().rows() == sys.state_dim() &&
                      cw.R().rows() == sys.control_dim(),
                  "controller synthesis: cost weight dimension mismatch");
}

MatrixXd lqr_gain(const LinearSystem& sys, const CostWeights& cw,
                  const MatrixXd& P) {
  const MatrixXd& A = sys.A();
  const MatrixXd& B = sys.B();
  const MatrixXd S = cw.R() + B.transpose() * P * B;
  return S.ldlt().solve(B.transpose() * P * A);
}

}  // namespace

double dare_residual(const LinearSystem& sys, const CostWeights& cw,
                     const MatrixXd& P) {
  const MatrixXd& A = sys.A();
  const MatrixXd& B = sys.B();
  const MatrixXd S = cw.R() + B.transpose() * P * B;
  const MatrixXd rhs = cw.Q() + A.transpose() * P * A -
                       A.transpose() * P * B *
                           S.ldlt().solve(B.transpose() * P * A);
  return (P - rhs).cwiseAbs().maxCoeff();
}

LqrSolution solve_dare(const LinearSystem& sys, const CostWeights& cw,
                       double tol, int max_iter) {
  check_weights(sys, cw);
  Eigen::LLT<MatrixXd> r_chol(cw.R());
  if (r_chol.info() != Eigen::Success ||
      Eigen::SelfAdjointEigenSolver<MatrixXd>(cw.R()).eigenvalues().minCoeff() <=
          1e-12) {
    throw ArgumentError("solve_dare: R must be positive definite");
  }
  if (!is_stabilizable(sys.A(), sys.B())) {
    throw ArgumentError("solve_dare: (A, B) is not stabilizable");
  }
  const MatrixXd& A = sys.A();
  const MatrixXd& B = sys.B();
  MatrixXd P = cw.Q();
  for (int iter = 1; iter <= max_iter; ++iter) {
    const MatrixXd S = cw.R() + B.transpose() * P * B;
    MatrixXd next = cw.Q() + A.transpose() * P * A -
                    A.transpose() * P * B * S.ldlt().solve(B.transpose() * P * A);
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) throw SolverError("solve_dare: iteration diverged");
    const double change = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (change < tol) {
      LqrSolution sol{P, lqr_gain(sys, cw, P), iter};
      if (!(spectral_radius(A - B * sol.K) < 1.0)) {
        throw SolverError("solve_dare: closed loop is not stable");
      }
      return sol;
    }
  }
  throw SolverError("solve_dare: no convergence in " + std::to_string(max_iter) +
                    " iterations");
}

std::optional<HinfSolution> solve_hinf_game(const LinearSystem& sys,
                                            const CostWeights& cw, double gamma,
                                            double tol, int max_iter) {
  detail::require(gamma > 0.0, "solve_hinf_game: gamma must be positive");
  check_weights(sys, cw);
  const MatrixXd& A = sys.A();
  const MatrixXd& B = sys.B();
  const MatrixXd& C = sys.C();
  const int n = sys.state_dim();
  const int dw = sys.disturbance_dim();
  const double g2 = gamma * gamma;
  const MatrixXd Rinv = cw.R().ldlt().solve(MatrixXd::Identity(
      sys.control_dim(), sys.control_dim()));
  const MatrixXd coupling = B * Rinv * B.transpose() - C * C.transpose() / g2;
  const MatrixXd I = MatrixXd::Identity(n, n);

  auto certificate_holds = [&](const MatrixXd& P) {
    const MatrixXd cert = g2 * MatrixXd::Identity(dw, dw) - C.transpose() * P * C;
    Eigen::LLT<MatrixXd> llt(0.5 * (cert + cert.transpose()));
    return llt.info() == Eigen::Success;
  };

  MatrixXd P = cw.Q();
  bool converged = false;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (!certificate_holds(P)) return std::nullopt;
    Eigen::PartialPivLU<MatrixXd> lu(I + coupling * P);
    if (std::abs(lu.determinant()) < 1e-14) return std::nullopt;
    MatrixXd next = cw.Q() + A.transpose() * P * lu.solve(A);
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) {
      throw SolverError("solve_hinf_game: non-finite iterate");
    }
    if (next.cwiseAbs().maxCoeff() > 1e12) return std::nullopt;
    const double change = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (change < tol * std::max(1.0, P.cwiseAbs().maxCoeff())) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw SolverError("solve_hinf_game: no convergence at gamma = " +
                      std::to_string(gamma));
  }
  if (!certificate_holds(P)) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<MatrixXd> pes(P, Eigen::EigenvaluesOnly);
  if (pes.eigenvalues().minCoeff() < -1e-8) return std::nullopt;

  // Stationarity of the one-step game in (u, w).
  const int du = sys.control_dim();
  MatrixXd lambda(du + dw, du + dw);
  lambda.topLeftCorner(du, du) = cw.R() + B.transpose() * P * B;
  lambda.topRightCorner(du, dw) = B.transpose() * P * C;
  lambda.bottomLeftCorner(dw, du) = C.transpose() * P * B;
  lambda.bottomRightCorner(dw, dw) =
      C.transpose() * P * C - g2 * MatrixXd::Identity(dw, dw);
  MatrixXd rhs(du + dw, n);
  rhs.topRows(du) = B.transpose() * P * A;
  rhs.bottomRows(dw) = C.transpose() * P * A;
  const MatrixXd gains = lambda.partialPivLu().solve(rhs);

  HinfSolution sol;
  sol.P = P;
  sol.K = gains.topRows(du);
  sol.W = -gains.bottomRows(dw);
  sol.gamma_star = gamma;
  if (!sol.K.allFinite() || !sol.W.allFinite()) {
    throw SolverError("solve_hinf_game: non-finite gains");
  }
  if (!(spectral_radius(A - B * sol.K + C * sol.W) < 1.0) ||
      !(spectral_radius(A - B * sol.K) < 1.0)) {
    return std::nullopt;
  }
  return sol;
}

HinfSolution hinf_bisection(const LinearSystem& sys, const CostWeights& cw,
                            double lo, double hi, double rel_tol) {
  detail::require(lo > 0.0 && hi > lo && rel_tol > 0.0,
                  "hinf_bisection: need 0 < lo < hi and rel_tol > 0");
  auto feasible = [&](double g) {
    try {
      return solve_hinf_game(sys, cw, g).has_value();
    } catch (const SolverError&) {
      return false;
    }
  };
  if (!feasible(hi)) {
    throw SolverError("hinf_bisection: upper bracket gamma = " +
                      std::to_string(hi) + " is infeasible");
  }
  if (feasible(lo)) hi = lo;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  // The bisected value sits on the feasibility boundary; back off until the
  // game solves cleanly.
  for (double g = kHinfSafetyFactor * hi; g <= 1e3 * hi; g *= kHinfSafetyFactor) {
    try {
      if (auto sol = solve_hinf_game(sys, cw, g)) return *sol;
    } catch (const SolverError&) {
    }
  }
  throw SolverError("hinf_bisection: no feasible gamma above the bisected bound");
}

double hinf_stage_game_value(const LinearSystem& sys, const CostWeights& cw,
                             const HinfSolution& sol, const VectorXd& x,
                             const VectorXd& u, const VectorXd& w) {
  const VectorXd next = step(sys, x, u, w);
  const double g2 = sol.gamma_star * sol.gamma_star;
  return stage_cost(cw, x, u) - g2 * w.squaredNorm() + next.dot(sol.P * next);
}

std::unique_ptr<Controller> lqr_controller(const LinearSystem& sys,
                                           const CostWeights& cw) {
  return std::make_unique<LinearFeedbackController>("LQR",
                                                    solve_dare(sys, cw).K);
}

std::unique_ptr<Controller> hinf_controller(const HinfSolution& sol) {
  return std::make_unique<LinearFeedbackController>("Hinf", sol.K);
}

GpcController::GpcController(const LinearSystem& sys, const CostWeights& cw,
                             MatrixXd K_base, GpcOptions options)
    : Controller("GPC"),
      sys_(sys),
      cw_(cw),
      K_(std::move(K_base)),
      h_(options.history) {
  detail::require(h_ >= 1, "gpc_controller: history must be >= 1");
  detail::require(K_.rows() == sys.control_dim() && K_.cols() == sys.state_dim(),
                  "gpc_controller: K_base must be d_u x d_x");
  detail::require(options.horizon >= 1, "gpc_controller: horizon must be >= 1");
  closed_loop_ = sys.A() - sys.B() * K_;
  lr_ = options.learning_rate > 0.0 ? options.learning_rate
                                    : 1.0 / std::sqrt(options.horizon);
  radius_ = options.radius > 0.0 ? options.radius : 10.0 * K_.norm();
  if (!(radius_ > 0.0)) radius_ = 1.0;
  N_ = MatrixXd::Zero(h_ * sys.control_dim(), sys.state_dim());
  w_hat_.assign(2 * h_, VectorXd::Zero(sys.state_dim()));
}

VectorXd GpcController::control(const VectorXd& x) {
  const int du = sys_.control_dim();
  VectorXd u = -K_ * x;
  for (int j = 1; j <= h_; ++j) {
    u += N_.middleRows((j - 1) * du, du) * w_hat_[j - 1];
  }
  return u;
}

void GpcController::observe(const VectorXd& x, const VectorXd& u,
                            const VectorXd& x_next) {
  const int du = sys_.control_dim();
  const int dx = sys_.state_dim();
  const int rows = h_ * du;
  const Eigen::Index n = static_cast<Eigen::Index>(rows) * dx;

  w_hat_.pop_back();
  w_hat_.insert(w_hat_.begin(), x_next - sys_.A() * x - sys_.B() * u);

  // Jacobian of sum_j N^{[j]} w_hat_[offset + j] with respect to vec(N).
  auto action_map = [&](int offset) {
    MatrixXd J = MatrixXd::Zero(du, n);
    for (int j = 1; j <= h_; ++j) {
      const int idx = offset + j;
      if (idx < 0 || idx >= static_cast<int>(w_hat_.size())) continue;
      const VectorXd& w = w_hat_[idx];
      for (int c = 0; c < dx; ++c) {
        J.block(0, c * rows + (j - 1) * du, du, du).diagonal().array() += w(c);
      }
    }
    return J;
  };

  // Counterfactual next state if N had been played over the last h steps.
  MatrixXd Jy = MatrixXd::Zero(dx, n);
  VectorXd y0 = VectorXd::Zero(dx);
  MatrixXd Ai = MatrixXd::Identity(dx, dx);
  for (int i = 0; i < h_; ++i) {
    y0 += Ai * w_hat_[i];
    Jy += Ai * sys_.B() * action_map(i);
    Ai = closed_loop_ * Ai;
  }
  const MatrixXd Jv = -K_ * Jy + action_map(-1);
  const Eigen::Map<const VectorXd> m(N_.data(), n);
  const VectorXd y = Jy * m + y0;
  const VectorXd v = Jv * m - K_ * y0;
  const VectorXd grad =
      2.0 * (Jy.transpose() * (cw_.Q() * y) + Jv.transpose() * (cw_.R() * v));

  // Steps are divided by the largest curvature seen so far, so the rate
  // stays Theta(1/sqrt(T)) whatever the disturbance scale.
  const MatrixXd hess = 2.0 * (Jy.transpose() * cw_.Q() * Jy +
                               Jv.transpose() * cw_.R() * Jv);
  curvature_ = std::max(curvature_, spectral_norm(hess));
  Eigen::Map<VectorXd> mv(N_.data(), n);
  mv -= (lr_ / std::max(1.0, curvature_)) * grad;
  const double norm = N_.norm();
  if (norm > radius_) N_ *= radius_ / norm;
}

std::unique_ptr<Controller> gpc_controller(const LinearSystem& sys,
                                           const CostWeights& cw,
                                           const MatrixXd& K_base,
                                           GpcOptions options) {
  return std::make_unique<GpcController>(sys, cw, K_base, options);
}

}  // namespace motr
