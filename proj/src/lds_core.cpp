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
#include "motr/lds_core.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>

namespace motr {

namespace {

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

}  // namespace

LinearSystem::LinearSystem(MatrixXd A, MatrixXd B, MatrixXd C)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)) {
  detail::require(A_.rows() > 0 && A_.rows() == A_.cols(),
                  "LinearSystem: A must be square and non-empty, got " +
                      detail::dims(A_));
  detail::require(B_.rows() == A_.rows() && B_.cols() > 0,
                  "LinearSystem: B must be " + std::to_string(A_.rows()) +
                      "xd_u, got " + detail::dims(B_));
  detail::require(C_.rows() == A_.rows() && C_.cols() > 0,
                  "LinearSystem: C must be " + std::to_string(A_.rows()) +
                      "xd_w, got " + detail::dims(C_));
  detail::require(all_finite(A_) && all_finite(B_) && all_finite(C_),
                  "LinearSystem: non-finite entries");
}

CostWeights::CostWeights(MatrixXd Q, MatrixXd R)
    : Q_(std::move(Q)), R_(std::move(R)) {
  constexpr double kTol = 1e-10;
  for (const MatrixXd* m : {&Q_, &R_}) {
    detail::require(m->rows() > 0 && m->rows() == m->cols(),
                    "CostWeights: weights must be square, got " +
                        detail::dims(*m));
    detail::require(m->allFinite(), "CostWeights: non-finite entries");
    detail::require((*m - m->transpose()).cwiseAbs().maxCoeff() <= kTol,
                    "CostWeights: weights must be symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(*m, Eigen::EigenvaluesOnly);
    detail::require(es.eigenvalues().minCoeff() >= -kTol,
                    "CostWeights: weights must be positive semidefinite");
  }
  xi_ = std::max(spectral_norm(Q_), spectral_norm(R_));
}

CostWeights CostWeights::identity(int state_dim, int control_dim) {
  return CostWeights(MatrixXd::Identity(state_dim, state_dim),
                     MatrixXd::Identity(control_dim, control_dim));
}

double spectral_norm(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues()(0);
}

double spectral_radius(const MatrixXd& A) {
  Eigen::EigenSolver<MatrixXd> es(A, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw SolverError("spectral_radius: eigensolver failed");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

VectorXd step(const LinearSystem& sys, const VectorXd& x, const VectorXd& u,
              const VectorXd& w) {
  detail::require(x.size() == sys.state_dim() &&
                      u.size() == sys.control_dim() &&
                      w.size() == sys.disturbance_dim(),
                  "step: dimension mismatch");
  return sys.A() * x + sys.B() * u + sys.C() * w;
}

double stage_cost(const CostWeights& cw, const VectorXd& x, const VectorXd& u) {
  detail::require(x.size() == cw.Q().rows() && u.size() == cw.R().rows(),
                  "stage_cost: dimension mismatch");
  return x.dot(cw.Q() * x) + u.dot(cw.R() * u);
}

StabilityReport analyze_stability(const LinearSystem& sys) {
  StabilityReport report;
  report.beta = std::max({spectral_norm(sys.A()), spectral_norm(sys.B()),
                          spectral_norm(sys.C())});

  const MatrixXd& A = sys.A();
  Eigen::EigenSolver<MatrixXd> es(A);
  if (es.info() != Eigen::Success) {
    throw StabilityError("analyze_stability: eigensolver failed", report);
  }
  const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
  report.spectral_radius = rho;
  report.gamma = std::clamp(1.0 - rho, 0.0, 1.0);

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(es.eigenvectors());
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  const double cond = smin > 0.0 ? sv(0) / smin
                                 : std::numeric_limits<double>::infinity();

  if (std::isfinite(cond) && cond < kDiagonalizationConditionLimit) {
    report.kappa = std::max(1.0, cond);
    report.is_strongly_stable = rho < 1.0;
    return report;
  }

  // Near-defective A: fall back to sup_{k<=200} |A^k| / rho^k, computed on
  // A / rho so the powers neither underflow nor overflow. A nilpotent A has
  // rho = 0 and uses sup_k |A^k| instead.
  const MatrixXd scaled = rho > 1e-300 ? MatrixXd(A / rho) : A;
  MatrixXd power = MatrixXd::Identity(A.rows(), A.cols());
  double kappa = 1.0;
  for (int k = 1; k <= 200; ++k) {
    power = power * scaled;
    kappa = std::max(kappa, spectral_norm(power));
  }
  report.kappa = kappa;
  report.kappa_from_power_bound = true;
  report.is_strongly_stable = false;
  return report;
}

LinearSystem stabilize(const LinearSystem& sys, const MatrixXd& K) {
  detail::require(K.rows() == sys.control_dim() && K.cols() == sys.state_dim(),
                  "stabilize: K must be d_u x d_x, got " + detail::dims(K));
  return LinearSystem(sys.A() - sys.B() * K, sys.B(), sys.C());
}

int controllability_rank(const MatrixXd& A, const MatrixXd& B) {
  const Eigen::Index n = A.rows();
  MatrixXd ctrb(n, n * B.cols());
  MatrixXd block = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * B.cols(), B.cols()) = block;
    block = A * block;
  }
  Eigen::JacobiSVD<MatrixXd> svd(ctrb);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cutoff = 1e-8 * sv(0);
  return static_cast<int>((sv.array() > cutoff).count());
}

bool is_stabilizable(const MatrixXd& A, const MatrixXd& B) {
  const Eigen::Index n = A.rows();
  Eigen::EigenSolver<MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) {
    throw SolverError("is_stabilizable: eigensolver failed");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda) < 1.0) continue;
    Eigen::MatrixXcd pbh(n, n + B.cols());
    pbh.leftCols(n) = lambda * Eigen::MatrixXcd::Identity(n, n) -
                      A.cast<std::complex<double>>();
    pbh.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) <= 1e-8 * std::max(1.0, sv(0))) return false;
  }
  return true;
}

LinearSystem random_system(int state_dim, int control_dim, int disturbance_dim,
                           std::uint64_t seed, double target_radius) {
  detail::require(state_dim >= 1 && control_dim >= 1 && disturbance_dim >= 1,
                  "random_system: dimensions must be >= 1");
  detail::require(target_radius > 0.0,
                  "random_system: target_radius must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto sample = [&](int rows, int cols) {
    MatrixXd m(rows, cols);
    // Row-major fill keeps the draw order independent of Eigen's storage.
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
  };
  for (int attempt = 0; attempt < 100; ++attempt) {
    MatrixXd A = sample(state_dim, state_dim);
    MatrixXd B = sample(state_dim, control_dim);
    MatrixXd C = sample(state_dim, disturbance_dim);
    const double rho = spectral_radius(A);
    if (!(rho > 1e-12)) continue;
    A *= target_radius / rho;
    if (controllability_rank(A, B) < state_dim) continue;
    return LinearSystem(std::move(A), std::move(B), std::move(C));
  }
  throw SolverError(
      "random_system: 100 consecutive samples failed the controllability check");
}

int horizon_H(double kappa, double gamma, double xi, int T) {
  detail::require(gamma > 0.0, "horizon_H: gamma must be positive");
  detail::require(kappa >= 1.0 && xi > 0.0 && T >= 1,
                  "horizon_H: need kappa >= 1, xi > 0, T >= 1");
  const double h = std::ceil(std::log(kappa * xi * T) / gamma);
  return std::max(1, static_cast<int>(h));
}

double complexity_measure(const StabilityReport& report, int state_dim,
                          int control_dim, int disturbance_dim, double D,
                          double control_bound, double xi) {
  detail::require(report.gamma > 0.0,
                  "complexity_measure: gamma must be positive");
  return state_dim + control_dim + disturbance_dim + D + control_bound +
         report.beta + report.kappa + xi + 1.0 / report.gamma;
}

}  // namespace motr
