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
#include <vector>

#include "motr/common.hpp"

namespace motr {

/// Discrete-time plant x_{t+1} = A x_t + B u_t + C w_t.
class LinearSystem {
 public:
  LinearSystem(MatrixXd A, MatrixXd B, MatrixXd C);

  const MatrixXd& A() const { return A_; }
  const MatrixXd& B() const { return B_; }
  const MatrixXd& C() const { return C_; }

  int state_dim() const { return static_cast<int>(A_.rows()); }
  int control_dim() const { return static_cast<int>(B_.cols()); }
  int disturbance_dim() const { return static_cast<int>(C_.cols()); }

  bool operator==(const LinearSystem&) const = default;

 private:
  MatrixXd A_, B_, C_;
};

/// Quadratic stage cost weights. xi = max(|Q|_2, |R|_2).
class CostWeights {
 public:
  CostWeights(MatrixXd Q, MatrixXd R);

  static CostWeights identity(int state_dim, int control_dim);

  const MatrixXd& Q() const { return Q_; }
  const MatrixXd& R() const { return R_; }
  double xi() const { return xi_; }

 private:
  MatrixXd Q_, R_;
  double xi_ = 0.0;
};

struct StabilityReport {
  double spectral_radius = 0.0;
  double gamma = 0.0;  // 1 - spectral_radius, clamped to [0, 1]
  double kappa = 1.0;
  double beta = 0.0;
  bool is_strongly_stable = false;
  /// True when the eigenvector matrix was too ill-conditioned and kappa is the
  /// empirical sup_k |A^k| / rho^k estimate instead.
  bool kappa_from_power_bound = false;
};

struct TrajectoryLog {
  std::vector<VectorXd> states;        // T + 1
  std::vector<VectorXd> controls;      // T
  std::vector<VectorXd> disturbances;  // T
  std::vector<double> stage_costs;     // T

  int horizon() const { return static_cast<int>(stage_costs.size()); }
};

/// Eigenvector condition numbers at or above this are treated as defective.
inline constexpr double kDiagonalizationConditionLimit = 1e8;

/// Eigensolver failure; carries whatever was computed before the failure.
class StabilityError : public SolverError {
 public:
  StabilityError(const std::string& what, StabilityReport partial)
      : SolverError(what), partial_(partial) {}
  const StabilityReport& partial_report() const { return partial_; }

 private:
  StabilityReport partial_;
};

/// Largest singular value.
double spectral_norm(const MatrixXd& M);

VectorXd step(const LinearSystem& sys, const VectorXd& x, const VectorXd& u,
              const VectorXd& w);

double stage_cost(const CostWeights& cw, const VectorXd& x, const VectorXd& u);

StabilityReport analyze_stability(const LinearSystem& sys);

/// Closed-loop system with A replaced by A - B K.
LinearSystem stabilize(const LinearSystem& sys, const MatrixXd& K);

/// Rank of [B, AB, ..., A^{n-1}B] with singular-value cutoff 1e-8 * sigma_max.
int controllability_rank(const MatrixXd& A, const MatrixXd& B);

/// PBH test: rank [lambda I - A, B] = n for every |lambda| >= 1.
bool is_stabilizable(const MatrixXd& A, const MatrixXd& B);

double spectral_radius(const MatrixXd& A);

/// Standard-normal A rescaled to the requested spectral radius, standard-normal
/// B and C. Resamples until (A, B) is controllable; gives up after 100 tries.
LinearSystem random_system(int state_dim, int control_dim, int disturbance_dim,
                           std::uint64_t seed, double target_radius = 0.9);

/// ceil(ln(kappa * xi * T) / gamma), never less than 1.
int horizon_H(double kappa, double gamma, double xi, int T);

/// d_x + d_u + d_w + D + C_u + beta + kappa + xi + 1/gamma.
double complexity_measure(const StabilityReport& report, int state_dim,
                          int control_dim, int disturbance_dim, double D,
                          double control_bound, double xi);

}  // namespace motr
