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

#include "motr/common.hpp"

namespace motr {

/// maximize z^T P z + p^T z subject to |z| <= D. P need not be symmetric.
struct TrustRegionProblem {
  MatrixXd P;
  VectorXd p;
  double D = 1.0;

  TrustRegionProblem(MatrixXd P_, VectorXd p_, double D_);

  int dim() const { return static_cast<int>(p.size()); }
  double objective(const VectorXd& z) const { return z.dot(P * z) + p.dot(z); }
};

struct TrustRegionSolution {
  VectorXd z;
  double value = 0.0;
  double multiplier = 0.0;
  bool on_boundary = false;
  bool hard_case = false;
};

/// Secular iteration did not converge. Holds the last iterate.
class TrustRegionError : public SolverError {
 public:
  TrustRegionError(const std::string& what, TrustRegionSolution best)
      : SolverError(what), best_(std::move(best)) {}
  const TrustRegionSolution& best_iterate() const { return best_; }

 private:
  TrustRegionSolution best_;
};

/// lambda / mu with lambda = max(2(|P|_2 + |p|_2), D, 1), mu = min(D, 1).
double condition_number(const TrustRegionProblem& prob);

/// Global maximizer via eigendecomposition of the symmetric part and a
/// safeguarded Newton iteration on the secular equation |z(lambda)| = D.
/// The returned value is within eps of the true maximum.
TrustRegionSolution solve(const TrustRegionProblem& prob, double eps);

/// Test oracle: best of `samples` quasi-uniform boundary directions (each with
/// the exact best radius along its ray) plus the interior stationary point,
/// polished by a local pattern search on the sphere. d <= 4 only.
TrustRegionSolution brute_force(const TrustRegionProblem& prob, int samples);

/// |2 S z + p - 2 multiplier z| with S the symmetric part of P.
double kkt_residual(const TrustRegionProblem& prob,
                    const TrustRegionSolution& sol);

}  // namespace motr
