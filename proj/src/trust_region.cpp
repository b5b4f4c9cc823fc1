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
#include "motr/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "motr/lds_core.hpp"

namespace motr {

TrustRegionProblem::TrustRegionProblem(MatrixXd P_, VectorXd p_, double D_)
    : P(std::move(P_)), p(std::move(p_)), D(D_) {
  detail::require(P.rows() == P.cols() && P.rows() == p.size(),
                  "TrustRegionProblem: P must be d x d with d = |p|, got P " +
                      detail::dims(P) + " and p of size " +
                      std::to_string(p.size()));
  detail::require(D > 0.0 && std::isfinite(D),
                  "TrustRegionProblem: radius must be positive and finite");
  detail::require(P.allFinite() && p.allFinite(),
                  "TrustRegionProblem: non-finite entries");
}

double condition_number(const TrustRegionProblem& prob) {
  const double lambda = std::max(
      {2.0 * (spectral_norm(prob.P) + prob.p.norm()), prob.D, 1.0});
  const double mu = std::min(prob.D, 1.0);
  return lambda / mu;
}

double kkt_residual(const TrustRegionProblem& prob,
                    const TrustRegionSolution& sol) {
  const MatrixXd S = 0.5 * (prob.P + prob.P.transpose());
  return (2.0 * S * sol.z + prob.p - 2.0 * sol.multiplier * sol.z).norm();
}

namespace {

TrustRegionSolution finish(const TrustRegionProblem& prob, VectorXd z,
                           double multiplier, bool on_boundary,
                           bool hard_case) {
  TrustRegionSolution sol;
  if (on_boundary) {
    const double n = z.norm();
    if (n > 0.0) z *= prob.D / n;
  }
  sol.value = prob.objective(z);
  sol.z = std::move(z);
  sol.multiplier = multiplier;
  sol.on_boundary = on_boundary;
  sol.hard_case = hard_case;
  return sol;
}

}  // namespace

TrustRegionSolution solve(const TrustRegionProblem& prob, double eps) {
  detail::require(eps > 0.0, "trust_region::solve: eps must be positive");
  const int d = prob.dim();
  const double D = prob.D;
  if (d == 0) return finish(prob, VectorXd(), 0.0, false, false);

  // Maximizing z^T S z + p^T z: stationary points satisfy (lambda I - S) z = p/2
  // with lambda >= max(0, lambda_max(S)) at the global maximizer.
  const MatrixXd S = 0.5 * (prob.P + prob.P.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
  if (es.info() != Eigen::Success) {
    throw SolverError("trust_region::solve: eigendecomposition failed");
  }
  const VectorXd& lam = es.eigenvalues();  // ascending
  const MatrixXd& V = es.eigenvectors();
  const VectorXd b = 0.5 * (V.transpose() * prob.p);
  const double lmax = lam(d - 1);
  const double pnorm = prob.p.norm();

  // Interior maximizer exists only for negative definite S.
  if (lmax < 0.0) {
    const VectorXd coef = b.array() / (-lam.array());
    if (coef.norm() <= D) {
      return finish(prob, V * coef, 0.0, false, false);
    }
  }

  // gap_i = lambda_max - lambda_i >= 0; the secular variable is
  // delta = lambda - lambda_max so small shifts keep full precision.
  const VectorXd gap = (lmax - lam.array()).matrix();
  const double cluster_tol = 1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  double top_proj_sq = 0.0;
  int top_index = d - 1;
  for (int i = 0; i < d; ++i) {
    if (gap(i) <= cluster_tol) {
      top_proj_sq += b(i) * b(i);
      top_index = std::min(top_index, i);
    }
  }
  const double delta_lo = std::max(0.0, -lmax);

  auto z_at = [&](double delta, bool skip_top) {
    VectorXd coef = VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) {
      if ((gap(i) <= cluster_tol && skip_top) || b(i) == 0.0) continue;
      coef(i) = b(i) / (delta + gap(i));
    }
    return coef;
  };

  const bool p_orthogonal_to_top =
      pnorm == 0.0 || 2.0 * std::sqrt(top_proj_sq) < 1e-10 * pnorm;
  if (p_orthogonal_to_top && delta_lo == 0.0) {
    VectorXd coef = z_at(0.0, /*skip_top=*/true);
    const double r = coef.norm();
    if (r <= D) {
      coef(top_index) += std::sqrt(std::max(0.0, D * D - r * r));
      return finish(prob, V * coef, lmax, true, true);
    }
  }

  // Boundary case. phi(delta) = 1/|z| - 1/D is increasing in delta; bracket
  // the root and run Newton with bisection fallback.
  const double bnorm = b.norm();
  double lo = delta_lo;
  double hi = std::max(delta_lo, bnorm / D);
  hi = hi * (1.0 + 1e-12) + std::numeric_limits<double>::min();
  auto norm_and_slope = [&](double delta, double& slope) {
    double n2 = 0.0, d3 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double denom = delta + gap(i);
      if (b(i) == 0.0) continue;
      const double t = b(i) / denom;
      n2 += t * t;
      d3 += t * t / denom;
    }
    const double n = std::sqrt(n2);
    // d/ddelta (1/|z|) = (sum b_i^2 / (delta+g_i)^3) / |z|^3
    slope = n > 0.0 ? d3 / (n2 * n) : 0.0;
    return n;
  };

  double delta = hi;
  for (int iter = 0; iter < 200; ++iter) {
    double slope = 0.0;
    const double n = norm_and_slope(delta, slope);
    const double phi = (n > 0.0 ? 1.0 / n : std::numeric_limits<double>::infinity()) -
                       1.0 / D;
    if (std::abs(n - D) <= 1e-14 * D) break;
    if (phi < 0.0) {
      lo = delta;
    } else {
      hi = delta;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() *
                       std::max(hi, std::numeric_limits<double>::min())) {
      break;
    }
    double next = (slope > 0.0 && std::isfinite(phi)) ? delta - phi / slope
                                                       : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    delta = next;
    if (iter == 199) {
      throw TrustRegionError(
          "trust_region::solve: secular iteration did not converge",
          finish(prob, V * z_at(delta, false), lmax + delta, true, false));
    }
  }
  return finish(prob, V * z_at(delta, false), lmax + delta, true, false);
}

namespace {

// Value of the best point along the ray r * v, r in [0, D].
double best_on_ray(const TrustRegionProblem& prob, const VectorXd& v,
                   double& radius) {
  const double a = v.dot(prob.P * v);
  const double c = prob.p.dot(v);
  const double D = prob.D;
  radius = 0.0;
  double best = 0.0;
  const double at_d = a * D * D + c * D;
  if (at_d > best) {
    best = at_d;
    radius = D;
  }
  if (a < 0.0) {
    const double r = -c / (2.0 * a);
    if (r > 0.0 && r < D) {
      const double val = a * r * r + c * r;
      if (val > best) {
        best = val;
        radius = r;
      }
    }
  }
  return best;
}

double radical_inverse(unsigned index, unsigned base) {
  double result = 0.0, f = 1.0 / base;
  while (index > 0) {
    result += f * (index % base);
    index /= base;
    f /= base;
  }
  return result;
}

std::vector<VectorXd> sphere_directions(int d, int samples) {
  std::vector<VectorXd> dirs;
  dirs.reserve(samples);
  if (d == 1) {
    dirs.push_back(VectorXd::Constant(1, 1.0));
    dirs.push_back(VectorXd::Constant(1, -1.0));
    return dirs;
  }
  if (d == 2) {
    for (int k = 0; k < samples; ++k) {
      const double th = 2.0 * std::numbers::pi * k / samples;
      dirs.push_back((VectorXd(2) << std::cos(th), std::sin(th)).finished());
    }
    return dirs;
  }
  if (d == 3) {
    // Fibonacci lattice.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < samples; ++k) {
      const double y = 1.0 - 2.0 * (k + 0.5) / samples;
      const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
      const double th = golden * k;
      dirs.push_back(
          (VectorXd(3) << r * std::cos(th), y, r * std::sin(th)).finished());
    }
    return dirs;
  }
  // d == 4: Halton points through Box-Muller, normalized.
  for (int k = 1; k <= samples; ++k) {
    const double u[4] = {radical_inverse(k, 2), radical_inverse(k, 3),
                         radical_inverse(k, 5), radical_inverse(k, 7)};
    VectorXd v(4);
    for (int j = 0; j < 2; ++j) {
      const double rad = std::sqrt(-2.0 * std::log(std::max(u[2 * j], 1e-300)));
      v(2 * j) = rad * std::cos(2.0 * std::numbers::pi * u[2 * j + 1]);
      v(2 * j + 1) = rad * std::sin(2.0 * std::numbers::pi * u[2 * j + 1]);
    }
    const double n = v.norm();
    if (n > 0.0) dirs.push_back(v / n);
  }
  return dirs;
}

}  // namespace

TrustRegionSolution brute_force(const TrustRegionProblem& prob, int samples) {
  const int d = prob.dim();
  detail::require(d >= 1 && d <= 4, "brute_force: dimension must be in [1, 4]");
  detail::require(samples >= 1000, "brute_force: need at least 1000 samples");

  struct Candidate {
    double value;
    VectorXd dir;
  };
  std::vector<Candidate> top;  // few best directions, polished below
  constexpr std::size_t kKeep = 6;
  for (const VectorXd& v : sphere_directions(d, samples)) {
    double r = 0.0;
    const double val = best_on_ray(prob, v, r);
    if (top.size() < kKeep || val > top.back().value) {
      top.push_back({val, v});
      std::sort(top.begin(), top.end(),
                [](const Candidate& a, const Candidate& b) {
                  return a.value > b.value;
                });
      if (top.size() > kKeep) top.pop_back();
    }
  }

  // Pattern search on the sphere from the best grid directions.
  const double spacing =
      d == 1 ? 0.0 : std::pow(static_cast<double>(samples), -1.0 / (d - 1)) * 4.0;
  for (Candidate& c : top) {
    for (double h = spacing; h > 1e-10; h *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (int j = 0; j < d; ++j) {
          for (double sgn : {1.0, -1.0}) {
            VectorXd v = c.dir;
            v(j) += sgn * h;
            v.normalize();
            double r = 0.0;
            const double val = best_on_ray(prob, v, r);
            if (val > c.value) {
              c.value = val;
              c.dir = v;
              improved = true;
            }
          }
        }
      }
    }
  }
  const Candidate& winner = *std::max_element(
      top.begin(), top.end(),
      [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
  double radius = 0.0;
  best_on_ray(prob, winner.dir, radius);
  VectorXd z = radius * winner.dir;

  const MatrixXd S = 0.5 * (prob.P + prob.P.transpose());
  Eigen::LLT<MatrixXd> llt(-S);
  if (llt.info() == Eigen::Success) {
    const VectorXd z0 = llt.solve(0.5 * prob.p);  // -S z0 = p/2
    if (z0.norm() <= prob.D && prob.objective(z0) > prob.objective(z)) z = z0;
  }

  TrustRegionSolution sol;
  sol.value = prob.objective(z);
  sol.on_boundary = z.norm() >= prob.D * (1.0 - 1e-9);
  if (sol.on_boundary) {
    sol.multiplier = z.dot(2.0 * S * z + prob.p) / (2.0 * z.squaredNorm());
  }
  sol.z = std::move(z);
  return sol;
}

}  // namespace motr
