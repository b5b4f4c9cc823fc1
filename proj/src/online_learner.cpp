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
#include "motr/online_learner.hpp"

#include <cmath>

namespace motr {

MemoryQuadratic::MemoryQuadratic(MatrixXd P_, VectorXd p_, double constant_,
                                 int d_, int H_)
    : P(std::move(P_)), p(std::move(p_)), constant(constant_), d(d_), H(H_) {
  detail::require(d > 0 && H > 0, "MemoryQuadratic: d and H must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(d) * H;
  detail::require(P.rows() == n && P.cols() == n && p.size() == n,
                  "MemoryQuadratic: expected P of size dH x dH and p of size dH");
  detail::require(P.allFinite() && p.allFinite() && std::isfinite(constant),
                  "MemoryQuadratic: non-finite entries");
}

double MemoryQuadratic::evaluate(const VectorXd& window) const {
  detail::require(window.size() == p.size(),
                  "MemoryQuadratic::evaluate: window size mismatch");
  return window.dot(P * window) + p.dot(window) + constant;
}

double MemoryQuadratic::evaluate(std::span<const VectorXd> plays) const {
  detail::require(static_cast<int>(plays.size()) == H,
                  "MemoryQuadratic::evaluate: need exactly H plays");
  VectorXd window(p.size());
  for (int k = 0; k < H; ++k) {
    detail::require(plays[k].size() == d,
                    "MemoryQuadratic::evaluate: play dimension mismatch");
    window.segment(k * d, d) = plays[k];
  }
  return evaluate(window);
}

VectorXd MemoryQuadratic::gradient(const VectorXd& window) const {
  return (P + P.transpose()) * window + p;
}

CollapsedQuadratic CollapsedQuadratic::zero(int dim) {
  return {MatrixXd::Zero(dim, dim), VectorXd::Zero(dim), 0.0};
}

CollapsedQuadratic& CollapsedQuadratic::operator+=(
    const CollapsedQuadratic& other) {
  detail::require(other.C.rows() == C.rows() && other.d.size() == d.size(),
                  "CollapsedQuadratic: dimension mismatch");
  C += other.C;
  d += other.d;
  constant += other.constant;
  return *this;
}

CollapsedQuadratic collapse(const MemoryQuadratic& mq) {
  const int d = mq.d;
  CollapsedQuadratic g = CollapsedQuadratic::zero(d);
  for (int i = 0; i < mq.H; ++i) {
    g.d += mq.p.segment(i * d, d);
    for (int j = 0; j < mq.H; ++j) g.C += mq.P.block(i * d, j * d, d, d);
  }
  g.constant = mq.constant;
  return g;
}

VectorXd sample_perturbation(double eta, int d, std::mt19937_64& rng) {
  detail::require(eta > 0.0, "sample_perturbation: eta must be positive");
  std::exponential_distribution<double> exp(eta);
  VectorXd sigma(d);
  for (int i = 0; i < d; ++i) sigma(i) = exp(rng);
  return sigma;
}

VectorXd sample_ball(int d, double D, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = normal(rng);
  const double n = v.norm();
  if (n == 0.0) return VectorXd::Zero(d);
  return v * (D * std::pow(unif(rng), 1.0 / d) / n);
}

double default_eta(double R, int d, double D, int H, int T) {
  detail::require(R > 0.0 && d > 0 && D > 0.0 && H > 0 && T > 0,
                  "default_eta: all arguments must be positive");
  return R / (std::pow(d, 1.5) * D * std::pow(H, 1.5) * std::sqrt(T));
}

VectorXd TrustRegionOracle::operator()(const CollapsedQuadratic& cumulative,
                                       const VectorXd& sigma) const {
  return solve(TrustRegionProblem(cumulative.C, cumulative.d - sigma, radius),
               eps)
      .z;
}

OnlineTrustRegion::OnlineTrustRegion(int dim, double radius, double eta,
                                     double eps, std::uint64_t seed)
    : radius_(radius),
      eps_(eps),
      fpl_(CollapsedQuadratic::zero(dim), TrustRegionOracle{radius, eps}, dim,
           eta, seed) {
  detail::require(radius > 0.0, "OnlineTrustRegion: radius must be positive");
  detail::require(eps > 0.0, "OnlineTrustRegion: eps must be positive");
  fpl_.set_current(VectorXd::Zero(dim));
}

std::vector<VectorXd> OnlineTrustRegion::initialize(int count) {
  std::vector<VectorXd> plays;
  plays.reserve(count);
  for (int i = 0; i < count; ++i) {
    plays.push_back(sample_ball(dim(), radius_, fpl_.rng()));
  }
  if (!plays.empty()) fpl_.set_current(plays.back());
  return plays;
}

void OnlineTrustRegion::observe(const CollapsedQuadratic& g) {
  detail::require(g.dim() == dim() && g.C.rows() == dim() && g.C.cols() == dim(),
                  "OnlineTrustRegion::observe: dimension mismatch");
  fpl_.observe(g);
}

const VectorXd& OnlineTrustRegion::update() { return fpl_.update(); }

RegretAudit regret_audit(std::span<const MemoryQuadratic> history,
                         std::span<const VectorXd> plays, double D) {
  detail::require(history.size() == plays.size(),
                  "regret_audit: history and plays must have equal length");
  RegretAudit audit;
  if (history.empty()) return audit;
  const int H = history.front().H;
  const int d = history.front().d;
  CollapsedQuadratic total = CollapsedQuadratic::zero(d);
  for (std::size_t t = 0; t < history.size(); ++t) {
    detail::require(history[t].H == H && history[t].d == d,
                    "regret_audit: inconsistent memory length or dimension");
    if (static_cast<int>(t) < H - 1) continue;
    total += collapse(history[t]);
    audit.achieved += history[t].evaluate(plays.subspan(t - H + 1, H));
  }
  const TrustRegionSolution best =
      solve(TrustRegionProblem(total.C, total.d, D), 1e-9);
  audit.hindsight = best.value + total.constant;
  return audit;
}

}  // namespace motr
