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
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "motr/controllers.hpp"
#include "motr/generators.hpp"
#include "test_util.hpp"

namespace motr {
namespace {

using testing::normal_matrix;

struct Plant {
  LinearSystem sys;
  CostWeights cw;
  LqrSolution lqr;
  HinfSolution hinf;
};

Plant make_plant(std::uint64_t seed) {
  LinearSystem sys = random_system(4, 2, 2, seed);
  CostWeights cw = CostWeights::identity(4, 2);
  LqrSolution lqr = solve_dare(sys, cw);
  HinfSolution hinf = hinf_bisection(sys, cw, 1e-3, 1e6);
  return {std::move(sys), std::move(cw), std::move(lqr), std::move(hinf)};
}

// Closed loop under `ctrl`; returns the emitted disturbances.
std::vector<VectorXd> drive(const Plant& p, Controller& ctrl, Generator& gen, int T,
                            VectorXd x) {
  std::vector<VectorXd> ws;
  for (int t = 0; t < T; ++t) {
    const VectorXd u = ctrl.control(x);
    const VectorXd w = gen.emit(x);
    const double c = stage_cost(p.cw, x, u);
    const VectorXd next = step(p.sys, x, u, w);
    gen.reveal(u, c, next);
    ctrl.observe(x, u, next);
    ws.push_back(w);
    x = next;
  }
  return ws;
}

VectorXd unit_x0(int d) { return VectorXd::Ones(d) / std::sqrt(double(d)); }

TEST(NormalizeBudget, Examples) {
  EXPECT_EQ(normalize_budget(VectorXd::Zero(3), 1.0), VectorXd::Zero(3));
  VectorXd w(2);
  w << 3, 4;
  EXPECT_LE((normalize_budget(w, 2.5) - 0.5 * w).norm(), 1e-15);
  const VectorXd once = normalize_budget(w, 1.0);
  EXPECT_EQ(normalize_budget(once, 1.0), once);
  EXPECT_EQ(normalize_budget(0.1 * w, 1.0), 0.1 * w);
  EXPECT_THROW(normalize_budget(w, 0.0), ArgumentError);
}

TEST(ApplyBudget, FixedNormRescalesEveryNonzeroVector) {
  VectorXd w(2);
  w << 0.03, 0.04;
  EXPECT_NEAR(apply_budget(w, 2.0, BudgetMode::kFixedNorm).norm(), 2.0, 1e-15);
  EXPECT_EQ(apply_budget(VectorXd::Zero(2), 2.0, BudgetMode::kFixedNorm), VectorXd::Zero(2));
  EXPECT_EQ(apply_budget(w, 2.0, BudgetMode::kClip), w);
}

TEST(Generator, CausalityIsEnforced) {
  auto gen = zero_generator(2);
  EXPECT_THROW(gen->reveal(VectorXd::Zero(1), 0.0, VectorXd::Zero(3)), CausalityError);
  gen->emit(VectorXd::Zero(3));
  EXPECT_THROW(gen->emit(VectorXd::Zero(3)), CausalityError);
  gen->reveal(VectorXd::Zero(1), 0.0, VectorXd::Zero(3));
  EXPECT_NO_THROW(gen->emit(VectorXd::Zero(3)));
}

TEST(TransformResidual, Examples) {
  const LinearSystem sys = random_system(3, 2, 2, 1, 0.8);
  HinfSolution zero{MatrixXd::Zero(3, 3), MatrixXd::Zero(2, 3), MatrixXd::Zero(2, 3), 1.0};
  EXPECT_EQ(transform_residual(sys, zero), sys);
  const LinearSystem scalar(MatrixXd::Constant(1, 1, 1.5), MatrixXd::Ones(1, 1),
                            MatrixXd::Ones(1, 1));
  HinfSolution one{MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), MatrixXd::Zero(1, 1), 1.0};
  EXPECT_DOUBLE_EQ(transform_residual(scalar, one).A()(0, 0), 0.5);
  HinfSolution none{MatrixXd::Ones(1, 1), MatrixXd::Zero(1, 1), MatrixXd::Zero(1, 1), 1.0};
  EXPECT_THROW(transform_residual(scalar, none), DomainError);
}

TEST(TransformResidual, StableForGameGains) {
  for (int seed = 0; seed < 20; ++seed) {
    const LinearSystem sys = random_system(4, 2, 2, 300 + seed, 1.1);
    const HinfSolution h = hinf_bisection(sys, CostWeights::identity(4, 2), 1e-3, 1e6);
    EXPECT_LT(spectral_radius(transform_residual(sys, h).A()), 1.0);
  }
}

TEST(HinfGenerator, LinearMapUnderBudget) {
  const Plant p = make_plant(5);
  auto clip = hinf_generator(p.hinf, 0.5, BudgetMode::kClip);
  EXPECT_EQ(clip->emit(VectorXd::Zero(4)), VectorXd::Zero(2));
  clip->reveal(VectorXd::Zero(2), 0.0, VectorXd::Zero(4));
  VectorXd x = 100.0 * unit_x0(4);
  const VectorXd w = clip->emit(x);
  const VectorXd raw = p.hinf.W * x;
  ASSERT_GT(raw.norm(), 0.5);
  EXPECT_NEAR(w.norm(), 0.5, 1e-12);
  EXPECT_LE((w - raw * (0.5 / raw.norm())).norm(), 1e-12);
}

TEST(SinusoidGenerator, TieBreakKeepsFirstCandidate) {
  const LinearSystem sys(MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 1), MatrixXd::Identity(2, 2));
  const CostWeights cw(MatrixXd::Zero(2, 2), MatrixXd::Identity(1, 1));
  auto gen = sinusoid_generator(sys, cw, 1.0, 50, SinusoidGrid::standard(), 3);
  EXPECT_EQ(gen->candidate_index(), 0);
  EXPECT_EQ(gen->frequency(), 0.0);
  EXPECT_EQ(gen->phase(), 0.0);
  EXPECT_EQ(gen->direction(), VectorXd::Unit(2, 0));
}

TEST(SinusoidGenerator, AmplitudeFollowsWaveform) {
  const Plant p = make_plant(6);
  const double W = 0.7;
  auto gen = sinusoid_generator(p.sys, p.cw, W, 200, SinusoidGrid::standard(), 6);
  for (int t = 0; t < 200; ++t) {
    const VectorXd w = gen->emit(VectorXd::Zero(4));
    gen->reveal(VectorXd::Zero(2), 0.0, VectorXd::Zero(4));
    EXPECT_NEAR(w.norm(), W * std::abs(std::sin(gen->frequency() * t + gen->phase())), 1e-12);
    EXPECT_LE(w.norm(), W * (1 + 1e-9));
  }
}

TEST(SinusoidGenerator, PicksResonantFrequencyOfOscillator) {
  for (int k : {2, 5, 9}) {
    const double theta = std::numbers::pi * k / 16 + 0.02;
    MatrixXd A(2, 2);
    A << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    const LinearSystem sys(0.97 * A, MatrixXd::Identity(2, 1), MatrixXd::Identity(2, 2));
    auto gen = sinusoid_generator(sys, CostWeights::identity(2, 1), 1.0, 400,
                                  SinusoidGrid::standard(), 7);
    EXPECT_NEAR(gen->frequency(), std::numbers::pi * k / 16, 1e-12) << k;
  }
}

TEST(SinusoidGrid, Standard) {
  const SinusoidGrid g = SinusoidGrid::standard();
  ASSERT_EQ(g.frequencies.size(), 17u);
  ASSERT_EQ(g.phases.size(), 8u);
  EXPECT_DOUBLE_EQ(g.frequencies.back(), std::numbers::pi);
  EXPECT_DOUBLE_EQ(g.phases[2], std::numbers::pi / 2);
}

TEST(GaussianGenerator, MeanNormAndDeterminism) {
  for (int d : {1, 2, 5}) {
    auto gen = gaussian_generator(d, 2.0, 11);
    double total = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      total += gen->emit(VectorXd::Zero(3)).norm();
      gen->reveal(VectorXd::Zero(1), 0.0, VectorXd::Zero(3));
    }
    EXPECT_NEAR(total / n, 1.05 * 2.0, 0.01 * 1.05 * 2.0) << d;
  }
  auto a = gaussian_generator(2, 1.0, 12), b = gaussian_generator(2, 1.0, 12);
  for (int i = 0; i < 10; ++i) {
    EXPECT_EQ(a->emit(VectorXd::Zero(1)), b->emit(VectorXd::Zero(1)));
    a->reveal(VectorXd::Zero(1), 0, VectorXd::Zero(1));
    b->reveal(VectorXd::Zero(1), 0, VectorXd::Zero(1));
  }
}

TEST(ExpectedGaussianNorm, KnownValues) {
  EXPECT_NEAR(expected_gaussian_norm(1), std::sqrt(2.0 / std::numbers::pi), 1e-14);
  EXPECT_NEAR(expected_gaussian_norm(2), std::sqrt(std::numbers::pi / 2.0), 1e-14);
}

TEST(RandomDirectionGenerator, FixedNormAndDeterminism) {
  auto a = random_direction_generator(3, 0.8, 13), b = random_direction_generator(3, 0.8, 13);
  for (int i = 0; i < 1000; ++i) {
    const VectorXd wa = a->emit(VectorXd::Zero(2)), wb = b->emit(VectorXd::Zero(2));
    EXPECT_NEAR(wa.norm(), 0.8, 1e-12);
    EXPECT_EQ(wa, wb);
    a->reveal(VectorXd::Zero(1), 0, VectorXd::Zero(2));
    b->reveal(VectorXd::Zero(1), 0, VectorXd::Zero(2));
  }
}

MotrConfig small_config(std::uint64_t seed, int T) {
  MotrConfig cfg;
  cfg.H = 3;
  cfg.D_M = 0.5;
  cfg.eta = 1.0;
  cfg.seed = seed;
  cfg.horizon = T;
  return cfg;
}

TEST(CdgGenerators, BudgetAndBallInvariants) {
  const Plant p = make_plant(20);
  for (BudgetMode mode : {BudgetMode::kClip, BudgetMode::kFixedNorm}) {
    MotrConfig cfg = small_config(20, 150);
    cfg.budget = mode;
    cfg.W_max = 0.6;
    for (int rule = 0; rule < 2; ++rule) {
      std::unique_ptr<CdgGenerator> gen =
          rule ? oga_generator(p.sys, p.cw, p.hinf, cfg) : motr_generator(p.sys, p.cw, p.hinf, cfg);
      GpcController gpc(p.sys, p.cw, p.lqr.K, GpcOptions{});
      VectorXd x = unit_x0(4);
      for (int t = 0; t < 150; ++t) {
        const VectorXd u = gpc.control(x);
        const VectorXd w = gen->emit(x);
        EXPECT_LE(w.norm(), 0.6 * (1 + 1e-9));
        if (mode == BudgetMode::kFixedNorm && w.norm() > 0) EXPECT_NEAR(w.norm(), 0.6, 1e-12);
        const VectorXd next = step(p.sys, x, u, w);
        gen->reveal(u, stage_cost(p.cw, x, u), next);
        gpc.observe(x, u, next);
        EXPECT_LE(gen->policy().frobenius_norm(), cfg.D_M * (1 + 1e-9));
        x = next;
      }
    }
  }
}

TEST(CdgGenerators, VanishingBallRecoversHinfGenerator) {
  const Plant p = make_plant(21);
  MotrConfig cfg = small_config(21, 100);
  cfg.D_M = 1e-8;
  cfg.budget = BudgetMode::kClip;
  cfg.W_max = 1e3;
  auto motr = motr_generator(p.sys, p.cw, p.hinf, cfg);
  auto hinf = hinf_generator(p.hinf, 1e3, BudgetMode::kClip);
  GpcController c1(p.sys, p.cw, p.lqr.K, GpcOptions{}), c2(p.sys, p.cw, p.lqr.K, GpcOptions{});
  const auto a = drive(p, c1, *motr, 100, unit_x0(4));
  const auto b = drive(p, c2, *hinf, 100, unit_x0(4));
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) worst = std::max(worst, (a[t] - b[t]).norm());
  EXPECT_LE(worst, 1e-6);
}

TEST(CdgGenerators, ZeroResidualAgainstHinfController) {
  const Plant p = make_plant(22);
  MotrConfig cfg = small_config(22, 100);
  cfg.budget = BudgetMode::kClip;
  cfg.W_max = 1e3;
  auto motr = motr_generator(p.sys, p.cw, p.hinf, cfg);
  auto ctrl = hinf_controller(p.hinf);
  VectorXd x = unit_x0(4);
  for (int t = 0; t < 100; ++t) {
    const VectorXd u = ctrl->control(x);
    const VectorXd w = motr->emit(x);
    EXPECT_LE((w - p.hinf.W * x).norm(), 1e-12 * std::max(1.0, x.norm()));
    const VectorXd next = step(p.sys, x, u, w);
    motr->reveal(u, stage_cost(p.cw, x, u), next);
    x = next;
  }
}

TEST(CdgGenerators, FrozenMotrAndOgaAreIdentical) {
  const Plant p = make_plant(23);
  MotrConfig cfg = small_config(23, 120);
  cfg.learning = false;
  auto motr = motr_generator(p.sys, p.cw, p.hinf, cfg);
  auto oga = oga_generator(p.sys, p.cw, p.hinf, cfg);
  GpcController c1(p.sys, p.cw, p.lqr.K, GpcOptions{}), c2(p.sys, p.cw, p.lqr.K, GpcOptions{});
  EXPECT_EQ(drive(p, c1, *motr, 120, unit_x0(4)), drive(p, c2, *oga, 120, unit_x0(4)));
}

TEST(CdgGenerators, ZeroStepOgaKeepsInitialPolicy) {
  const Plant p = make_plant(24);
  MotrConfig cfg = small_config(24, 60);
  cfg.oga_step = 0.0;
  auto oga = oga_generator(p.sys, p.cw, p.hinf, cfg);
  const VectorXd m0 = oga->policy().vectorize();
  GpcController c(p.sys, p.cw, p.lqr.K, GpcOptions{});
  drive(p, c, *oga, 60, unit_x0(4));
  EXPECT_EQ(oga->policy().vectorize(), m0);
}

TEST(CdgGenerators, Deterministic) {
  const Plant p = make_plant(25);
  const MotrConfig cfg = small_config(25, 80);
  auto a = motr_generator(p.sys, p.cw, p.hinf, cfg), b = motr_generator(p.sys, p.cw, p.hinf, cfg);
  LinearFeedbackController c1("LQR", p.lqr.K), c2("LQR", p.lqr.K);
  EXPECT_EQ(drive(p, c1, *a, 80, unit_x0(4)), drive(p, c2, *b, 80, unit_x0(4)));
}

TEST(CdgGenerators, RawControlModeNeedsStablePlant) {
  const LinearSystem sys = random_system(4, 2, 2, 26, 1.2);
  const CostWeights cw = CostWeights::identity(4, 2);
  const HinfSolution h = hinf_bisection(sys, cw, 1e-3, 1e6);
  MotrConfig cfg = small_config(26, 50);
  cfg.residual_bias = false;
  EXPECT_THROW(motr_generator(sys, cw, h, cfg), DomainError);
}

TEST(CdgGenerators, AuditMatchesRecordedHistory) {
  const Plant p = make_plant(27);
  MotrConfig cfg = small_config(27, 100);
  cfg.record_history = true;
  auto motr = motr_generator(p.sys, p.cw, p.hinf, cfg);
  GpcController c(p.sys, p.cw, p.lqr.K, GpcOptions{});
  drive(p, c, *motr, 100, unit_x0(4));
  ASSERT_EQ(motr->history().size(), 100u);
  ASSERT_EQ(motr->plays().size(), 100u);
  const RegretAudit audit = *motr->regret_pair();
  EXPECT_GE(audit.regret(), -1e-6 * std::max(1.0, std::abs(audit.hindsight)));
}

TEST(CdgGenerators, RegretPerRoundShrinksWithHorizon) {
  // Averaged over seeds and fixed systems to smooth single-run noise.
  double short_rate = 0.0, long_rate = 0.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Plant p = make_plant(30 + s);
    for (int T : {100, 800}) {
      MotrConfig cfg = small_config(100 + s, T);
      cfg.eta = 0.0;
      auto motr = motr_generator(p.sys, p.cw, p.hinf, cfg);
      GpcController c(p.sys, p.cw, p.lqr.K, GpcOptions{.horizon = T});
      drive(p, c, *motr, T, unit_x0(4));
      const double rate = motr->regret_pair()->regret() / T;
      (T == 100 ? short_rate : long_rate) += rate / 3;
    }
  }
  EXPECT_LT(long_rate, short_rate);
}

}  // namespace
}  // namespace motr
