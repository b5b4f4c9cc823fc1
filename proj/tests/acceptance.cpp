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
// Acceptance runner: one PASS/FAIL line per criterion. Every suite writes a
// JSONL file under --out; the determinism criterion reruns all suites and
// compares the bytes.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "cdg_oracles.hpp"
#include "motr/bench.hpp"
#include "motr/cdg.hpp"
#include "motr/controllers.hpp"
#include "motr/lds_core.hpp"
#include "motr/online_learner.hpp"
#include "motr/serialization.hpp"
#include "motr/trust_region.hpp"
#include "otr_scenario.hpp"
#include "test_util.hpp"

namespace {

using namespace motr;
using motr::testing::normal_matrix;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
  std::string jsonl;
};

class Lines {
 public:
  void add(const Json& j) { out_ += j.dump() + "\n"; }
  std::string str() const { return out_; }

 private:
  std::string out_;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// ---- 1: trust-region solver vs brute force ----
Outcome trust_region_suite() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double radii[] = {0.5, 1.0, 2.0};
  Lines lines;
  double worst_gap = -1e300, worst_kkt = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int d = 1 + k % 3;
    MatrixXd P(d, d);
    VectorXd p(d);
    for (int i = 0; i < d; ++i) {
      p(i) = U(rng);
      for (int j = 0; j < d; ++j) P(i, j) = U(rng);
    }
    const TrustRegionProblem prob(P, p, radii[(k / 3) % 3]);
    const TrustRegionSolution sol = solve(prob, 1e-10);
    const TrustRegionSolution bf = brute_force(prob, 20000);
    const double gap = bf.value - sol.value;
    const double kkt = kkt_residual(prob, sol);
    worst_gap = std::max(worst_gap, gap);
    worst_kkt = std::max(worst_kkt, kkt);
    lines.add({{"instance", k}, {"d", d}, {"D", prob.D}, {"solve", sol.value},
               {"brute_force", bf.value}, {"kkt", kkt}, {"hard_case", sol.hard_case}});
  }
  const bool pass = worst_gap <= 1e-4 && worst_kkt <= 1e-6;
  return {pass, "max(brute - solve) = " + fmt(worst_gap) + ", max KKT = " + fmt(worst_kkt),
          lines.str()};
}

// ---- 2: transfer expansion vs direct simulation ----
Outcome calibration_suite() {
  std::mt19937_64 rng(202);
  Lines lines;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const int H = 1 + k % 6;
    const int dx = 2 + k % 4, du = 1 + k % 3, dw = 1 + (k / 3) % 3;
    const LinearSystem sys = random_system(dx, du, dw, 2000 + k, 0.5 + 0.004 * k);
    std::vector<CdgPolicy> pols;
    for (int j = 0; j <= H; ++j) pols.push_back(motr::testing::random_policy(H, dw, du, 0.7, rng));
    const auto u = motr::testing::random_controls(2 * H + 1, du, rng);
    // Warm-up run supplies x_{t-H}.
    VectorXd x_past = VectorXd::Zero(dx);
    for (int s = 0; s < 10; ++s)
      x_past = step(sys, x_past, normal_matrix(du, 1, rng), normal_matrix(dw, 1, rng));
    const VectorXd got = unrolled_state(sys, x_past, transfer_stack(sys, pols), u);
    const VectorXd want = motr::testing::simulate_window(sys, x_past, pols, u);
    const double rel = (got - want).norm() / std::max(1e-300, want.norm());
    worst = std::max(worst, rel);
    lines.add({{"case", k}, {"H", H}, {"relative_error", rel}});
  }
  return {worst <= 1e-9, "max relative error = " + fmt(worst), lines.str()};
}

// ---- 3 and 5: closed-form coefficients ----
struct GtTriple {
  LinearSystem sys;
  CostWeights cw;
  std::vector<VectorXd> window;
  VectorXd current;
  std::vector<VectorXd> biases;
  int H;
};

std::vector<GtTriple> gt_triples() {
  std::mt19937_64 rng(303);
  std::vector<GtTriple> out;
  for (int k = 0; k < 50; ++k) {
    const int H = 1 + k % 4;
    const int dx = 2 + k % 3, du = 1 + k % 2, dw = 1 + (k / 2) % 2;
    LinearSystem sys = random_system(dx, du, dw, 3000 + k, 0.6 + 0.006 * k);
    const MatrixXd L = normal_matrix(dx, dx, rng);
    CostWeights cw(L * L.transpose() / dx, MatrixXd::Identity(du, du));
    std::vector<VectorXd> biases;
    for (int j = 0; j <= H; ++j) biases.push_back(normal_matrix(dw, 1, rng));
    out.push_back({std::move(sys), std::move(cw),
                   motr::testing::random_controls(2 * H + 1, du, rng),
                   normal_matrix(du, 1, rng), std::move(biases), H});
  }
  return out;
}

Outcome closed_form_suite() {
  std::mt19937_64 rng(304);
  Lines lines;
  double worst_eval = 0.0, worst_grad = 0.0, worst_hess = 0.0;
  for (const auto& c : gt_triples()) {
    const int dw = c.sys.disturbance_dim(), du = c.sys.control_dim();
    const int n = c.H * dw * du;
    const GtQuadratic gq =
        gt_quadratic(c.sys, c.cw, c.window, c.current, c.H, bias_contribution(c.sys, c.biases));
    const CdgPolicy pol = motr::testing::random_policy(c.H, dw, du, 0.5, rng);
    const double direct =
        motr::testing::rollout_gt(c.sys, c.cw, c.window, c.current, pol, c.biases);
    const double eval_err = motr::testing::relative_error(gq.evaluate(pol.vectorize()), direct);

    auto g = [&](const VectorXd& m) {
      return motr::testing::rollout_gt(c.sys, c.cw, c.window, c.current,
                                       CdgPolicy::from_vector(m, c.H, dw, du, VectorXd::Zero(dw)),
                                       c.biases);
    };
    const auto [hess, grad] = hessian_gradient_at_zero(gq);
    const double h = 1e-4;
    double grad_err = 0.0, hess_err = 0.0;
    for (int i = 0; i < n; ++i) {
      const VectorXd ei = VectorXd::Unit(n, i) * h;
      grad_err = std::max(grad_err, std::abs((g(ei) - g(-ei)) / (2 * h) - grad(i)));
      for (int j = 0; j < n; ++j) {
        const VectorXd ej = VectorXd::Unit(n, j) * h;
        const double fd = (g(ei + ej) - g(ei - ej) - g(-ei + ej) + g(-ei - ej)) / (4 * h * h);
        hess_err = std::max(hess_err, std::abs(fd - hess(i, j)));
      }
    }
    grad_err /= std::max(1.0, grad.cwiseAbs().maxCoeff());
    hess_err /= std::max(1.0, hess.cwiseAbs().maxCoeff());
    worst_eval = std::max(worst_eval, eval_err);
    worst_grad = std::max(worst_grad, grad_err);
    worst_hess = std::max(worst_hess, hess_err);
    lines.add({{"H", c.H}, {"closed_form", gq.evaluate(pol.vectorize())}, {"rollout", direct},
               {"eval_rel", eval_err}, {"grad_rel", grad_err}, {"hess_rel", hess_err}});
  }
  const bool pass = worst_eval <= 1e-8 && worst_grad <= 1e-4 && worst_hess <= 1e-4;
  return {pass,
          "eval " + fmt(worst_eval) + ", gradient " + fmt(worst_grad) + ", Hessian " +
              fmt(worst_hess),
          lines.str()};
}

Outcome coefficient_bound_suite() {
  Lines lines;
  double worst_P = 0.0, worst_p = 0.0;
  int violations = 0;
  for (const auto& c : gt_triples()) {
    // The bound covers the control-driven coefficients; biases are off.
    const GtQuadratic gq = gt_quadratic(c.sys, c.cw, c.window, c.current, c.H,
                                        VectorXd::Zero(c.sys.state_dim()));
    const StabilityReport rep = analyze_stability(c.sys);
    double cu = 0.0;
    for (const auto& u : c.window) cu = std::max(cu, u.norm());
    const double bound_P = c.cw.xi() * cu * cu * rep.kappa * rep.kappa;
    const double bound_p = bound_P * rep.beta;
    const double maxP = gq.P.cwiseAbs().maxCoeff(), maxp = gq.p.cwiseAbs().maxCoeff();
    worst_P = std::max(worst_P, maxP / bound_P);
    worst_p = std::max(worst_p, maxp / bound_p);
    if (maxP > bound_P || maxp > bound_p) ++violations;
    lines.add({{"H", c.H}, {"max_P", maxP}, {"bound_P", bound_P}, {"max_p", maxp},
               {"bound_p", bound_p}, {"kappa", rep.kappa}, {"beta", rep.beta},
               {"gamma", rep.gamma}});
  }
  return {violations == 0,
          "worst |P|/bound = " + fmt(worst_P) + ", worst |p|/bound = " + fmt(worst_p) + ", " +
              std::to_string(violations) + "/50 runs over",
          lines.str()};
}

// ---- 4: truncation error of the approximate cost ----
Outcome approximation_suite() {
  std::mt19937_64 rng(404);
  Lines lines;
  const int T = 200;
  const double D = 1.0;
  double worst_ratio = 0.0;
  for (int k = 0; k < 20; ++k) {
    const LinearSystem sys = random_system(4, 2, 2, 4000 + k, 0.8);
    const CostWeights cw = CostWeights::identity(4, 2);
    const StabilityReport rep = analyze_stability(sys);
    const int H = horizon_H(rep.kappa, rep.gamma, cw.xi(), T);
    const CdgPolicy pol = motr::testing::random_policy(H, 2, 2, 1.0, rng);
    const double scale = D / pol.frobenius_norm();
    std::vector<MatrixXd> blocks;
    for (const auto& b : pol.blocks()) blocks.push_back(b * scale);
    const CdgPolicy M(blocks, VectorXd::Zero(2));

    // Exogenous controls in the unit ball, zero before t = 0.
    std::vector<VectorXd> u(T + 1);
    double cu = 0.0;
    for (auto& v : u) {
      v = motr::testing::uniform_vector(2, rng);
      if (v.norm() > 1.0) v /= v.norm();
      cu = std::max(cu, v.norm());
    }
    auto u_at = [&](int s) { return s < 0 ? VectorXd::Zero(2) : u[s]; };
    const double C_x = 2.0 * rep.beta * H * D * cu / rep.gamma;

    VectorXd x = VectorXd::Zero(4);
    const std::vector<CdgPolicy> pols(H + 1, M);
    double worst = 0.0;
    for (int t = 0; t < T; ++t) {
      if (t >= 1) {
        std::vector<VectorXd> window;
        for (int i = 0; i <= 2 * H; ++i) window.push_back(u_at(t - 1 - i));
        const VectorXd y = approx_state(sys, pols, window);
        worst = std::max(worst, std::abs(stage_cost(cw, x, u[t]) - approx_cost(cw, y, u[t])));
      }
      std::vector<VectorXd> past;
      for (int i = 1; i <= H; ++i) past.push_back(u_at(t - i));
      x = step(sys, x, u[t], disturbance(M, past, x, false));
    }
    const double ratio = worst / (C_x / T);
    worst_ratio = std::max(worst_ratio, ratio);
    lines.add({{"run", k}, {"H", H}, {"kappa", rep.kappa}, {"gamma", rep.gamma},
               {"max_gap", worst}, {"bound", C_x / T}});
  }
  return {worst_ratio <= 1.0, "worst gap / (C_x/T) = " + fmt(worst_ratio), lines.str()};
}

// ---- 6: online trust region regret ----
Outcome otr_regret_suite() {
  const std::vector<int> grid{250, 500, 1000, 2000, 4000};
  const motr::testing::OtrScenario sc;  // d = 4, H = 3, zero-mean i.i.d. coefficients
  Lines lines;
  std::vector<double> Ts, regrets;
  for (int T : grid) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto run = motr::testing::run_otr_scenario(sc, T, seed);
      total += run.audit.regret();
    }
    Ts.push_back(T);
    regrets.push_back(total / 10);
    lines.add({{"T", T}, {"regret", total / 10}, {"regret_per_T", total / 10 / T}});
  }
  const double slope = loglog_slope(Ts, regrets);
  bool decreasing = true;
  for (std::size_t i = 1; i < grid.size(); ++i)
    decreasing = decreasing && regrets[i] / Ts[i] < regrets[i - 1] / Ts[i - 1];
  lines.add({{"slope", slope}});
  return {slope <= 0.65 && decreasing,
          "log-log slope = " + fmt(slope) + ", regret/T decreasing = " +
              (decreasing ? "yes" : "no"),
          lines.str()};
}

// ---- 7: H-infinity synthesis ----
Outcome hinf_suite() {
  Lines lines;
  double worst_gain = 0.0;
  bool ok = true;
  for (int k = 0; k < 10; ++k) {
    const LinearSystem sys = random_system(4, 2, 2, 7000 + k);
    const CostWeights cw = CostWeights::identity(4, 2);
    const LqrSolution lqr = solve_dare(sys, cw);
    const auto game = solve_hinf_game(sys, cw, 1e6);
    const double gain = game ? (game->K - lqr.K).cwiseAbs().maxCoeff() : 1e300;
    const HinfSolution h = hinf_bisection(sys, cw, 1e-3, 1e6);
    const bool feasible = solve_hinf_game(sys, cw, h.gamma_star).has_value();
    const double rho = spectral_radius(sys.A() - sys.B() * h.K + sys.C() * h.W);
    worst_gain = std::max(worst_gain, gain);
    ok = ok && feasible && rho < 1.0;
    lines.add({{"system", k}, {"gain_gap", gain}, {"gamma_star", h.gamma_star},
               {"feasible", feasible}, {"closed_loop_radius", rho}});
  }
  return {ok && worst_gain <= 1e-6,
          "max |K_game - K_lqr| = " + fmt(worst_gain) + ", all bisected solutions " +
              (ok ? "feasible and stable" : "NOT feasible and stable"),
          lines.str()};
}

// ---- 8: benchmark table ----
Outcome benchmark_suite() {
  ExperimentConfig cfg;
  cfg.materialize();
  cfg.validate();
  const GridResult grid = run_grid(cfg, 1);
  std::string jsonl;
  for (const auto& r : grid.records) jsonl += record_to_json(r).dump() + "\n";
  if (!grid.failures.empty()) {
    return {false, std::to_string(grid.failures.size()) + " episode(s) failed", jsonl};
  }
  const AggregateTable t = normalize_scores(grid.records);
  jsonl += table_csv(t, true);

  auto r = [&](const char* c, const char* g) { return t.at(c, g).ratio_mean; };
  const bool a = r("Hinf", "MOTR") >= 0.95 * r("Hinf", "Hinf");
  bool b = true;
  std::string b_detail;
  for (const char* c : {"LQR", "GPC"}) {
    double worst = 1e300;
    for (const char* g : {"Random", "Sinusoid", "Gaussian"}) worst = std::min(worst, r(c, "MOTR") / r(c, g));
    b = b && worst >= 1.2;
    b_detail += std::string(c) + " min ratio " + fmt(worst) + " ";
  }
  // Tied: within one standard error of the difference to the column best.
  double best = 0.0, best_std = 0.0;
  for (const auto& g : t.generators) {
    if (t.at("Hinf", g).ratio_mean > best) {
      best = t.at("Hinf", g).ratio_mean;
      best_std = t.at("Hinf", g).ratio_std;
    }
  }
  const auto& hh = t.at("Hinf", "Hinf");
  const double se = std::sqrt(best_std * best_std + hh.ratio_std * hh.ratio_std) /
                    std::sqrt(double(t.n_systems));
  const bool c = best - hh.ratio_mean <= std::max(1e-12, se);
  return {a && b && c,
          "(a) Hinf ctrl: MOTR " + fmt(r("Hinf", "MOTR")) + " vs Hinf gen " +
              fmt(r("Hinf", "Hinf")) + "; (b) " + b_detail + "; (c) Hinf gen " +
              fmt(hh.ratio_mean) + " vs best " + fmt(best),
          jsonl};
}

struct Suite {
  int criterion;
  std::string name;
  double time_limit;  // seconds
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria runner"};
  std::string out = "acceptance_out";
  app.add_option("--out", out, "Directory for the per-suite JSONL outputs");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out);

  // Criterion 5 reuses the runs of criterion 3 and shares its time budget.
  const std::vector<Suite> suites{
      {1, "trust_region", 5, trust_region_suite},
      {2, "calibration", 10, calibration_suite},
      {3, "closed_form", 30, closed_form_suite},
      {4, "approximation", 30, approximation_suite},
      {5, "coefficient_bounds", 30, coefficient_bound_suite},
      {6, "otr_regret", 300, otr_regret_suite},
      {7, "hinf", 60, hinf_suite},
      {8, "benchmark", 1200, benchmark_suite},
  };

  bool all = true;
  std::vector<std::string> first;
  for (const auto& s : suites) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = s.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), ""};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream(fs::path(out) / (s.name + ".jsonl"), std::ios::binary) << o.jsonl;
    first.push_back(o.jsonl);
    const bool pass = o.pass && secs < s.time_limit;
    all = all && pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << s.criterion << " (" << s.name
              << "): " << o.detail << " [" << fmt(secs) << " s, limit " << s.time_limit
              << " s]" << std::endl;
  }

  std::vector<std::string> differing;
  for (std::size_t i = 0; i < suites.size(); ++i) {
    std::string again;
    try {
      again = suites[i].run().jsonl;
    } catch (const std::exception&) {
      again = "<exception>";
    }
    std::ofstream(fs::path(out) / (suites[i].name + ".rerun.jsonl"), std::ios::binary) << again;
    if (again != first[i] || first[i].empty()) differing.push_back(suites[i].name);
  }
  const bool det = differing.empty();
  all = all && det;
  std::string detail = det ? "all 8 suites byte-identical on rerun" : "differs:";
  for (const auto& d : differing) detail += " " + d;
  std::cout << (det ? "PASS" : "FAIL") << " criterion 9 (determinism): " << detail
            << std::endl;
  return all ? 0 : 1;
}
