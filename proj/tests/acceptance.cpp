/*
 Copyright 2026 The horizon-pmp Authors

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

// Acceptance checks. Prints one line per criterion and exits nonzero when any fails.
// Usage: acceptance [scratch-dir]

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "horizon_pmp/cauchy.hpp"
#include "horizon_pmp/cli.hpp"
#include "horizon_pmp/errors.hpp"
#include "horizon_pmp/expr.hpp"
#include "horizon_pmp/io.hpp"
#include "horizon_pmp/pmp.hpp"
#include "horizon_pmp/transversality.hpp"
#include "unit/helpers.hpp"

using namespace hpmp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

const Vector kNoShift = Vector::Zero(1);

struct CauchyRun {
  Benchmark b;
  AccumulatedIntegral acc;
  ConvergenceVerdict verdict;
  CauchyAdjoint adj;
};

CauchyRun cauchy_run(const std::string& name) {
  auto b = benchmark(name);
  auto acc = accumulate(b.problem, b.reference, kNoShift, 128.0);
  auto v = classify_convergence(acc);
  if (v.kind != ConvergenceVerdict::Kind::Converged)
    throw PreconditionError(fmt::format("{}: accumulated integral {}", name, to_string(v.kind)));
  auto adj = cauchy_adjoint(b.problem, b.reference, acc, v, 64.0);
  return {std::move(b), std::move(acc), std::move(v), std::move(adj)};
}

Outcome cauchy_oracle() {
  const auto r = cauchy_run("scalar-exp");
  double err = 0.0;
  for (int k = 0; k <= 20 * 64; ++k) {
    const double t = k / 64.0;
    err = std::max(err, std::abs(r.adj.psi_unit(t)[0] - std::exp(-t)));
  }
  const double lerr = std::abs(r.adj.lambda - 0.5);
  return {err <= 1e-6 && lerr <= 1e-8, fmt::format("max |psi - e^-T| = {:.2e} on [0,20], lambda = {:.12f}", err,
                                                   r.adj.lambda)};
}

Outcome halkin_separation() {
  const auto r = cauchy_run("halkin");
  double err = 0.0;
  for (int k = 0; k <= 64 * 8; ++k) err = std::max(err, std::abs(r.adj.psi(k / 8.0)[0] + 0.5));
  const auto rep = run_battery(r.b.problem, prepare_battery(r.b.problem, r.b.reference));
  const auto* trans = rep.find("trans");
  const auto* lim = rep.find("lim");
  const bool verdicts = trans && lim && trans->verdict == Verdict::Fails && lim->verdict == Verdict::Holds;
  return {err <= 1e-6 && std::abs(r.adj.lambda - 0.5) <= 1e-6 && verdicts,
          fmt::format("lambda = {:.9f}, max |psi + 0.5| = {:.2e}, {}", r.adj.lambda, err, rep.summary_line())};
}

Outcome truncation_convergence() {
  const auto b = benchmark("scalar-exp");
  const auto oracle = cauchy_run("scalar-exp").adj.psi(0.0)[0];
  const std::vector<double> taus{5, 10, 20, 40};
  const auto run = run_truncation(b.problem, b.reference, taus);
  std::vector<double> gaps;
  double residual = 0.0;
  bool endpoint = true;
  for (const auto& s : run.steps) {
    if (!s.error.empty()) return {false, fmt::format("tau = {}: {}", s.tau, s.error)};
    const auto& psi = s.extremal.psi;
    gaps.push_back(std::abs(psi(0.0)[0] - oracle));
    endpoint = endpoint && psi.value(psi.size() - 1).cwiseAbs().maxCoeff() == 0.0;
    residual = std::max(residual, s.extremal.max_residual);
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < gaps.size(); ++i) decreasing = decreasing && gaps[i] < gaps[i - 1];
  return {decreasing && gaps.back() <= 1e-3 && endpoint && residual <= 1e-6,
          fmt::format("|psi_n(0) - psi_cauchy(0)| = {:.2e}, {:.2e}, {:.2e}, {:.2e}; max residual {:.2e}", gaps[0],
                      gaps[1], gaps[2], gaps[3], residual)};
}

Outcome product_identity() {
  double worst = 0.0;
  for (const auto& name : builtin_names()) {
    const auto r = cauchy_run(name);
    worst = std::max(worst, verify_product_identity(r.adj.psi, r.adj.lambda, r.acc, r.verdict.limit));
  }
  return {worst <= 1e-6, fmt::format("worst sup deviation over {} builtins = {:.2e}", builtin_names().size(), worst)};
}

Outcome adjoint_ode() {
  constexpr double kDelta = 1.0 / 1024;
  double worst = 0.0;
  for (const auto& name : builtin_names()) {
    const auto r = cauchy_run(name);
    const auto& p = r.b.problem;
    const auto& psi = r.adj.psi;
    for (double t = 1.0 / 64; t + kDelta <= psi.span().end; t += 1.0 / 8) {
      const Vector x = r.acc.x.value()(t);
      const Vector u = r.b.reference.value(t, x);
      const Vector slope = (psi(t + kDelta) - psi(t - kDelta)) / (2 * kDelta);
      const Vector rhs = -(p.state_jacobian(t, x, u).transpose() * psi(t) +
                           r.adj.lambda * p.payoff_gradient(t, x, u).transpose());
      worst = std::max(worst, (slope - rhs).norm());
    }
  }
  return {worst <= 1e-5, fmt::format("worst midpoint residual = {:.2e}", worst)};
}

Outcome monotone_case() {
  const auto b = benchmark("monotone-growth");
  const auto rep = run_battery(b.problem, prepare_battery(b.problem, b.reference));
  if (!rep.monotone) return {false, "monotone analysis missing"};
  const auto& m = *rep.monotone;
  const bool ok = m.hypotheses_hold() && m.psi_min_component >= -1e-8 && m.sandwich_holds.value_or(false);
  return {ok, fmt::format("hypotheses {}, min psi component = {:.4g}, sandwich {}", m.hypotheses_hold(),
                          m.psi_min_component, m.sandwich_holds.value_or(false))};
}

Outcome numerics_hygiene() {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> point(-1.0, 1.0);
  double dual_err = 0.0;
  for (int n = 0; n < 20; ++n) {
    const auto e = parse(test::random_expr(rng, 3), test::kExprSymbols);
    std::vector<double> v{point(rng), point(rng), point(rng)};
    for (std::size_t s = 0; s < 3; ++s) {
      const double h = 1e-6;
      auto vp = v, vm = v;
      vp[s] += h;
      vm[s] -= h;
      const double fd = (e.eval(vp) - e.eval(vm)) / (2 * h);
      const double d = e.eval_dual(v, s).derivative;
      dual_err = std::max(dual_err, std::abs(d - fd) / std::max(1.0, std::abs(d)));
    }
  }

  const auto zero = ReferenceControl::constant(Vector::Zero(1));
  std::mt19937_64 mrng(11);
  std::uniform_real_distribution<double> entry(-0.5, 0.5);
  double liouville = 0.0;
  for (int n = 0; n < 5; ++n) {
    Matrix M(3, 3);
    for (Eigen::Index i = 0; i < 9; ++i) M.data()[i] = entry(mrng);
    const auto p = test::linear_problem(M);
    const auto x = integrate_state(p, zero, p.x0(), {0.0, 2.0});
    const auto A = fundamental_matrix(p, zero, x, {0.0, 2.0});
    const double det = A.value(A.size() - 1).determinant();
    liouville = std::max(liouville, std::abs(std::log(std::abs(det)) - 2.0 * M.trace()));
  }

  Matrix M(2, 2);
  M << -0.4, 0.3, -0.2, 0.1;
  const auto p = test::linear_problem(M, "0").with_x0(test::vec({1.0, -0.5}));
  const auto x = integrate_state(p, zero, p.x0(), {0.0, 4.0});
  const auto full = fundamental_matrix(p, zero, x, {0.0, 4.0});
  const auto head = fundamental_matrix(p, zero, x, {0.0, 1.5});
  const auto tail = fundamental_matrix(p, zero, x, {1.5, 4.0});
  const double cocycle = (full(3.75) - tail(3.75) * head(1.5)).norm();

  return {dual_err <= 1e-6 && liouville <= 1e-6 && cocycle <= 1e-7,
          fmt::format("dual vs FD {:.2e}, Liouville {:.2e}, cocycle {:.2e}", dual_err, liouville, cocycle)};
}

Outcome lyapunov() {
  Matrix M = Matrix::Zero(2, 2);
  M(0, 0) = -1.0;
  M(1, 1) = -2.0;
  const auto zero = ReferenceControl::constant(Vector::Zero(1));
  const auto p = test::linear_problem(M);
  const auto x = integrate_state(p, zero, p.x0(), {0.0, 40.0});
  const auto ex = lyapunov_exponents(fundamental_matrix(p, zero, x, {0.0, 40.0}));
  const bool ok = ex.size() == 2 && std::abs(ex[0] - 2.0) <= 0.05 && std::abs(ex[1] - 1.0) <= 0.05;
  return {ok, fmt::format("adjoint-flow exponents {{{:.6f}, {:.6f}}}", ex.at(0), ex.at(1))};
}

Outcome dominance() {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> noise(-0.01, 0.01);
  DominanceSample s, flat;
  for (double t = 0.0; t <= 40.0; t += 0.25) {
    s.t.push_back(t);
    s.product.push_back(3.0 * std::exp(-0.7 * t) * (1.0 + noise(rng)));
    flat.t.push_back(t);
    flat.product.push_back(0.8);
  }
  const auto fit = fit_exponential_dominance({s});
  const auto c = fit_exponential_dominance({flat});
  const double ea = std::abs(fit.alpha / 0.7 - 1.0), eb = std::abs(fit.beta / 3.0 - 1.0);
  return {fit.holds && ea <= 0.05 && eb <= 0.05 && !c.holds,
          fmt::format("alpha rel err {:.2e}, beta rel err {:.2e}, constant product {}", ea, eb,
                      c.holds ? "holds" : "fails")};
}

Outcome determinism(const fs::path& scratch) {
  std::vector<fs::path> dirs{scratch / "run_a", scratch / "run_b"};
  for (const auto& d : dirs) {
    fs::remove_all(d);
    const std::vector<std::string> args{"horizon-pmp", "solve", "--builtin", "halkin", "--seed", "7",
                                        "--out", d.string()};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != kExitOk) return {false, fmt::format("solve exited {}: {}", code, err.str())};
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    if (entry.path().extension() != ".csv") continue;
    ++files;
    const auto other = dirs[1] / entry.path().filename();
    if (!fs::exists(other) || read_file(entry.path()) != read_file(other))
      return {false, fmt::format("{} differs", entry.path().filename().string())};
  }
  return {files >= 3, fmt::format("{} CSV files byte-identical", files)};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path scratch = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "hpmp-acceptance";
  fs::create_directories(scratch);

  const std::vector<std::function<Outcome()>> criteria{
      cauchy_oracle, halkin_separation, truncation_convergence, product_identity, adjoint_ode,
      monotone_case, numerics_hygiene,  lyapunov,               dominance,        [&] { return determinism(scratch); }};

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::cout << fmt::format("criterion {}: {} - {} ({:.2f} s)\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail, secs);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed),
                           criteria.size());
  return failed == 0 ? 0 : 1;
}
