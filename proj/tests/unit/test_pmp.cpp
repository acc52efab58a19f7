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

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "horizon_pmp/errors.hpp"
#include "horizon_pmp/pmp.hpp"

using namespace hpmp;
using hpmp::test::scalar;
using hpmp::test::scalar_problem;
using hpmp::test::vec;

namespace {

const auto kOne = ReferenceControl::constant(scalar(1.0));

double closed_form_psi0(double tau) { return (1.0 - std::exp(-tau)) / (2.0 - std::exp(-tau)); }

}  // namespace

TEST_SUITE("pmp") {
  TEST_CASE("hamiltonian") {
    const auto h = builtin("halkin");
    CHECK(hamiltonian(h, scalar(0.4), 1.0, scalar(0.7), 0.0, scalar(0.0)) == 0.0);
    CHECK(hamiltonian(h, scalar(0.0), 0.0, scalar(1.0), 0.5, scalar(-0.5)) == 0.0);
    const auto p = scalar_problem("u1", "exp(-t)*(u1 - x1^2)");
    CHECK(hamiltonian(p, scalar(0.0), 0.0, scalar(1.0), 1.0, scalar(1.0)) == doctest::Approx(2.0));
  }

  TEST_CASE("pointwise maximization") {
    const auto lin = scalar_problem("u1", "0");
    CHECK(maximize_hamiltonian(lin, scalar(0), 0.0, 0.0, scalar(1.0)).u[0] == 1.0);
    const auto quad = scalar_problem("0*u1", "-(u1 - 0.3)^2", -1.0, 1.0);
    const auto q = maximize_hamiltonian(quad, scalar(0), 0.0, 1.0, scalar(0.0));
    CHECK(std::abs(q.u[0] - 0.3) <= 1e-6);
    CHECK(std::abs(q.value) <= 1e-12);
    const auto fin = ControlProblem::from_strings(1, 1, {"(1-x1)*u1"}, "(1-x1)*u1",
                                                  ControlSet::finite({scalar(1.0), scalar(0.0)}));
    CHECK(maximize_hamiltonian(fin, scalar(0), 0.0, 0.5, scalar(-0.5)).u[0] == 0.0);
  }

  TEST_CASE("normalization") {
    DenseSolution s;
    s.t = {0.0, 1.0};
    s.y = {scalar(1.0), scalar(1.0)};
    s.dleft = s.dright = {scalar(0.0), scalar(0.0)};
    AdjointArc a(s);
    const auto m = normalize(1.0, a);
    CHECK(m.lambda == 0.5);
    CHECK(a(0.0)[0] == 0.5);

    DenseSolution s2;
    s2.t = {0.0, 1.0};
    s2.y = {vec({3.0, 4.0}), vec({3.0, 4.0})};
    s2.dleft = s2.dright = {vec({0.0, 0.0}), vec({0.0, 0.0})};
    AdjointArc b(s2);
    const auto m2 = normalize(0.0, b);
    CHECK(m2.lambda == 0.0);
    CHECK(std::abs(b(0.0).norm() - 1.0) <= 1e-15);

    DenseSolution s3 = s;
    s3.y = {scalar(0.0), scalar(0.0)};
    AdjointArc c(s3);
    CHECK_THROWS_AS((void)normalize(0.0, c), PreconditionError);
  }

  TEST_CASE("finite horizon sweep matches the closed form") {
    const auto p = builtin("scalar-exp");
    const auto e = solve_finite_horizon(p, 20.0, 0.0, {}, kOne);
    CHECK(e.converged);
    CHECK(std::abs(e.psi(0.0)[0] - closed_form_psi0(20.0)) <= 1e-4);
    CHECK(std::abs(e.lambda - (1.0 - closed_form_psi0(20.0))) <= 1e-4);
    CHECK(e.psi(20.0)[0] == 0.0);
    CHECK(std::abs(e.lambda + e.psi(0.0).norm() - 1.0) <= 1e-9);
    CHECK(e.lambda >= 0.0);
    CHECK(e.lambda <= 1.0);
    CHECK(e.max_residual <= 1e-6);
    for (std::size_t i = 1; i < e.objective_history.size(); ++i)
      CHECK(e.objective_history[i] >= e.objective_history[i - 1] - 1e-10);
  }

  TEST_CASE("residual detects a perturbed control") {
    const auto p = builtin("scalar-exp");
    auto e = solve_finite_horizon(p, 10.0, 0.0, {}, kOne);
    CHECK(max_residual(p, e, e.grid) <= 1e-6);
    std::vector<Vector> bumped;
    for (const auto& v : e.values) bumped.push_back(scalar(std::min(2.0, v[0] + 0.1)));
    e.u = ReferenceControl::piecewise_constant(e.grid, bumped);
    CHECK(max_residual(p, e, e.grid) > 1e-3);

    const auto flat = scalar_problem("0*u1", "0*u1");
    auto z = solve_finite_horizon(flat, 5.0, 0.0, {}, kOne);
    z.lambda = 0.0;
    z.psi.scale(0.0);
    CHECK(max_residual(flat, z, z.grid) == 0.0);
  }

  TEST_CASE("control-free problems converge at once") {
    const auto p = scalar_problem("-x1 + 0*u1", "exp(-t)*x1 + 0*u1", 0.0, 1.0, 1.0);
    const auto e = solve_finite_horizon(p, 5.0, 0.0, {}, kOne);
    CHECK(e.converged);
    CHECK(e.iterations == 1);
  }

  TEST_CASE("a heavy penalty pins the reference") {
    const auto p = builtin("scalar-exp");
    const DeviationWeight w(kOne);
    const auto e = solve_finite_horizon(p, 20.0, 10.0, w, ReferenceControl::constant(scalar(0.5)));
    double l1 = 0.0;
    for (std::size_t i = 0; i < e.values.size(); ++i) {
      const double right = i + 1 < e.grid.size() ? e.grid[i + 1] : e.horizon;
      l1 += std::abs(e.values[i][0] - 1.0) * (right - e.grid[i]);
    }
    CHECK(l1 <= 1e-6);
  }

  TEST_CASE("payoff gap estimate") {
    const auto p = builtin("scalar-exp");
    const auto u0 = benchmark("scalar-exp").reference;
    const std::vector<double> taus{5.0, 10.0, 20.0};
    const auto self = estimate_omega(p, u0, taus, {u0});
    for (double w : self.omega) CHECK(w == 0.0);

    const auto pool = bang_pool(p, u0, 50, 20.0, 3);
    const auto est = estimate_omega(p, u0, taus, pool);
    CHECK(est.pool_size == 51);
    for (std::size_t i = 1; i < est.omega.size(); ++i) CHECK(est.omega[i] <= est.omega[i - 1]);
    for (std::size_t i = 0; i < est.omega.size(); ++i) CHECK(est.omega[i] >= est.raw[i]);

    const auto h = builtin("halkin");
    const auto zero = ReferenceControl::constant(scalar(0.0));
    const auto hest = estimate_omega(h, kOne, taus, {kOne, zero});
    for (double w : hest.omega) CHECK(w >= 0.0);
  }

  TEST_CASE("truncation scheme on the scalar benchmark") {
    const auto p = builtin("scalar-exp");
    const auto u0 = benchmark("scalar-exp").reference;
    const std::vector<double> taus{5.0, 10.0, 20.0, 40.0};
    TruncationOptions o;
    o.seed = 1;
    const auto run = run_truncation(p, u0, taus, o);
    REQUIRE(run.steps.size() == 4);
    CHECK(run.all_converged());
    for (std::size_t i = 0; i < run.steps.size(); ++i) {
      const auto& e = run.steps[i].extremal;
      CHECK(e.psi(taus[i])[0] == 0.0);
      CHECK(e.max_residual <= 1e-6);
      CHECK(std::abs(e.lambda + e.psi(0.0).norm() - 1.0) <= 1e-9);
      CHECK(run.steps[i].gamma == doctest::Approx(std::sqrt(run.steps[i].omega)));
    }
    for (std::size_t i = 2; i < run.steps.size(); ++i) CHECK(run.steps[i].psi0_change < run.steps[i - 1].psi0_change);
    CHECK(std::abs(run.final_step()->extremal.psi(0.0)[0] - 0.5) <= 1e-3);
  }

  TEST_CASE("truncation on the saturating benchmark") {
    const auto p = builtin("halkin");
    const auto run = run_truncation(p, kOne, std::vector<double>{5.0, 10.0, 20.0});
    const auto& e = run.final_step()->extremal;
    CHECK(std::abs(e.lambda - 0.5) <= 1e-3);
    CHECK(std::abs(e.psi(0.0)[0] + 0.5) <= 1e-3);
  }

  TEST_CASE("no pool means no penalty") {
    const auto p = builtin("scalar-exp");
    TruncationOptions o;
    o.use_pool = false;
    const auto run = run_truncation(p, kOne, std::vector<double>{5.0, 10.0}, o);
    for (const auto& s : run.steps) CHECK(s.gamma == 0.0);
  }

  TEST_CASE("truncation preconditions and csv") {
    const auto p = builtin("scalar-exp");
    CHECK_THROWS_AS((void)run_truncation(p, kOne, std::vector<double>{5.0}), PreconditionError);
    CHECK_THROWS_AS((void)run_truncation(p, kOne, std::vector<double>{5.0, 4.0}), PreconditionError);
    TruncationOptions o;
    o.use_pool = false;
    const auto run = run_truncation(p, kOne, std::vector<double>{2.0, 4.0}, o);
    const auto csv = to_csv(run, 1);
    CHECK(csv.rfind("n,tau_n,gamma_n,lambda_n,psi0_1,residual,converged\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  }
}
