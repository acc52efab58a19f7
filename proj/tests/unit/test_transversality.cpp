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

#include <fmt/format.h>

#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "horizon_pmp/errors.hpp"
#include "horizon_pmp/transversality.hpp"

using namespace hpmp;
using hpmp::test::scalar;
using hpmp::test::vec;

namespace {

const auto kZero = ReferenceControl::constant(scalar(0.0));

VectorArc curve(double (*f)(double), double (*df)(double), Span span = {0.0, 40.0}) {
  return tabulate_arc([f](double t) { return scalar(f(t)); }, [df](double t) { return scalar(df(t)); }, span);
}

double exp_neg(double t) { return std::exp(-t); }
double exp_neg_d(double t) { return -std::exp(-t); }
double inv_log(double t) { return 1.0 / std::log(2.0 + t); }
double inv_log_d(double t) { return -1.0 / ((2.0 + t) * std::pow(std::log(2.0 + t), 2)); }
double half(double) { return -0.5; }
double flat(double) { return 0.0; }
double sine(double t) { return std::sin(t); }
double cosine(double t) { return std::cos(t); }

MatrixArc flow(const Matrix& M, double t_end = 40.0) {
  const auto p = test::linear_problem(M);
  const auto x = integrate_state(p, kZero, p.x0(), {0.0, t_end});
  return fundamental_matrix(p, kZero, x, {0.0, t_end});
}

Matrix diag(double a, double b) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace

TEST_SUITE("transversality") {
  TEST_CASE("plain limit verdicts") {
    CHECK(check_plain_limit(curve(exp_neg, exp_neg_d)).verdict == Verdict::Holds);
    CHECK(check_plain_limit(curve(inv_log, inv_log_d)).verdict == Verdict::Inconclusive);
    const auto h = check_plain_limit(curve(half, flat));
    CHECK(h.verdict == Verdict::Fails);
    CHECK(h.evidence.columns == std::vector<std::string>{"window_start", "window_end", "sup_norm"});
    CHECK(h.evidence.rows.size() == 6);
    CHECK_THROWS_AS((void)check_plain_limit(curve(exp_neg, exp_neg_d, {0.0, 4.0})), PreconditionError);
  }

  TEST_CASE("windows end at the span end") {
    const auto w = window_stats([](double t) { return t; }, {0.0, 40.0});
    CHECK(w.end.back() == 40.0);
    CHECK(w.start.back() == 39.0);
    CHECK(w.start.front() == 8.0);
    for (std::size_t i = 0; i + 1 < w.end.size(); ++i) CHECK(w.end[i] == w.start[i + 1]);
    for (std::size_t i = 0; i < w.sup.size(); ++i) CHECK(w.sup[i] == w.end[i]);
  }

  TEST_CASE("subsequence limit") {
    std::vector<double> taus;
    for (int k = 1; k <= 12; ++k) taus.push_back(k * M_PI);
    const auto s = check_subsequence_limit(curve(sine, cosine), taus);
    CHECK(s.verdict == Verdict::Holds);
    CHECK(s.subsequence == taus);
    CHECK(check_subsequence_limit(curve(half, flat), taus).verdict == Verdict::Fails);
    CHECK_THROWS_AS((void)check_subsequence_limit(curve(sine, cosine), {3.0, 2.0}), PreconditionError);
    CHECK_THROWS_AS((void)check_subsequence_limit(curve(sine, cosine), {50.0}), PreconditionError);
  }

  TEST_CASE("weighted limit with a decaying weight") {
    const auto a = flow(Matrix::Constant(1, 1, -1.0));
    const auto psi = curve(half, flat);
    CHECK(check_weighted_limit(psi, a, WeightMode::FullLimit).verdict == Verdict::Holds);
    CHECK(check_weighted_limit(psi, a, WeightMode::Liminf).verdict == Verdict::Holds);
    CHECK(check_plain_limit(psi).verdict == Verdict::Fails);
    CHECK_THROWS_WITH_AS((void)check_weighted_limit(psi, flow(Matrix::Constant(1, 1, -1.0), 20.0),
                                                    WeightMode::FullLimit),
                         doctest::Contains("span mismatch"), PreconditionError);
  }

  TEST_CASE("expression weights") {
    const auto psi = curve(half, flat);
    const auto r = weight_from_expressions(1, {"exp(-t)"}, {0.0, 40.0});
    CHECK(r(3.0)(0, 0) == doctest::Approx(std::exp(-3.0)));
    CHECK(check_weighted_limit(psi, r, WeightMode::FullLimit).verdict == Verdict::Holds);
    const auto one = weight_from_expressions(1, {"1"}, {0.0, 40.0});
    CHECK(check_weighted_limit(psi, one, WeightMode::FullLimit).verdict == Verdict::Fails);
    const auto d = weight_from_expressions(2, {"exp(-t)", "0", "0", "exp(-2*t)"}, {0.0, 40.0});
    const auto ex = lyapunov_exponents(d, {.interval = 0.5, .min_span = 40.0, .adjoint_flow = false});
    CHECK(ex[0] == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(ex[1] == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK_THROWS_AS((void)weight_from_expressions(2, {"1"}, {0.0, 40.0}), PreconditionError);
    CHECK_THROWS_AS((void)weight_from_expressions(1, {"x1"}, {0.0, 40.0}), ParseError);
  }

  TEST_CASE("identity weight reproduces the plain check") {
    const auto id = MatrixArc::identity(1, {0.0, 40.0});
    for (const auto& psi : {curve(exp_neg, exp_neg_d), curve(inv_log, inv_log_d), curve(half, flat)}) {
      const auto plain = check_plain_limit(psi);
      const auto weighted = check_weighted_limit(psi, id, WeightMode::FullLimit);
      CHECK(plain.verdict == weighted.verdict);
      CHECK(plain.evidence.column("sup_norm") == weighted.evidence.column("sup_norm"));
    }
  }

  TEST_CASE("statistics scale with the adjoint") {
    auto psi = curve(inv_log, inv_log_d);
    const auto base = check_plain_limit(psi).evidence.column("sup_norm");
    psi.scale(3.0);
    const auto scaled = check_plain_limit(psi).evidence.column("sup_norm");
    REQUIRE(base.size() == scaled.size());
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(scaled[i] == doctest::Approx(3.0 * base[i]).epsilon(1e-12));
  }

  TEST_CASE("lyapunov exponents") {
    const auto d = flow(diag(-1.0, -2.0));
    const auto adj = lyapunov_exponents(d);
    REQUIRE(adj.size() == 2);
    CHECK(std::abs(adj[0] - 2.0) <= 1e-6);
    CHECK(std::abs(adj[1] - 1.0) <= 1e-6);
    const auto fwd = lyapunov_exponents(d, {.interval = 0.5, .min_span = 40.0, .adjoint_flow = false});
    CHECK(std::abs(fwd[0] + 1.0) <= 1e-6);
    CHECK(std::abs(fwd[1] + 2.0) <= 1e-6);

    for (const auto& e : lyapunov_exponents(flow(Matrix::Zero(2, 2)))) CHECK(std::abs(e) <= 1e-9);

    Matrix rot(2, 2);
    rot << 0.0, 1.0, -1.0, 0.0;
    for (const auto& e : lyapunov_exponents(flow(rot))) CHECK(std::abs(e) <= 1e-6);

    // Adjoint exponents are the negated forward ones in reverse order, up to
    // the O(1/T) transient of a non-normal flow.
    Matrix mixed(2, 2);
    mixed << -0.3, 0.4, 0.1, -0.8;
    const auto a = flow(mixed);
    const auto f = lyapunov_exponents(a, {.interval = 0.5, .min_span = 40.0, .adjoint_flow = false});
    const auto b = lyapunov_exponents(a);
    CHECK(std::abs(b[0] + f[1]) <= 0.02);
    CHECK(std::abs(b[1] + f[0]) <= 0.02);

    CHECK_THROWS_AS((void)lyapunov_exponents(flow(diag(-1.0, -2.0), 10.0)), PreconditionError);
  }

  TEST_CASE("dominance fit recovers synthetic rates") {
    std::mt19937_64 rng(2026);
    std::uniform_real_distribution<double> noise(-0.01, 0.01);
    std::vector<DominanceSample> samples;
    for (int c = 0; c < 3; ++c) {
      DominanceSample s;
      for (double t = 0.0; t <= 40.0; t += 0.25) {
        s.t.push_back(t);
        s.product.push_back(2.0 * std::exp(-0.5 * t) * (1.0 + noise(rng)));
      }
      samples.push_back(s);
    }
    const auto fit = fit_exponential_dominance(samples);
    CHECK(fit.holds);
    CHECK(fit.alpha == doctest::Approx(0.5).epsilon(0.05));
    CHECK(fit.beta == doctest::Approx(2.0).epsilon(0.05));
    CHECK(fit.sample_size == 3);
    CHECK(fit.beta_envelope >= fit.beta);

    DominanceSample constant;
    for (double t = 0.0; t <= 40.0; t += 0.25) {
      constant.t.push_back(t);
      constant.product.push_back(1.5);
    }
    const auto c = fit_exponential_dominance({constant});
    CHECK_FALSE(c.holds);
    CHECK(std::abs(c.alpha) <= 1e-12);

    DominanceSample zeros{"zero", {0.0, 1.0, 2.0}, {0.0, 0.0, 0.0}};
    const auto z = fit_exponential_dominance({zeros});
    CHECK(z.holds);
    CHECK(std::isinf(z.alpha));

    CHECK_THROWS_AS((void)fit_exponential_dominance(std::vector<DominanceSample>{}), PreconditionError);
  }

  TEST_CASE("dominance along builtin trajectories") {
    const auto b = benchmark("scalar-exp");
    const auto fit = fit_exponential_dominance(b.problem, {b.reference}, {0.0, 32.0});
    CHECK(fit.holds);
    CHECK(fit.alpha == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("monotone case") {
    Matrix M(2, 2);
    M << -1.0, 0.5, 0.5, -1.0;
    const auto p = test::linear_problem(M, "exp(-t)*(x1 + x2)");
    const auto in = prepare_battery(p, kZero);
    const auto rep = run_battery(p, in);
    REQUIRE(rep.monotone.has_value());
    CHECK(rep.monotone->hypotheses_hold());
    CHECK(rep.monotone->strict_hypotheses());
    CHECK(rep.monotone->psi_positive.value_or(false));
    CHECK(rep.monotone->sandwich_holds.value_or(false));
    CHECK(rep.find("monotone")->verdict == Verdict::Holds);

    Matrix N(2, 2);
    N << -1.0, -0.5, 0.5, -1.0;
    const auto q = test::linear_problem(N, "exp(-t)*(x1 + x2)");
    const auto rq = run_battery(q, prepare_battery(q, kZero));
    REQUIRE(rq.monotone.has_value());
    CHECK_FALSE(rq.monotone->hypotheses_hold());
    CHECK_FALSE(rq.monotone->psi_nonnegative.has_value());
    CHECK_FALSE(rq.monotone->violations.empty());
    CHECK(rq.find("monotone")->verdict == Verdict::Inconclusive);
  }

  TEST_CASE("battery on builtins") {
    const auto sb = benchmark("scalar-exp");
    const auto s = run_battery(sb.problem, prepare_battery(sb.problem, sb.reference));
    for (const auto& e : s.entries) {
      INFO(e.id);
      CHECK(e.verdict == Verdict::Holds);
    }
    CHECK(s.lyapunov.size() == 1);

    const auto hb = benchmark("halkin");
    const auto h = run_battery(hb.problem, prepare_battery(hb.problem, hb.reference));
    CHECK(h.find("trans")->verdict == Verdict::Fails);
    CHECK(h.find("partlim")->verdict == Verdict::Fails);
    CHECK(h.find("weighted_liminf")->verdict == Verdict::Holds);
    CHECK(h.find("lim")->verdict == Verdict::Holds);
    CHECK(h.find("exp")->verdict == Verdict::Holds);
    bool explained = false;
    for (const auto& n : h.notes) explained = explained || n.find("weighted one is the meaningful") != std::string::npos;
    CHECK(explained);
  }

  TEST_CASE("dominance and weighted limit are cross-checked") {
    BatteryInput in;
    DenseSolution c;
    for (int k = 0; k <= 40; ++k) {
      c.t.push_back(k);
      c.y.push_back(scalar(-0.5));
      c.dleft.push_back(scalar(0.0));
      c.dright.push_back(scalar(0.0));
    }
    in.psi = AdjointArc(c);
    in.a = MatrixArc::identity(1, {0.0, 40.0});
    DominanceSample s;
    for (double t = 0.0; t <= 40.0; t += 1.0) {
      s.t.push_back(t);
      s.product.push_back(std::exp(-t));
    }
    in.dominance = {s};
    const auto p = builtin("halkin");
    auto noted = [](const TransversalityReport& r) {
      for (const auto& n : r.notes)
        if (n.find("internal inconsistency") != std::string::npos) return true;
      return false;
    };
    CHECK(noted(run_battery(p, in)));
    in.a_is_fundamental = false;
    CHECK_FALSE(noted(run_battery(p, in)));
  }

  TEST_CASE("report text round trip") {
    const auto hb = benchmark("halkin");
    const auto rep = run_battery(hb.problem, prepare_battery(hb.problem, hb.reference));
    const auto text = rep.serialize();
    const auto back = TransversalityReport::parse(text);
    CHECK(back.serialize() == text);
    CHECK(back.summary_line() == rep.summary_line());
    REQUIRE(back.dominance.has_value());
    CHECK(back.dominance->alpha == rep.dominance->alpha);

    const auto items = parse_summary_line(rep.summary_line());
    REQUIRE(items.size() == rep.entries.size());
    CHECK(items.front().first == "trans");
    CHECK(items.front().second == Verdict::Fails);

    CHECK_THROWS_AS((void)parse_summary_line("trans=maybe"), ParseError);
    CHECK_THROWS_AS((void)parse_summary_line("=holds"), ParseError);
    CHECK_THROWS_AS((void)TransversalityReport::parse("not a report"), ParseError);
    auto tampered = text;
    tampered.replace(tampered.find("trans=fails"), 11, "trans=holds");
    CHECK_THROWS_AS((void)TransversalityReport::parse(tampered), ParseError);
  }

  TEST_CASE("verdict names") {
    for (auto v : {Verdict::Holds, Verdict::Fails, Verdict::Inconclusive}) CHECK(parse_verdict(to_string(v)) == v);
    CHECK_THROWS_AS((void)parse_verdict("unknown"), ParseError);
  }
}
