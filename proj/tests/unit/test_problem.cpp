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
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "horizon_pmp/errors.hpp"
#include "horizon_pmp/problem.hpp"

using namespace hpmp;
using hpmp::test::scalar;

namespace {

const char* kHalkinDoc = R"({
  "label": "halkin-doc",
  "state_dim": 1,
  "control_dim": 1,
  "dynamics": ["(1-x1)*u1"],
  "payoff": "(1-x1)*u1",
  "control": {"kind": "box", "lower": ["0"], "upper": ["1"]},
  "reference": {"u": ["1"]}
})";

}  // namespace

TEST_SUITE("problem") {
  TEST_CASE("loading a document") {
    const auto doc = load_document(kHalkinDoc);
    const auto& p = doc.problem;
    CHECK(p.state_dim() == 1);
    CHECK(p.control_dim() == 1);
    CHECK(p.x0()[0] == 0.0);
    CHECK(p.label() == "halkin-doc");
    CHECK(doc.reference.has_value());
    const auto h = builtin("halkin");
    for (double x : {-1.0, 0.0, 0.5})
      for (double u : {0.0, 0.3, 1.0}) {
        CHECK(p.dynamics(0.0, scalar(x), scalar(u))[0] == h.dynamics(0.0, scalar(x), scalar(u))[0]);
        CHECK(p.payoff(0.0, scalar(x), scalar(u)) == h.payoff(0.0, scalar(x), scalar(u)));
      }
  }

  TEST_CASE("document errors name the problem") {
    const std::string no_payoff = R"({"state_dim":1,"control_dim":1,"dynamics":["u1"],
      "control":{"kind":"box","lower":["0"],"upper":["1"]}})";
    try {
      (void)load_problem(no_payoff);
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("payoff") != std::string::npos);
    }
    const std::string bad_x0 = R"({"state_dim":1,"control_dim":1,"dynamics":["u1"],"payoff":"x1",
      "control":{"kind":"box","lower":["0"],"upper":["1"]},"x0":[0,0]})";
    try {
      (void)load_problem(bad_x0);
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("dimension mismatch") != std::string::npos);
    }
    const std::string bad_expr = R"({"state_dim":1,"control_dim":1,"dynamics":["u1 +"],"payoff":"x1",
      "control":{"kind":"box","lower":["0"],"upper":["1"]}})";
    try {
      (void)load_problem(bad_expr);
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("dynamics[0]") != std::string::npos);
    }
    CHECK_THROWS_AS((void)load_problem("{not json"), ConfigError);
  }

  TEST_CASE("save and load round trip") {
    for (const auto& name : builtin_names()) {
      const auto b = benchmark(name);
      const auto text = save_problem(b.problem, b.reference_source);
      const auto doc = load_document(text);
      CHECK(save_problem(doc.problem, doc.reference_source) == text);
      CHECK(doc.problem.dynamics_exprs()[0] == b.problem.dynamics_exprs()[0]);
      CHECK(doc.problem.payoff_expr() == b.problem.payoff_expr());
      CHECK(doc.problem.x0() == b.problem.x0());
    }
    const auto fin = ControlProblem::from_strings(1, 1, {"u1"}, "x1", ControlSet::finite({scalar(0), scalar(1)}));
    const auto back = load_problem(save_problem(fin));
    CHECK(back.control_set().kind() == ControlSet::Kind::Finite);
    CHECK(back.control_set().points().size() == 2);
  }

  TEST_CASE("builtins") {
    CHECK(builtin_names() == std::vector<std::string>{"scalar-exp", "halkin", "lq-discounted", "monotone-growth"});
    const auto s = builtin("scalar-exp");
    CHECK(s.state_dim() == 1);
    // Along u = 1: g_x = e^-t, f_x = 0.
    CHECK(s.payoff_gradient(1.0, scalar(0.3), scalar(1.0))[0] == doctest::Approx(std::exp(-1.0)));
    CHECK(s.state_jacobian(1.0, scalar(0.3), scalar(1.0))(0, 0) == 0.0);
    try {
      (void)builtin("nope");
      FAIL("expected an unknown-name error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("halkin") != std::string::npos);
    }
  }

  TEST_CASE("builtins pass validation on their probe sets") {
    for (const auto& name : builtin_names()) {
      const auto b = benchmark(name);
      std::vector<double> times;
      for (int i = 0; i <= 20; ++i) times.push_back(b.probe_t_end * i / 20.0);
      const auto rep = validate(b.problem, times, b.probe_lower, b.probe_upper);
      INFO(name);
      CHECK(rep.ok());
    }
  }

  TEST_CASE("validation flags singular bounds and empty sets") {
    const auto singular = ControlProblem(1, 1, {parse("u1", ControlProblem::symbols(1, 1))},
                                         parse("x1", ControlProblem::symbols(1, 1)),
                                         ControlSet::box({parse("0", {"t"})}, {parse("1/ (t-1)", {"t"})}), scalar(0), "singular");
    const std::vector<double> times{0.0, 0.5, 1.0, 2.0};
    const auto rep = validate(singular, times, scalar(-1), scalar(1));
    CHECK_FALSE(rep.ok());
    const auto* c = rep.find("control-bounds-finite");
    REQUIRE(c != nullptr);
    CHECK_FALSE(c->passed);
    CHECK(c->detail.find("t=1") != std::string::npos);

    const auto empty = ControlProblem::from_strings(1, 1, {"u1"}, "x1", ControlSet::finite({}));
    const auto rep2 = validate(empty, times, scalar(-1), scalar(1));
    REQUIRE(rep2.find("control-set-nonempty") != nullptr);
    CHECK_FALSE(rep2.find("control-set-nonempty")->passed);
  }

  TEST_CASE("reference controls") {
    const auto pc = ReferenceControl::piecewise_constant({0.0, 1.0, 2.0, 3.0}, {scalar(1), scalar(2), scalar(3)});
    CHECK(pc.value(0.5, Vector())[0] == 1.0);
    CHECK(pc.value(1.0, Vector())[0] == 2.0);
    CHECK(pc.value(1.0, Vector(), 0.0)[0] == 1.0);  // left piece at its right end
    CHECK(pc.value(5.0, Vector())[0] == 3.0);
    CHECK(pc.breakpoints(0.0, 3.0) == std::vector<double>{1.0, 2.0});
    const auto fb = ReferenceControl::feedback(1, {"-x1"});
    CHECK(fb.depends_on_state());
    CHECK(fb.value(0.0, scalar(2.0))[0] == -2.0);
    const auto sp = ReferenceControl::spliced(ReferenceControl::constant(scalar(1)), 1.0, 2.0, scalar(0));
    CHECK(sp.value(1.5, scalar(0))[0] == 0.0);
    CHECK(sp.value(2.5, scalar(0))[0] == 1.0);
    CHECK(sp.breakpoints(0.0, 3.0) == std::vector<double>{1.0, 2.0});
  }

  TEST_CASE("admissibility") {
    const auto p = builtin("halkin");
    const std::vector<double> times{0.0, 1.0, 2.0};
    const auto zero = [](double) { return scalar(0.0); };
    CHECK_FALSE(check_admissible(p, ReferenceControl::constant(scalar(1.0)), times, zero).has_value());
    CHECK(check_admissible(p, ReferenceControl::constant(scalar(1.5)), times, zero).has_value());
  }
}
