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

#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "horizon_pmp/cauchy.hpp"
#include "horizon_pmp/cli.hpp"
#include "horizon_pmp/errors.hpp"
#include "horizon_pmp/pmp.hpp"
#include "horizon_pmp/transversality.hpp"

namespace py = pybind11;
using namespace hpmp;

namespace {

// Plain-data views so Python never holds references into C++ arcs.
py::dict arc_dict(const VectorArc& arc) {
  std::vector<Vector> values;
  for (std::size_t i = 0; i < arc.size(); ++i) values.push_back(arc.value(i));
  py::dict d;
  d["t"] = arc.times();
  d["values"] = values;
  return d;
}

Benchmark pick(const std::string& name) { return benchmark(name); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Infinite-horizon Pontryagin toolkit";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<UnboundVariableError>(m, "UnboundVariableError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());
  py::register_exception<SingularMatrixError>(m, "SingularMatrixError", base.ptr());
  py::register_exception<IntegrationError>(m, "IntegrationError", base.ptr());

  py::class_<Expr>(m, "Expr")
      .def("eval", [](const Expr& e, const std::vector<double>& v) { return e.eval(v); })
      .def("eval_dual",
           [](const Expr& e, const std::vector<double>& v, std::size_t seed) {
             const auto d = e.eval_dual(v, seed);
             return py::make_tuple(d.value, d.derivative);
           })
      .def("print", &Expr::print)
      .def("__str__", &Expr::print)
      .def("__eq__", [](const Expr& a, const Expr& b) { return a == b; });
  m.def(
      "parse", [](const std::string& text, const std::vector<std::string>& symbols) { return parse(text, symbols); },
      py::arg("text"), py::arg("symbols"));

  m.def("builtin_names", &builtin_names);
  m.def(
      "describe",
      [](const std::string& name) {
        const auto b = pick(name);
        py::dict d;
        d["name"] = b.name;
        d["description"] = b.description;
        d["state_dim"] = b.problem.state_dim();
        d["control_dim"] = b.problem.control_dim();
        d["reference"] = b.reference_source;
        return d;
      },
      py::arg("name"));

  m.def(
      "accumulate",
      [](const std::string& name, double t_max, double tol) {
        const auto b = pick(name);
        const auto acc = accumulate(b.problem, b.reference, Vector::Zero(static_cast<Eigen::Index>(b.problem.state_dim())),
                                    t_max);
        const auto v = classify_convergence(acc, tol);
        py::dict d;
        d["verdict"] = to_string(v.kind);
        d["t"] = acc.t;
        std::vector<Vector> I;
        for (const auto& r : acc.I) I.push_back(r.transpose());
        d["I"] = I;
        d["growth_exponent"] = v.growth_exponent;
        if (v.kind == ConvergenceVerdict::Kind::Converged) d["limit"] = Vector(v.limit.transpose());
        return d;
      },
      py::arg("name"), py::arg("t_max") = 128.0, py::arg("tol") = 1e-6);

  m.def(
      "cauchy_adjoint",
      [](const std::string& name, double t_max, double t_psi) {
        const auto b = pick(name);
        const auto acc = accumulate(b.problem, b.reference, Vector::Zero(static_cast<Eigen::Index>(b.problem.state_dim())),
                                    t_max);
        const auto v = classify_convergence(acc);
        const auto ca = cauchy_adjoint(b.problem, b.reference, acc, v, t_psi);
        py::dict d = arc_dict(ca.psi);
        d["lambda"] = ca.lambda;
        d["limit"] = Vector(ca.limit.transpose());
        d["product_identity"] = verify_product_identity(ca.psi, ca.lambda, acc, ca.limit);
        return d;
      },
      py::arg("name"), py::arg("t_max") = 128.0, py::arg("t_psi") = 64.0);

  m.def(
      "run_truncation",
      [](const std::string& name, const std::vector<double>& taus, std::uint64_t seed) {
        const auto b = pick(name);
        TruncationOptions opts;
        opts.seed = seed;
        const auto run = run_truncation(b.problem, b.reference, taus, opts);
        py::list steps;
        for (const auto& st : run.steps) {
          py::dict d;
          d["tau"] = st.tau;
          d["gamma"] = st.gamma;
          d["error"] = st.error;
          if (st.error.empty()) {
            d["lambda"] = st.extremal.lambda;
            d["psi0"] = Vector(st.extremal.psi(0.0));
            d["psi_end"] = Vector(st.extremal.psi(st.tau));
            d["residual"] = st.extremal.max_residual;
            d["converged"] = st.extremal.converged;
          }
          steps.append(d);
        }
        return steps;
      },
      py::arg("name"), py::arg("taus"), py::arg("seed") = 0);

  m.def(
      "battery",
      [](const std::string& name, std::uint64_t seed) {
        const auto b = pick(name);
        PrepareOptions po;
        po.seed = seed;
        const auto rep = run_battery(b.problem, prepare_battery(b.problem, b.reference, po));
        py::dict verdicts;
        for (const auto& e : rep.entries) verdicts[py::str(e.id)] = to_string(e.verdict);
        py::dict d;
        d["summary"] = rep.summary_line();
        d["verdicts"] = verdicts;
        d["lyapunov"] = rep.lyapunov;
        d["notes"] = rep.notes;
        d["report"] = rep.serialize();
        return d;
      },
      py::arg("name"), py::arg("seed") = 0);

  m.def(
      "fit_dominance",
      [](const std::vector<double>& t, const std::vector<double>& product) {
        const auto fit = fit_exponential_dominance({DominanceSample{"sample", t, product}});
        return py::make_tuple(fit.alpha, fit.beta, fit.holds);
      },
      py::arg("t"), py::arg("product"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"horizon-pmp"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
