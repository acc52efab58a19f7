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

#include "horizon_pmp/problem.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "horizon_pmp/errors.hpp"
#include "json.hpp"

namespace hpmp {

// ---------------------------------------------------------------------------
// ControlSet

ControlSet ControlSet::box(std::vector<Expr> lower, std::vector<Expr> upper) {
  if (lower.size() != upper.size() || lower.empty())
    throw ConfigError("box control set needs matching nonempty lower/upper bounds");
  ControlSet s;
  s.kind_ = Kind::Box;
  s.dim_ = lower.size();
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

ControlSet ControlSet::box(const Vector& lower, const Vector& upper) {
  std::vector<Expr> lo, hi;
  for (Eigen::Index i = 0; i < lower.size(); ++i) lo.push_back(parse(fmt::format("{:.17g}", lower[i]), {"t"}));
  for (Eigen::Index i = 0; i < upper.size(); ++i) hi.push_back(parse(fmt::format("{:.17g}", upper[i]), {"t"}));
  return box(std::move(lo), std::move(hi));
}

ControlSet ControlSet::finite(std::vector<Vector> points) {
  ControlSet s;
  s.kind_ = Kind::Finite;
  s.dim_ = points.empty() ? 0 : static_cast<std::size_t>(points.front().size());
  for (const auto& p : points)
    if (static_cast<std::size_t>(p.size()) != s.dim_) throw ConfigError("finite control points differ in dimension");
  s.points_ = std::move(points);
  return s;
}

std::pair<Vector, Vector> ControlSet::bounds(double t) const {
  Vector lo(static_cast<Eigen::Index>(dim_)), hi(static_cast<Eigen::Index>(dim_));
  const double tt[] = {t};
  for (std::size_t i = 0; i < dim_; ++i) {
    lo[static_cast<Eigen::Index>(i)] = lower_[i].eval(tt);
    hi[static_cast<Eigen::Index>(i)] = upper_[i].eval(tt);
  }
  return {lo, hi};
}

bool ControlSet::contains(double t, const Vector& u, double tol) const {
  if (static_cast<std::size_t>(u.size()) != dim_) return false;
  if (kind_ == Kind::Finite) {
    return std::any_of(points_.begin(), points_.end(),
                       [&](const Vector& p) { return (p - u).lpNorm<Eigen::Infinity>() <= tol; });
  }
  const auto [lo, hi] = bounds(t);
  for (std::size_t i = 0; i < dim_; ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    if (u[j] < lo[j] - tol || u[j] > hi[j] + tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// ControlProblem

ControlProblem::ControlProblem(std::size_t state_dim, std::size_t control_dim, std::vector<Expr> dynamics,
                               Expr payoff, ControlSet control_set, Vector x0, std::string label)
    : m_(state_dim),
      k_(control_dim),
      f_(std::move(dynamics)),
      g_(std::move(payoff)),
      U_(std::move(control_set)),
      x0_(std::move(x0)),
      label_(std::move(label)) {
  if (m_ == 0) throw ConfigError("state_dim must be at least 1");
  if (k_ == 0) throw ConfigError("control_dim must be at least 1");
  if (f_.size() != m_)
    throw ConfigError(fmt::format("dimension mismatch: {} dynamics components for state_dim {}", f_.size(), m_));
  if (g_.empty()) throw ConfigError("missing payoff");
  if (x0_.size() == 0) x0_ = Vector::Zero(static_cast<Eigen::Index>(m_));
  if (static_cast<std::size_t>(x0_.size()) != m_)
    throw ConfigError(fmt::format("dimension mismatch: x0 has length {} but state_dim is {}", x0_.size(), m_));
  const bool empty_finite = U_.kind() == ControlSet::Kind::Finite && U_.points().empty();
  if (!empty_finite && U_.dim() != k_)
    throw ConfigError(fmt::format("dimension mismatch: control set has dimension {} but control_dim is {}",
                                  U_.dim(), k_));
  const auto syms = symbols(m_, k_);
  auto check = [&](const Expr& e, const std::string& what) {
    if (e.symbols() != syms) throw ConfigError(what + " is not declared over the problem symbols");
  };
  for (std::size_t i = 0; i < m_; ++i) check(f_[i], fmt::format("dynamics[{}]", i));
  check(g_, "payoff");
}

ControlProblem ControlProblem::from_strings(std::size_t state_dim, std::size_t control_dim,
                                            const std::vector<std::string>& dynamics, const std::string& payoff,
                                            ControlSet control_set, std::optional<Vector> x0, std::string label) {
  const auto syms = symbols(state_dim, control_dim);
  std::vector<Expr> f;
  for (const auto& d : dynamics) f.push_back(parse(d, syms));
  return ControlProblem(state_dim, control_dim, std::move(f), parse(payoff, syms), std::move(control_set),
                        x0.value_or(Vector()), std::move(label));
}

std::vector<std::string> ControlProblem::symbols(std::size_t state_dim, std::size_t control_dim) {
  auto s = state_symbols(state_dim);
  for (std::size_t j = 1; j <= control_dim; ++j) s.push_back(fmt::format("u{}", j));
  return s;
}

std::vector<std::string> ControlProblem::state_symbols(std::size_t state_dim) {
  std::vector<std::string> s{"t"};
  for (std::size_t i = 1; i <= state_dim; ++i) s.push_back(fmt::format("x{}", i));
  return s;
}

ControlProblem ControlProblem::with_x0(const Vector& x0) const {
  ControlProblem copy = *this;
  if (static_cast<std::size_t>(x0.size()) != m_) throw ConfigError("dimension mismatch in x0");
  copy.x0_ = x0;
  return copy;
}

std::vector<double> ControlProblem::bind(double t, const Vector& x, const Vector& u) const {
  std::vector<double> v;
  v.reserve(1 + m_ + k_);
  v.push_back(t);
  v.insert(v.end(), x.data(), x.data() + x.size());
  v.insert(v.end(), u.data(), u.data() + u.size());
  return v;
}

Vector ControlProblem::dynamics(double t, const Vector& x, const Vector& u) const {
  const auto v = bind(t, x, u);
  Vector out(static_cast<Eigen::Index>(m_));
  for (std::size_t i = 0; i < m_; ++i) out[static_cast<Eigen::Index>(i)] = f_[i].eval(v);
  return out;
}

double ControlProblem::payoff(double t, const Vector& x, const Vector& u) const { return g_.eval(bind(t, x, u)); }

Matrix ControlProblem::state_jacobian(double t, const Vector& x, const Vector& u) const {
  const auto v = bind(t, x, u);
  const auto m = static_cast<Eigen::Index>(m_);
  Matrix J(m, m);
  for (Eigen::Index col = 0; col < m; ++col) {
    const auto seed = static_cast<std::size_t>(1 + col);
    for (Eigen::Index row = 0; row < m; ++row)
      J(row, col) = f_[static_cast<std::size_t>(row)].eval_dual(v, seed).derivative;
  }
  return J;
}

RowVector ControlProblem::payoff_gradient(double t, const Vector& x, const Vector& u) const {
  const auto v = bind(t, x, u);
  RowVector g(static_cast<Eigen::Index>(m_));
  for (std::size_t i = 0; i < m_; ++i) g[static_cast<Eigen::Index>(i)] = g_.eval_dual(v, 1 + i).derivative;
  return g;
}

// ---------------------------------------------------------------------------
// Control laws

namespace {

class PiecewiseConstantLaw final : public ControlLaw {
 public:
  PiecewiseConstantLaw(std::vector<double> grid, std::vector<Vector> values)
      : grid_(std::move(grid)), values_(std::move(values)) {}

  Vector value(double /*t*/, const Vector& /*x*/, double piece_start) const override {
    auto it = std::upper_bound(grid_.begin(), grid_.end(), piece_start);
    std::size_t i = it == grid_.begin() ? 0 : static_cast<std::size_t>(it - grid_.begin()) - 1;
    return values_[std::min(i, values_.size() - 1)];
  }

  void breakpoints(double a, double b, std::vector<double>& out) const override {
    for (std::size_t i = 1; i < values_.size(); ++i)
      if (grid_[i] > a && grid_[i] < b) out.push_back(grid_[i]);
  }

 private:
  std::vector<double> grid_;
  std::vector<Vector> values_;
};

class FeedbackLaw final : public ControlLaw {
 public:
  explicit FeedbackLaw(std::vector<Expr> laws) : laws_(std::move(laws)) {
    for (std::size_t i = 0; i < laws_.front().symbols().size(); ++i)
      for (const auto& e : laws_)
        if (i > 0 && e.uses(i)) state_ = true;
  }

  Vector value(double t, const Vector& x, double /*piece_start*/) const override {
    const std::size_t nsym = laws_.front().symbols().size();
    const auto given = std::min(static_cast<std::size_t>(x.size()), nsym - 1);
    if (state_ && given < nsym - 1) throw UnboundVariableError("feedback law needs the state vector");
    // Time-only laws may be evaluated without a state; unused slots stay zero.
    std::vector<double> v(nsym, 0.0);
    v[0] = t;
    std::copy(x.data(), x.data() + given, v.begin() + 1);
    Vector u(static_cast<Eigen::Index>(laws_.size()));
    for (std::size_t i = 0; i < laws_.size(); ++i) u[static_cast<Eigen::Index>(i)] = laws_[i].eval(v);
    return u;
  }

  void breakpoints(double, double, std::vector<double>&) const override {}
  bool depends_on_state() const override { return state_; }

 private:
  std::vector<Expr> laws_;
  bool state_ = false;
};

class SplicedLaw final : public ControlLaw {
 public:
  SplicedLaw(ReferenceControl base, double a, double b, Vector value)
      : base_(std::move(base)), a_(a), b_(b), value_(std::move(value)) {}

  Vector value(double t, const Vector& x, double piece_start) const override {
    if (piece_start >= a_ && piece_start < b_) return value_;
    return base_.value(t, x, piece_start);
  }

  void breakpoints(double a, double b, std::vector<double>& out) const override {
    base_.law().breakpoints(a, b, out);
    if (a_ > a && a_ < b) out.push_back(a_);
    if (b_ > a && b_ < b) out.push_back(b_);
  }

  bool depends_on_state() const override { return base_.depends_on_state(); }

 private:
  ReferenceControl base_;
  double a_, b_;
  Vector value_;
};

}  // namespace

ReferenceControl ReferenceControl::piecewise_constant(std::vector<double> grid, std::vector<Vector> values) {
  if (values.empty() || grid.size() != values.size() + 1)
    throw PreconditionError("piecewise-constant control needs grid.size() == values.size() + 1");
  if (!std::is_sorted(grid.begin(), grid.end()) ||
      std::adjacent_find(grid.begin(), grid.end()) != grid.end())
    throw PreconditionError("control grid must be strictly increasing");
  return ReferenceControl(std::make_shared<PiecewiseConstantLaw>(std::move(grid), std::move(values)));
}

ReferenceControl ReferenceControl::constant(const Vector& value) {
  return piecewise_constant({0.0, 1.0}, {value});
}

ReferenceControl ReferenceControl::feedback(std::vector<Expr> laws) {
  if (laws.empty()) throw PreconditionError("feedback control needs at least one component");
  return ReferenceControl(std::make_shared<FeedbackLaw>(std::move(laws)));
}

ReferenceControl ReferenceControl::feedback(std::size_t state_dim, const std::vector<std::string>& laws) {
  const auto syms = ControlProblem::state_symbols(state_dim);
  std::vector<Expr> e;
  for (const auto& s : laws) e.push_back(parse(s, syms));
  return feedback(std::move(e));
}

ReferenceControl ReferenceControl::spliced(ReferenceControl base, double a, double b, const Vector& value) {
  if (!(a < b)) throw PreconditionError("splice interval must satisfy a < b");
  return ReferenceControl(std::make_shared<SplicedLaw>(std::move(base), a, b, value));
}

std::vector<double> ReferenceControl::breakpoints(double a, double b) const {
  std::vector<double> out;
  law_->breakpoints(std::min(a, b), std::max(a, b), out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Validation

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

// Lattice of 3 points per axis (lower, mid, upper); corners only beyond 4 dims.
std::vector<Vector> lattice(const Vector& lo, const Vector& hi) {
  const auto n = lo.size();
  const int per_axis = n <= 4 ? 3 : 2;
  std::size_t count = 1;
  for (Eigen::Index i = 0; i < n; ++i) count *= static_cast<std::size_t>(per_axis);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    Vector v(n);
    std::size_t rest = c;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto level = static_cast<double>(rest % static_cast<std::size_t>(per_axis));
      rest /= static_cast<std::size_t>(per_axis);
      v[i] = lo[i] + (hi[i] - lo[i]) * level / (per_axis - 1);
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

ValidationReport validate(const ControlProblem& p, std::span<const double> probe_times, const Vector& box_lower,
                          const Vector& box_upper) {
  ValidationReport report;
  const ControlSet& U = p.control_set();

  ValidationCheck nonempty{"control-set-nonempty", true, ""};
  if (U.kind() == ControlSet::Kind::Finite && U.points().empty()) {
    nonempty.passed = false;
    nonempty.detail = "finite control set is empty";
  }
  report.checks.push_back(nonempty);

  ValidationCheck finite_bounds{"control-bounds-finite", true, ""};
  ValidationCheck ordered{"control-bounds-ordered", true, ""};
  std::vector<std::vector<Vector>> controls_at(probe_times.size());
  for (std::size_t ti = 0; ti < probe_times.size(); ++ti) {
    const double t = probe_times[ti];
    if (U.kind() == ControlSet::Kind::Finite) {
      controls_at[ti] = U.points();
      continue;
    }
    try {
      const auto [lo, hi] = U.bounds(t);
      if ((lo.array() > hi.array()).any()) {
        if (ordered.passed) ordered.detail = fmt::format("lower > upper at t={:.17g}", t);
        ordered.passed = false;
        continue;
      }
      controls_at[ti] = lattice(lo, hi);
    } catch (const DomainError& e) {
      if (finite_bounds.passed) finite_bounds.detail = fmt::format("non-finite bound at t={:.17g}: {}", t, e.what());
      finite_bounds.passed = false;
    }
  }
  report.checks.push_back(finite_bounds);
  report.checks.push_back(ordered);

  ValidationCheck f_ok{"f-bounded", true, ""}, g_ok{"g-bounded", true, ""};
  ValidationCheck fx_ok{"f-jacobian-finite", true, ""}, gx_ok{"g-gradient-finite", true, ""};
  auto flag = [](ValidationCheck& c, const std::string& msg) {
    if (c.passed) c.detail = msg;
    c.passed = false;
  };
  const auto states = lattice(box_lower, box_upper);
  for (std::size_t ti = 0; ti < probe_times.size(); ++ti) {
    const double t = probe_times[ti];
    for (const auto& x : states) {
      for (const auto& u : controls_at[ti]) {
        const auto where = fmt::format("t={:.17g}", t);
        try {
          (void)p.dynamics(t, x, u);
        } catch (const Error& e) {
          flag(f_ok, where + ": " + e.what());
        }
        try {
          (void)p.payoff(t, x, u);
        } catch (const Error& e) {
          flag(g_ok, where + ": " + e.what());
        }
        try {
          (void)p.state_jacobian(t, x, u);
        } catch (const Error& e) {
          flag(fx_ok, where + ": " + e.what());
        }
        try {
          (void)p.payoff_gradient(t, x, u);
        } catch (const Error& e) {
          flag(gx_ok, where + ": " + e.what());
        }
      }
    }
  }
  for (auto* c : {&f_ok, &g_ok, &fx_ok, &gx_ok}) report.checks.push_back(*c);
  return report;
}

std::optional<std::string> check_admissible(const ControlProblem& p, const ReferenceControl& u,
                                            std::span<const double> times,
                                            const std::function<Vector(double)>& state) {
  for (double t : times) {
    const Vector v = u.value(t, state(t));
    if (!p.control_set().contains(t, v))
      return fmt::format("control leaves U(t) at t={:.17g}", t);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Documents

namespace {

using nlohmann::json;

const json& require(const json& j, const char* field, const std::string& path = {}) {
  if (!j.is_object() || !j.contains(field))
    throw ConfigError(fmt::format("missing field '{}{}'", path, field));
  return j.at(field);
}

Expr parse_field(const std::string& text, const std::vector<std::string>& syms, const std::string& path) {
  try {
    return parse(text, syms);
  } catch (const ParseError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

std::string expr_text(const json& j, const std::string& path) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return fmt::format("{:.17g}", j.get<double>());
  throw ConfigError(fmt::format("{}: expected expression string or number", path));
}

}  // namespace

ProblemDocument load_document(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("malformed problem document: {}", e.what()));
  }
  try {
    const auto m = require(doc, "state_dim").get<std::size_t>();
    const auto k = require(doc, "control_dim").get<std::size_t>();
    const auto syms = ControlProblem::symbols(m, k);

    const json& dyn = require(doc, "dynamics");
    if (!dyn.is_array()) throw ConfigError("dynamics: expected an array of expression strings");
    std::vector<Expr> f;
    for (std::size_t i = 0; i < dyn.size(); ++i) {
      const auto path = fmt::format("dynamics[{}]", i);
      f.push_back(parse_field(expr_text(dyn[i], path), syms, path));
    }
    Expr g = parse_field(expr_text(require(doc, "payoff"), "payoff"), syms, "payoff");

    const json& ctl = require(doc, "control");
    const auto kind = require(ctl, "kind", "control.").get<std::string>();
    ControlSet U;
    if (kind == "box") {
      const json& lo = require(ctl, "lower", "control.");
      const json& hi = require(ctl, "upper", "control.");
      std::vector<Expr> lower, upper;
      const std::vector<std::string> tsym{"t"};
      for (std::size_t i = 0; i < lo.size(); ++i) {
        const auto path = fmt::format("control.lower[{}]", i);
        lower.push_back(parse_field(expr_text(lo[i], path), tsym, path));
      }
      for (std::size_t i = 0; i < hi.size(); ++i) {
        const auto path = fmt::format("control.upper[{}]", i);
        upper.push_back(parse_field(expr_text(hi[i], path), tsym, path));
      }
      U = ControlSet::box(std::move(lower), std::move(upper));
    } else if (kind == "finite") {
      std::vector<Vector> pts;
      for (const auto& p : require(ctl, "points", "control.")) {
        const auto v = p.get<std::vector<double>>();
        pts.push_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
      }
      U = ControlSet::finite(std::move(pts));
    } else {
      throw ConfigError(fmt::format("control.kind: unknown kind '{}' (expected box or finite)", kind));
    }

    Vector x0;
    if (doc.contains("x0")) {
      const auto v = doc.at("x0").get<std::vector<double>>();
      x0 = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
      if (static_cast<std::size_t>(x0.size()) != m)
        throw ConfigError(fmt::format("dimension mismatch: x0 has length {} but state_dim is {}", x0.size(), m));
    }
    std::string label = doc.value("label", std::string());

    ProblemDocument out{ControlProblem(m, k, std::move(f), std::move(g), std::move(U), x0, label), std::nullopt, {}};
    if (doc.contains("reference")) {
      const json& ref = require(doc.at("reference"), "u", "reference.");
      const auto xsyms = ControlProblem::state_symbols(m);
      std::vector<Expr> laws;
      for (std::size_t i = 0; i < ref.size(); ++i) {
        const auto path = fmt::format("reference.u[{}]", i);
        out.reference_source.push_back(expr_text(ref[i], path));
        laws.push_back(parse_field(out.reference_source.back(), xsyms, path));
      }
      if (laws.size() != k) throw ConfigError("dimension mismatch: reference.u must have control_dim entries");
      out.reference = ReferenceControl::feedback(std::move(laws));
    }
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("malformed problem document: {}", e.what()));
  }
}

ControlProblem load_problem(std::string_view text) { return load_document(text).problem; }

std::string save_problem(const ControlProblem& p, const std::vector<std::string>& reference_source) {
  json doc;
  doc["label"] = p.label();
  doc["state_dim"] = p.state_dim();
  doc["control_dim"] = p.control_dim();
  json dyn = json::array();
  for (const auto& f : p.dynamics_exprs()) dyn.push_back(f.source());
  doc["dynamics"] = dyn;
  doc["payoff"] = p.payoff_expr().source();
  json ctl;
  if (p.control_set().kind() == ControlSet::Kind::Box) {
    ctl["kind"] = "box";
    json lo = json::array(), hi = json::array();
    for (const auto& e : p.control_set().lower()) lo.push_back(e.source());
    for (const auto& e : p.control_set().upper()) hi.push_back(e.source());
    ctl["lower"] = lo;
    ctl["upper"] = hi;
  } else {
    ctl["kind"] = "finite";
    json pts = json::array();
    for (const auto& v : p.control_set().points()) pts.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    ctl["points"] = pts;
  }
  doc["control"] = ctl;
  doc["x0"] = std::vector<double>(p.x0().data(), p.x0().data() + p.x0().size());
  if (!reference_source.empty()) doc["reference"]["u"] = reference_source;
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Builtins

namespace {

struct BuiltinSpec {
  const char* name;
  const char* description;
  std::vector<std::string> dynamics;
  std::string payoff;
  double lower, upper;
  double x0;
  std::string reference;
};

const std::vector<BuiltinSpec>& builtin_specs() {
  static const std::vector<BuiltinSpec> specs = {
      {"scalar-exp",
       "x' = u, g = e^-t (x - u^2/2), u in [0,2]; u0 = 1, costate e^-t, I* = 1",
       {"u1"},
       "exp(-t)*(x1 - 0.5*u1^2)",
       0.0,
       2.0,
       0.0,
       "1"},
      {"halkin",
       "x' = (1-x)u, g = (1-x)u, u in [0,1]; u0 = 1, psi = -1/2 while psi(t) does not vanish",
       {"(1-x1)*u1"},
       "(1-x1)*u1",
       0.0,
       1.0,
       0.0,
       "1"},
      {"lq-discounted",
       "x' = -x/2 + u, g = e^-t (-x^2 - u^2), x(0) = 1, u in [-1,1]; Riccati feedback u0 = -(sqrt2-1) x",
       {"-0.5*x1 + u1"},
       "exp(-t)*(-x1^2 - u1^2)",
       -1.0,
       1.0,
       1.0,
       "-(sqrt(2) - 1)*exp(-(sqrt(2) - 0.5)*t)"},
      {"monotone-growth",
       "x' = u, g = e^-t x, u in [0,1]; u0 = 1, dg/dx > 0 gives a nonnegative costate",
       {"u1"},
       "exp(-t)*x1",
       0.0,
       1.0,
       0.0,
       "1"},
  };
  return specs;
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& s : builtin_specs()) n.emplace_back(s.name);
    return n;
  }();
  return names;
}

Benchmark benchmark(std::string_view name) {
  for (const auto& s : builtin_specs()) {
    if (name != s.name) continue;
    Vector lo(1), hi(1), x0(1);
    lo << s.lower;
    hi << s.upper;
    x0 << s.x0;
    auto problem = ControlProblem::from_strings(1, 1, s.dynamics, s.payoff, ControlSet::box(lo, hi), x0, s.name);
    Benchmark b{s.name, s.description, std::move(problem),
                ReferenceControl::feedback(1, {s.reference}), {s.reference}, 10.0, Vector(1), Vector(1)};
    b.probe_lower << -2.0;
    b.probe_upper << 2.0;
    return b;
  }
  std::string available;
  for (const auto& n : builtin_names()) available += (available.empty() ? "" : ", ") + n;
  throw ConfigError(fmt::format("unknown builtin '{}' (available: {})", name, available));
}

ControlProblem builtin(std::string_view name) { return benchmark(name).problem; }

}  // namespace hpmp
