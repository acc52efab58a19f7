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

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "horizon_pmp/expr.hpp"

namespace hpmp {

using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Matrix = Eigen::MatrixXd;

/// Compact control constraint U(t): a time-dependent box or a finite point set.
class ControlSet {
 public:
  enum class Kind { Box, Finite };

  /// Bounds are expressions in `t` only.
  static ControlSet box(std::vector<Expr> lower, std::vector<Expr> upper);
  static ControlSet box(const Vector& lower, const Vector& upper);
  static ControlSet finite(std::vector<Vector> points);

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

  /// Box bounds at time t. Throws DomainError if a bound cannot be evaluated.
  [[nodiscard]] std::pair<Vector, Vector> bounds(double t) const;
  [[nodiscard]] const std::vector<Expr>& lower() const noexcept { return lower_; }
  [[nodiscard]] const std::vector<Expr>& upper() const noexcept { return upper_; }
  [[nodiscard]] const std::vector<Vector>& points() const noexcept { return points_; }

  [[nodiscard]] bool contains(double t, const Vector& u, double tol = 1e-9) const;

 private:
  Kind kind_ = Kind::Box;
  std::size_t dim_ = 0;
  std::vector<Expr> lower_, upper_;
  std::vector<Vector> points_;
};

/// Infinite-horizon problem: maximize lim J_T, J_T = int_0^T g(t,x,u) dt,
/// subject to x' = f(t,x,u), x(0) = x0, u(t) in U(t).
///
/// Expressions are over the symbols {t, x1..xm, u1..uk}; values are bound in
/// that order.
class ControlProblem {
 public:
  ControlProblem(std::size_t state_dim, std::size_t control_dim, std::vector<Expr> dynamics, Expr payoff,
                 ControlSet control_set, Vector x0, std::string label);

  /// Parse dynamics/payoff strings against the standard symbol set.
  static ControlProblem from_strings(std::size_t state_dim, std::size_t control_dim,
                                     const std::vector<std::string>& dynamics, const std::string& payoff,
                                     ControlSet control_set, std::optional<Vector> x0 = std::nullopt,
                                     std::string label = {});

  [[nodiscard]] static std::vector<std::string> symbols(std::size_t state_dim, std::size_t control_dim);
  [[nodiscard]] static std::vector<std::string> state_symbols(std::size_t state_dim);

  [[nodiscard]] std::size_t state_dim() const noexcept { return m_; }
  [[nodiscard]] std::size_t control_dim() const noexcept { return k_; }
  [[nodiscard]] const std::vector<Expr>& dynamics_exprs() const noexcept { return f_; }
  [[nodiscard]] const Expr& payoff_expr() const noexcept { return g_; }
  [[nodiscard]] const ControlSet& control_set() const noexcept { return U_; }
  [[nodiscard]] const Vector& x0() const noexcept { return x0_; }
  [[nodiscard]] const std::string& label() const noexcept { return label_; }

  [[nodiscard]] ControlProblem with_x0(const Vector& x0) const;

  [[nodiscard]] Vector dynamics(double t, const Vector& x, const Vector& u) const;
  [[nodiscard]] double payoff(double t, const Vector& x, const Vector& u) const;
  /// df/dx, m x m, built column by column with dual numbers.
  [[nodiscard]] Matrix state_jacobian(double t, const Vector& x, const Vector& u) const;
  /// dg/dx as a row vector.
  [[nodiscard]] RowVector payoff_gradient(double t, const Vector& x, const Vector& u) const;

 private:
  [[nodiscard]] std::vector<double> bind(double t, const Vector& x, const Vector& u) const;

  std::size_t m_, k_;
  std::vector<Expr> f_;
  Expr g_;
  ControlSet U_;
  Vector x0_;
  std::string label_;
};

/// Behaviour behind a ReferenceControl. `piece_start` identifies the smooth
/// piece being integrated (its left end), so piecewise laws return the value of
/// that piece even at its right end.
class ControlLaw {
 public:
  virtual ~ControlLaw() = default;
  [[nodiscard]] virtual Vector value(double t, const Vector& x, double piece_start) const = 0;
  /// Discontinuity times strictly inside (a, b), ascending.
  virtual void breakpoints(double a, double b, std::vector<double>& out) const = 0;
  [[nodiscard]] virtual bool depends_on_state() const { return false; }
};

/// Candidate control u0: piecewise constant on a grid, a closed-loop law
/// u_i(t, x), or a derived variant. Immutable and cheap to copy.
class ReferenceControl {
 public:
  ReferenceControl() = default;
  explicit ReferenceControl(std::shared_ptr<const ControlLaw> law) : law_(std::move(law)) {}

  /// `values[i]` holds on [grid[i], grid[i+1]); the last value extends past the grid.
  static ReferenceControl piecewise_constant(std::vector<double> grid, std::vector<Vector> values);
  static ReferenceControl constant(const Vector& value);
  /// Expressions over {t, x1..xm}.
  static ReferenceControl feedback(std::vector<Expr> laws);
  static ReferenceControl feedback(std::size_t state_dim, const std::vector<std::string>& laws);
  /// `base` everywhere except [a, b), where the control is `value`.
  static ReferenceControl spliced(ReferenceControl base, double a, double b, const Vector& value);

  [[nodiscard]] bool valid() const noexcept { return law_ != nullptr; }
  [[nodiscard]] Vector value(double t, const Vector& x) const { return law_->value(t, x, t); }
  [[nodiscard]] Vector value(double t, const Vector& x, double piece_start) const {
    return law_->value(t, x, piece_start);
  }
  [[nodiscard]] std::vector<double> breakpoints(double a, double b) const;
  [[nodiscard]] bool depends_on_state() const { return law_->depends_on_state(); }
  [[nodiscard]] const ControlLaw& law() const { return *law_; }

 private:
  std::shared_ptr<const ControlLaw> law_;
};

/// One structural check from `validate`.
struct ValidationCheck {
  std::string name;
  bool passed = true;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  [[nodiscard]] bool ok() const;
  [[nodiscard]] const ValidationCheck* find(std::string_view name) const;
};

/// Numerically probe conditions on compactness of U, boundedness of f and g,
/// and finiteness of df/dx, dg/dx over probe_times x [box_lower, box_upper].
[[nodiscard]] ValidationReport validate(const ControlProblem& p, std::span<const double> probe_times,
                                        const Vector& box_lower, const Vector& box_upper);

/// Check that `u` stays in U(t) at the given times, with the state supplied by
/// `state` (needed for feedback laws). Returns the first violation, if any.
[[nodiscard]] std::optional<std::string> check_admissible(const ControlProblem& p, const ReferenceControl& u,
                                                          std::span<const double> times,
                                                          const std::function<Vector(double)>& state);

/// A problem document: the problem plus an optional reference control.
struct ProblemDocument {
  ControlProblem problem;
  std::optional<ReferenceControl> reference;
  std::vector<std::string> reference_source;  // expression strings of `reference`
};

/// Load a JSON problem document. Fields: state_dim, control_dim, dynamics,
/// payoff, control.kind (box|finite), control.lower/upper or control.points,
/// optional x0 (default zero), label, reference.u.
[[nodiscard]] ProblemDocument load_document(std::string_view text);
[[nodiscard]] ControlProblem load_problem(std::string_view text);
[[nodiscard]] std::string save_problem(const ControlProblem& p,
                                       const std::vector<std::string>& reference_source = {});

/// Analytic benchmark with its reference control and documented probe set.
struct Benchmark {
  std::string name;
  std::string description;
  ControlProblem problem;
  ReferenceControl reference;
  std::vector<std::string> reference_source;
  double probe_t_end = 10.0;
  Vector probe_lower;
  Vector probe_upper;
};

[[nodiscard]] const std::vector<std::string>& builtin_names();
[[nodiscard]] Benchmark benchmark(std::string_view name);
[[nodiscard]] ControlProblem builtin(std::string_view name);

}  // namespace hpmp
