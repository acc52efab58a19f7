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

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "horizon_pmp/problem.hpp"

namespace hpmp {

struct OdeOptions {
  double atol = 1e-10;
  double rtol = 1e-8;
  double max_step = 0.125;
  double blowup = 1e12;           // state norm treated as finite escape
  std::size_t max_steps = 20'000'000;
  double matrix_grid = 1.0 / 32;  // node spacing of matrix arcs
};

/// Closed time interval. `begin < end`.
struct Span {
  double begin = 0.0;
  double end = 0.0;
  [[nodiscard]] double length() const noexcept { return end - begin; }
};

/// Right-hand side y' = F(t, y). `piece` is the left end of the smooth piece
/// being integrated; piecewise laws use it to pick the correct branch.
using OdeRhs = std::function<void(double t, const Vector& y, double piece, Vector& dy)>;

/// Node data of an integration, ascending in time. At a restart node the
/// one-sided derivatives differ. `correction[i]` is the quartic term of the
/// Dormand-Prince continuous extension on [t_i, t_{i+1}] (empty means cubic
/// Hermite only).
struct DenseSolution {
  std::vector<double> t;
  std::vector<Vector> y, dleft, dright;
  std::vector<Vector> correction;
};

/// Dormand-Prince 5(4) from t0 to t1 (either direction), restarting at every
/// breakpoint strictly between them.
[[nodiscard]] DenseSolution integrate(const OdeRhs& rhs, const Vector& y0, double t0, double t1,
                                      std::span<const double> breakpoints, const OdeOptions& opts = {});

/// Vector-valued curve: cubic Hermite between nodes plus the integrator's
/// fourth-order correction when available.
class VectorArc {
 public:
  VectorArc() = default;
  explicit VectorArc(DenseSolution sol);

  [[nodiscard]] std::size_t size() const noexcept { return t_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return y_.empty() ? 0 : static_cast<std::size_t>(y_[0].size()); }
  [[nodiscard]] const std::vector<double>& times() const noexcept { return t_; }
  [[nodiscard]] double t(std::size_t i) const { return t_[i]; }
  [[nodiscard]] const Vector& value(std::size_t i) const { return y_[i]; }
  [[nodiscard]] const Vector& dleft(std::size_t i) const { return dl_[i]; }
  [[nodiscard]] const Vector& dright(std::size_t i) const { return dr_[i]; }
  [[nodiscard]] Span span() const { return {t_.front(), t_.back()}; }

  /// Interpolated value. Throws PreconditionError outside the span.
  [[nodiscard]] Vector operator()(double t) const;
  /// Derivative of the interpolant (right derivative at nodes).
  [[nodiscard]] Vector derivative(double t) const;

  /// Scale every value and derivative by c.
  void scale(double c);

 protected:
  [[nodiscard]] std::size_t interval(double t) const;

  std::vector<double> t_;
  std::vector<Vector> y_, dl_, dr_, corr_;
};

/// State curve x(t).
class Trajectory : public VectorArc {
 public:
  using VectorArc::VectorArc;
};

/// Costate curve psi(t), stored as column vectors.
class AdjointArc : public VectorArc {
 public:
  using VectorArc::VectorArc;
};

/// Inverse of a matrix together with its 2-norm condition number.
struct InverseResult {
  Matrix inverse;
  double condition = 1.0;
};

/// Matrix curve A(t) on a node grid. Stores the one-step propagators
/// Phi_k with A(t_{k+1}) = Phi_k A(t_k) and log|det A| accumulated from traces.
class MatrixArc {
 public:
  MatrixArc() = default;
  MatrixArc(std::vector<double> t, std::vector<Matrix> a, std::vector<double> logdet, std::vector<Matrix> steps,
            std::vector<Matrix> dleft, std::vector<Matrix> dright);

  /// Constant identity on [a, b] with the given node spacing.
  [[nodiscard]] static MatrixArc identity(std::size_t dim, Span span, double spacing = 1.0 / 32);

  [[nodiscard]] std::size_t size() const noexcept { return t_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return a_.empty() ? 0 : static_cast<std::size_t>(a_[0].rows()); }
  [[nodiscard]] const std::vector<double>& times() const noexcept { return t_; }
  [[nodiscard]] double t(std::size_t i) const { return t_[i]; }
  [[nodiscard]] const Matrix& value(std::size_t i) const { return a_[i]; }
  [[nodiscard]] double logdet(std::size_t i) const { return logdet_[i]; }
  /// Propagator from node i to node i+1.
  [[nodiscard]] const Matrix& step(std::size_t i) const { return steps_[i]; }
  [[nodiscard]] Span span() const { return {t_.front(), t_.back()}; }

  [[nodiscard]] Matrix operator()(double t) const;
  /// Index of the node equal to t (within 1e-12), if any.
  [[nodiscard]] std::optional<std::size_t> node_index(double t) const;

 private:
  std::vector<double> t_;
  std::vector<Matrix> a_;
  std::vector<double> logdet_;
  std::vector<Matrix> steps_;
  std::vector<Matrix> dl_, dr_;
};

/// A(t)^{-1} by LU with partial pivoting. Throws SingularMatrixError when the
/// condition number exceeds 1e14.
[[nodiscard]] InverseResult inverse_at(const MatrixArc& a, double t);
[[nodiscard]] InverseResult checked_inverse(const Matrix& a);

/// Open-loop control t -> law(t, x(t)) along a fixed trajectory. Identity for
/// laws that ignore the state.
[[nodiscard]] ReferenceControl along_trajectory(const ReferenceControl& u, const Trajectory& x);

[[nodiscard]] Trajectory integrate_state(const ControlProblem& p, const ReferenceControl& u, const Vector& x_init,
                                         Span span, const OdeOptions& opts = {});

/// psi' = -(f_x^T psi + lambda g_x^T) backward from psi(span.end) = psi_terminal.
[[nodiscard]] AdjointArc integrate_adjoint_backward(const ControlProblem& p, const ReferenceControl& u,
                                                    const Trajectory& x, double lambda, const Vector& psi_terminal,
                                                    Span span, const OdeOptions& opts = {});

/// A' = f_x(t, x(t), u(t)) A, A(span.begin) = I.
[[nodiscard]] MatrixArc fundamental_matrix(const ControlProblem& p, const ReferenceControl& u, const Trajectory& x,
                                           Span span, const OdeOptions& opts = {});

/// Node grid of a matrix arc: uniform spacing plus control breakpoints.
[[nodiscard]] std::vector<double> matrix_nodes(Span span, double spacing, std::span<const double> breakpoints);

/// CSV with header `t,<column>1..<column>m` (matrices row-major `a11..amm`), 17 significant digits.
[[nodiscard]] std::string to_csv(const VectorArc& arc, std::string_view column = "v");
[[nodiscard]] std::string to_csv(const MatrixArc& arc);

}  // namespace hpmp
