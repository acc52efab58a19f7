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

#include <optional>
#include <string>
#include <vector>

#include "horizon_pmp/ode.hpp"

namespace hpmp {

/// I_xi(T) = int_0^T g_x(t, x_xi(t), u0(t)) A_xi(t) dt along the start
/// x_xi(0) = x0 + xi, with u0 held open-loop along the nominal trajectory.
///
/// Samples live on the matrix node grid. `increments[k] = I(t_{k+1}) - I(t_k)`
/// is kept separately so tails can be summed without cancellation.
struct AccumulatedIntegral {
  Vector xi;
  std::vector<double> t;
  std::vector<RowVector> I;
  std::vector<RowVector> increments;
  std::vector<RowVector> local;                // int over [t_k, t_{k+1}] of g_x Phi(s, t_k) ds
  std::vector<double> checkpoints;             // 1, 2, 4, ... up to the span end
  std::vector<std::size_t> checkpoint_index;   // node index of each checkpoint
  std::optional<Trajectory> x;                 // x_xi, dense
  std::optional<MatrixArc> A;                  // A_xi on the same nodes

  /// Samples without trajectory data, e.g. for classifying a known curve.
  [[nodiscard]] static AccumulatedIntegral from_samples(std::vector<double> t, std::vector<RowVector> I);

  [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
  [[nodiscard]] double t_end() const { return t.back(); }
  /// Sample at a node time (within 1e-12). Throws PreconditionError otherwise.
  [[nodiscard]] const RowVector& at(double T) const;
  [[nodiscard]] std::size_t index_of(double T) const;
  /// int_{t_k}^{t_end} g_x A dt as a suffix sum of increments.
  [[nodiscard]] RowVector tail(std::size_t k) const;
};

/// Open-loop version of u0 along the nominal trajectory on [0, t_end].
[[nodiscard]] ReferenceControl open_loop_reference(const ControlProblem& p, const ReferenceControl& u0, double t_end,
                                                   const OdeOptions& opts = {});

[[nodiscard]] AccumulatedIntegral accumulate(const ControlProblem& p, const ReferenceControl& u0, const Vector& xi,
                                             double t_max, const OdeOptions& opts = {});

/// int_{span} g_x A dt for A(span.begin) = a_start, x(span.begin) = x_start.
[[nodiscard]] RowVector accumulate_segment(const ControlProblem& p, const ReferenceControl& u0, const Vector& x_start,
                                           const Matrix& a_start, Span span, const OdeOptions& opts = {});

struct ConvergenceVerdict {
  enum class Kind { Converged, Diverged, Oscillating };
  Kind kind = Kind::Oscillating;
  RowVector limit;                       // I_* when converged
  std::vector<RowVector> clusters;       // cluster points when oscillating
  std::vector<double> window_end;        // right ends of doubling windows
  std::vector<double> oscillation;       // sup-oscillation per window
  std::vector<double> window_max;        // max |I| per window
  double growth_exponent = 0.0;          // log-log slope of |I| over the last checkpoints
  double tolerance = 0.0;
};

[[nodiscard]] std::string to_string(ConvergenceVerdict::Kind k);

/// Needs at least 4 doubling checkpoints.
[[nodiscard]] ConvergenceVerdict classify_convergence(const AccumulatedIntegral& acc, double tol = 1e-6);

struct ContinuityRow {
  double radius = 0.0;
  std::size_t direction = 0;
  Vector xi;
  double sup_difference = 0.0;  // sup_T |I_xi(T) - I_0(T)|
  std::string error;            // nonempty when the perturbed run failed
};

struct ContinuityProbe {
  std::vector<ContinuityRow> rows;
  bool decreasing = true;         // sups shrink with the radius in every direction
  double modulus_exponent = 0.0;  // fit sup ~ C r^p
  double modulus_constant = 0.0;
};

/// Radii must be positive and strictly decreasing. Runs perturbed starts in parallel.
[[nodiscard]] ContinuityProbe continuity_probe(const ControlProblem& p, const ReferenceControl& u0,
                                               const std::vector<double>& radii, const std::vector<Vector>& directions,
                                               double t_max, const OdeOptions& opts = {});

struct CauchyAdjoint {
  double lambda = 1.0;   // 1 / (1 + |I_*|)
  RowVector limit;       // I_*
  AdjointArc psi;        // normalized: lambda (I_* - I(T)) A^{-1}(T)
  AdjointArc psi_unit;   // lambda = 1 form
  double terminal_condition = 1.0;  // cond A(t_end), used only when the limit differs from I(t_end)
};

/// Cauchy-type adjoint on [0, t_psi] from a converged verdict or a chosen
/// partial limit, by backward recursion over the segment propagators. Throws SingularMatrixError when the limit differs from I(t_end)
/// and A(t_end) is singular.
[[nodiscard]] CauchyAdjoint cauchy_adjoint(const ControlProblem& p, const ReferenceControl& u0,
                                           const AccumulatedIntegral& acc, const RowVector& limit, double t_psi);
[[nodiscard]] CauchyAdjoint cauchy_adjoint(const ControlProblem& p, const ReferenceControl& u0,
                                           const AccumulatedIntegral& acc, const ConvergenceVerdict& verdict,
                                           double t_psi);

struct AbnormalityReport {
  std::vector<double> taus;
  std::vector<double> sup_norm;   // max over probed xi of |I_xi(tau)|
  double growth_exponent = 0.0;
  bool excluded = false;
  std::string message;
};

[[nodiscard]] AbnormalityReport abnormality_indicator(const ControlProblem& p, const ReferenceControl& u0,
                                                      const std::vector<double>& radii, const std::vector<double>& taus,
                                                      const OdeOptions& opts = {});

/// sup over the nodes of psi's span of |psi(T)^T A(T) - lambda (I_* - I(T))|.
[[nodiscard]] double verify_product_identity(const AdjointArc& psi, double lambda, const AccumulatedIntegral& acc,
                                             const RowVector& limit);

/// `xi_1..xi_m,T,I_1..I_m`
[[nodiscard]] std::string to_csv(const AccumulatedIntegral& acc);

}  // namespace hpmp
