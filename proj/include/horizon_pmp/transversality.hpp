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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "horizon_pmp/cauchy.hpp"
#include "horizon_pmp/pmp.hpp"

namespace hpmp {

enum class Verdict { Holds, Fails, Inconclusive };

[[nodiscard]] std::string to_string(Verdict v);
/// Inverse of to_string. Throws ParseError on unknown text.
[[nodiscard]] Verdict parse_verdict(std::string_view s);

/// Named numeric columns backing a verdict.
struct Evidence {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  [[nodiscard]] std::vector<double> column(std::string_view name) const;
};

/// Sup-norm of a scalar curve over doubling windows anchored at the span end:
/// [T-1, T], [T-2, T-1], [T-4, T-2], ... (stored in time order). Each window is
/// sampled on a 1/32 grid plus the given extra nodes.
struct WindowStats {
  std::vector<double> start, end, sup;
};
[[nodiscard]] WindowStats window_stats(const std::function<double(double)>& norm, Span span,
                                       const std::vector<double>& extra_nodes = {});

struct LimitCheck {
  Verdict verdict = Verdict::Inconclusive;
  Evidence evidence;
  std::vector<double> subsequence;  // empty for full-limit checks
  double tolerance = 0.0;
};

/// lim psi(t) = 0. Needs at least 4 windows (span length >= 8).
///   holds: the last 3 window sups are <= tol and non-increasing;
///   fails: the last 3 exceed 10 tol and the final sup is >= 0.9 of the first;
///   inconclusive otherwise.
[[nodiscard]] LimitCheck check_plain_limit(const VectorArc& psi, double tol = 1e-6);

/// liminf |psi(tau_n)| = 0 judged on the last third of the sequence.
[[nodiscard]] LimitCheck check_subsequence_limit(const VectorArc& psi, const std::vector<double>& taus,
                                                 double tol = 1e-6);

enum class WeightMode { Liminf, FullLimit };

/// The plain or subsequence logic applied to t -> psi(t)^T A(t). In liminf mode
/// an empty `taus` means the sample grid of the whole span.
[[nodiscard]] LimitCheck check_weighted_limit(const VectorArc& psi, const MatrixArc& a, WeightMode mode,
                                              double tol = 1e-6, const std::vector<double>& taus = {});

/// |g_x| |A|_2 sampled along one trajectory.
struct DominanceSample {
  std::string label;
  std::vector<double> t;
  std::vector<double> product;
};

struct DominanceFit {
  double alpha = 0.0;  // +inf when every product vanishes
  double beta = 0.0;
  bool holds = false;
  std::size_t sample_size = 0;      // trajectories
  std::vector<double> alpha_each;   // per trajectory, +inf for an all-zero product
  std::vector<double> beta_each;
  double max_log_excess = 0.0;      // worst log(product) above the fitted bound
  double beta_envelope = 0.0;       // smallest beta keeping every sample under the bound
};

/// Least squares of log(product) against t per trajectory (zeros skipped).
/// Aggregate alpha is the minimum and beta the maximum over trajectories.
/// Holds when alpha > 0.01; beta_envelope then gives a bound covering every sample.
[[nodiscard]] DominanceFit fit_exponential_dominance(const std::vector<DominanceSample>& samples);

/// Samples |g_x| |A|_2 at the matrix nodes for each control on `span`.
[[nodiscard]] std::vector<DominanceSample> dominance_samples(const ControlProblem& p,
                                                             const std::vector<ReferenceControl>& controls,
                                                             Span span, const OdeOptions& opts = {});

[[nodiscard]] DominanceFit fit_exponential_dominance(const ControlProblem& p,
                                                     const std::vector<ReferenceControl>& controls, Span span,
                                                     const OdeOptions& opts = {});

struct LyapunovOptions {
  double interval = 0.5;     // re-orthonormalization period
  double min_span = 40.0;
  bool adjoint_flow = true;  // false: exponents of A itself
};

/// Time-averaged log R-diagonals of periodic QR, sorted descending. The adjoint
/// flow propagates with the inverse transpose of each step.
[[nodiscard]] std::vector<double> lyapunov_exponents(const MatrixArc& a, const LyapunovOptions& opts = {});

struct MonotoneReport {
  bool gradient_nonnegative = true;  // g_x >= 0 componentwise on the grid
  bool gradient_positive = true;
  bool offdiag_nonnegative = true;   // f_x off-diagonal >= 0
  bool offdiag_positive = true;
  std::vector<std::string> violations;
  std::optional<bool> psi_nonnegative;  // asserted only when the hypotheses pass
  std::optional<bool> psi_positive;     // strict variant
  double psi_min_component = 0.0;
  std::optional<bool> sandwich_holds;   // lambda max_xi I_xi >= psi(0) >= lambda I_0 >= 0
  Vector psi0, lower, upper;

  [[nodiscard]] bool hypotheses_hold() const noexcept { return gradient_nonnegative && offdiag_nonnegative; }
  [[nodiscard]] bool strict_hypotheses() const noexcept { return gradient_positive && offdiag_positive; }
};

/// `limit` is lim I_0; `perturbed_limits` are I_xi at the probe horizon. The
/// upper side of the sandwich uses the max over the probe set, a probe-scale
/// stand-in for the limsup.
[[nodiscard]] MonotoneReport monotone_analysis(const ControlProblem& p, const ReferenceControl& u0,
                                               const Trajectory& x, const std::vector<double>& probe_times,
                                               const VectorArc& psi, double lambda, const RowVector& limit,
                                               const std::vector<RowVector>& perturbed_limits);

struct ConditionEntry {
  std::string id;
  Verdict verdict = Verdict::Inconclusive;
  Evidence evidence;
  std::vector<double> subsequence;
  std::string note;
};

struct TransversalityReport {
  double tolerance = 1e-6;
  std::vector<ConditionEntry> entries;
  std::optional<DominanceFit> dominance;
  std::vector<double> lyapunov;  // adjoint flow, descending
  std::optional<MonotoneReport> monotone;
  std::vector<std::string> notes;

  [[nodiscard]] const ConditionEntry* find(std::string_view id) const;
  /// `id=verdict;id=verdict;...`
  [[nodiscard]] std::string summary_line() const;
  [[nodiscard]] std::string serialize() const;
  /// Throws ParseError on malformed input.
  [[nodiscard]] static TransversalityReport parse(std::string_view text);
};

[[nodiscard]] std::vector<std::pair<std::string, Verdict>> parse_summary_line(std::string_view line);

struct BatteryInput {
  AdjointArc psi;  // normalized candidate adjoint
  double lambda = 1.0;
  MatrixArc a;     // weight, the fundamental matrix by default
  bool a_is_fundamental = true;  // false: skip the dominance / weighted-limit cross-check
  std::vector<double> taus;  // empty: 1, 2, 4, ... inside the psi span
  std::vector<DominanceSample> dominance;  // empty: exponential dominance skipped
  // Monotone-case data; skipped when x is absent.
  std::optional<Trajectory> x;
  ReferenceControl u0;
  std::vector<double> probe_times;
  RowVector limit;
  std::vector<RowVector> perturbed_limits;
  std::vector<std::string> notes;  // carried into the report
};

struct BatteryOptions {
  double tol = 1e-6;
  LyapunovOptions lyapunov;
};

/// Runs every check and cross-references the verdicts.
[[nodiscard]] TransversalityReport run_battery(const ControlProblem& p, const BatteryInput& in,
                                               const BatteryOptions& opts = {});

/// Battery on a finite-horizon extremal with a given weight.
[[nodiscard]] TransversalityReport run_battery(const ControlProblem& p, const Extremal& e, const MatrixArc& a,
                                               const std::vector<double>& taus, const BatteryOptions& opts = {});

struct PrepareOptions {
  double t_max = 128.0;
  double t_psi = 64.0;
  double tol_conv = 1e-6;
  std::size_t dominance_controls = 8;  // bang perturbations of u0
  std::uint64_t seed = 0;
  double probe_radius = 1e-2;
  OdeOptions ode;
};

/// Cauchy adjoint, fundamental matrix, dominance sample and probe data for u0.
/// A non-converged integral falls back to the partial limit at t_max with a note.
/// `psi_override` replaces the computed adjoint (e.g. one read from disk).
[[nodiscard]] BatteryInput prepare_battery(const ControlProblem& p, const ReferenceControl& u0,
                                           const PrepareOptions& opts = {},
                                           const std::optional<AdjointArc>& psi_override = std::nullopt);

/// Weight arc from row-major entry expressions over t (dim * dim strings),
/// e.g. a scalar multiplier r(t) times the identity or a diagonal matrix.
/// Steps between singular nodes are NaN, so Lyapunov estimates on such a
/// weight report a degenerate re-orthonormalization.
[[nodiscard]] MatrixArc weight_from_expressions(std::size_t dim, const std::vector<std::string>& entries, Span span,
                                                double spacing = 1.0 / 32);

/// Arc through f on a uniform grid with derivative df.
[[nodiscard]] VectorArc tabulate_arc(const std::function<Vector(double)>& f, const std::function<Vector(double)>& df,
                                     Span span, double spacing = 1.0 / 32);

}  // namespace hpmp
