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
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "horizon_pmp/ode.hpp"

namespace hpmp {

/// H = psi . f(t,x,u) + lambda g(t,x,u).
[[nodiscard]] double hamiltonian(const ControlProblem& p, const Vector& x, double t, const Vector& u, double lambda,
                                 const Vector& psi);

/// Deviation weight w(t,u) = |u - center(t)|^2. `center` must be open-loop.
class DeviationWeight {
 public:
  DeviationWeight() = default;
  explicit DeviationWeight(ReferenceControl center) : center_(std::move(center)) {}
  [[nodiscard]] bool active() const noexcept { return center_.valid(); }
  [[nodiscard]] double operator()(double t, const Vector& u, double piece_start) const;
  [[nodiscard]] double operator()(double t, const Vector& u) const { return (*this)(t, u, t); }
  [[nodiscard]] const ReferenceControl& center() const noexcept { return center_; }

 private:
  ReferenceControl center_;
};

struct MaximizeOptions {
  int grid_points = 33;    // coarse grid per control coordinate
  double tolerance = 1e-8;  // golden-section bracket width
  int max_sweeps = 8;       // coordinatewise refinement passes
};

struct HamiltonianMax {
  Vector u;
  double value = 0.0;
};

/// Maximize H - gamma * w over U(t). Box sets use a coarse grid followed by
/// coordinatewise golden-section refinement; finite sets are scanned. Ties go
/// to the lexicographically smallest control.
[[nodiscard]] HamiltonianMax maximize_hamiltonian(const ControlProblem& p, const Vector& x, double t, double lambda,
                                                  const Vector& psi, double gamma = 0.0,
                                                  const DeviationWeight& w = {}, const MaximizeOptions& opts = {});

/// Candidate extremal (x, u, lambda, psi).
struct Extremal {
  Trajectory x;
  ReferenceControl u;
  std::vector<double> grid;     // control grid: u = values[i] on [grid[i], grid[i+1])
  std::vector<Vector> values;
  double lambda = 1.0;
  AdjointArc psi;
  double horizon = std::numeric_limits<double>::infinity();
  double gamma = 0.0;           // coefficient of w in the maximized function (scales with psi)
  DeviationWeight weight;
  double max_residual = 0.0;    // on the construction grid, for H - gamma w
  double objective = 0.0;       // J - gamma L at the horizon
  std::vector<double> objective_history;  // accepted sweep iterates
  std::size_t iterations = 0;
  bool converged = true;
  std::string note;
};

/// sup over grid of [max_U (H - gamma w) - (H - gamma w)(u(t))], with the
/// extremal's own lambda, psi and construction penalty.
[[nodiscard]] double max_residual(const ControlProblem& p, const Extremal& e, std::span<const double> grid);

/// Rescale so that lambda + |psi(0)| = 1. Throws PreconditionError when both vanish.
struct Multipliers {
  double lambda;
  double scale;  // factor applied to psi
};
[[nodiscard]] Multipliers normalize(double lambda_raw, AdjointArc& psi);

struct SweepOptions {
  double control_step = 0.05;
  double theta = 0.5;
  double change_tol = 1e-7;
  std::size_t max_iterations = 500;
  OdeOptions ode;
  MaximizeOptions maximize;
};

/// Forward-backward sweep for max J_tau - gamma L_w with free endpoint psi(tau) = 0.
/// Runs with lambda = 1, then rescales so that lambda + |psi(0)| = 1 (gamma
/// scales along, keeping the maximized function's argmax).
[[nodiscard]] Extremal solve_finite_horizon(const ControlProblem& p, double tau, double gamma, const DeviationWeight& w,
                                            const ReferenceControl& u_init, const SweepOptions& opts = {});

/// Payoff J_tau(u) at several horizons in one integration.
[[nodiscard]] std::vector<double> payoffs(const ControlProblem& p, const ReferenceControl& u,
                                          std::span<const double> taus, const OdeOptions& opts = {});

/// u0 with a random bang segment spliced in, drawn from a seeded generator.
[[nodiscard]] std::vector<ReferenceControl> bang_pool(const ControlProblem& p, const ReferenceControl& u0,
                                                      std::size_t count, double horizon, std::uint64_t seed);

struct OmegaEstimate {
  std::vector<double> taus;
  std::vector<double> raw;       // max over pool of [J(u) - J(u0)]_+
  std::vector<double> omega;     // non-increasing right envelope of raw
  std::size_t pool_size = 0;
};

/// Competitors are u0 plus every control in `pool`; `pool_size` counts both.
[[nodiscard]] OmegaEstimate estimate_omega(const ControlProblem& p, const ReferenceControl& u0,
                                           std::span<const double> taus, const std::vector<ReferenceControl>& pool,
                                           const OdeOptions& opts = {});

struct TruncationOptions {
  std::size_t pool_size = 50;
  std::uint64_t seed = 0;
  bool use_pool = true;  // false: pool = {u0}, so every gamma_n = 0
  SweepOptions sweep;
};

struct TruncationStep {
  double tau;
  double gamma;
  double omega;
  Extremal extremal;  // normalized
  double psi0_change = std::numeric_limits<double>::quiet_NaN();  // vs previous n
  double lambda_change = std::numeric_limits<double>::quiet_NaN();
  std::string error;  // nonempty when this n failed
};

struct TruncationRun {
  std::vector<TruncationStep> steps;
  OmegaEstimate omega;
  std::uint64_t seed = 0;
  [[nodiscard]] bool all_converged() const;
  /// Last successful step, if any.
  [[nodiscard]] const TruncationStep* final_step() const;
};

[[nodiscard]] TruncationRun run_truncation(const ControlProblem& p, const ReferenceControl& u0,
                                           std::span<const double> taus, const TruncationOptions& opts = {});

/// `n,tau_n,gamma_n,lambda_n,psi0_1..psi0_m,residual,converged`
[[nodiscard]] std::string to_csv(const TruncationRun& run, std::size_t state_dim);

}  // namespace hpmp
