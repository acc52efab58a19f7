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

#include "horizon_pmp/pmp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "horizon_pmp/errors.hpp"
#include "horizon_pmp/io.hpp"

namespace hpmp {

double hamiltonian(const ControlProblem& p, const Vector& x, double t, const Vector& u, double lambda,
                   const Vector& psi) {
  double h = 0.0;
  // Zero multipliers contribute nothing, even where f or g are undefined.
  if (psi.size() > 0 && !psi.isZero(0.0)) h += psi.dot(p.dynamics(t, x, u));
  if (lambda != 0.0) h += lambda * p.payoff(t, x, u);
  return h;
}

double DeviationWeight::operator()(double t, const Vector& u, double piece_start) const {
  if (!active()) return 0.0;
  return (u - center_.value(t, Vector(), piece_start)).squaredNorm();
}

namespace {

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

bool nearly_equal(double a, double b) { return std::abs(a - b) <= 1e-14 * (1.0 + std::abs(a) + std::abs(b)); }

}  // namespace

HamiltonianMax maximize_hamiltonian(const ControlProblem& p, const Vector& x, double t, double lambda,
                                    const Vector& psi, double gamma, const DeviationWeight& w,
                                    const MaximizeOptions& opts) {
  const bool penalized = gamma != 0.0 && w.active();
  auto objective = [&](const Vector& u) {
    double v = hamiltonian(p, x, t, u, lambda, psi);
    if (penalized) v -= gamma * w(t, u);
    return v;
  };
  const ControlSet& U = p.control_set();

  if (U.kind() == ControlSet::Kind::Finite) {
    if (U.points().empty()) throw PreconditionError("control set is empty");
    HamiltonianMax best{U.points().front(), objective(U.points().front())};
    for (std::size_t i = 1; i < U.points().size(); ++i) {
      const Vector& u = U.points()[i];
      const double v = objective(u);
      if ((v > best.value && !nearly_equal(v, best.value)) || (nearly_equal(v, best.value) && lex_less(u, best.u)))
        best = {u, v};
    }
    return best;
  }

  const auto [lo, hi] = U.bounds(t);
  const auto k = lo.size();
  // Keep the coarse lattice below ~1e5 points.
  int per_axis = std::max(2, opts.grid_points);
  while (k > 1 && std::pow(static_cast<double>(per_axis), static_cast<double>(k)) > 1e5 && per_axis > 3) --per_axis;

  Vector cell(k);
  for (Eigen::Index i = 0; i < k; ++i) cell[i] = (hi[i] - lo[i]) / (per_axis - 1);

  // Lexicographic scan (first coordinate most significant) with strict
  // improvement keeps the smallest control among ties.
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  HamiltonianMax best{lo, objective(lo)};
  Vector u(k);
  while (true) {
    int pos = static_cast<int>(k) - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == per_axis - 1) idx[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (Eigen::Index i = 0; i < k; ++i) {
      const int j = idx[static_cast<std::size_t>(i)];
      u[i] = j == per_axis - 1 ? hi[i] : lo[i] + j * cell[i];
    }
    const double v = objective(u);
    if (v > best.value && !nearly_equal(v, best.value)) best = {u, v};
  }

  constexpr double kInvPhi = 0.6180339887498949;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double moved = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      if (cell[i] <= 0.0) continue;
      double a = std::max(lo[i], best.u[i] - cell[i]);
      double b = std::min(hi[i], best.u[i] + cell[i]);
      Vector trial = best.u;
      auto f = [&](double s) {
        trial[i] = s;
        return objective(trial);
      };
      const double a0 = a, b0 = b;
      double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
      double fc = f(c), fd = f(d);
      while (b - a > opts.tolerance) {
        if (fc >= fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - kInvPhi * (b - a);
          fc = f(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + kInvPhi * (b - a);
          fd = f(d);
        }
      }
      double s = 0.5 * (a + b);
      double fs = f(s);
      // Bracket ends of the search interval win when at least as good.
      for (double e : {b0, a0}) {
        const double fe = f(e);
        if (fe >= fs || nearly_equal(fe, fs)) {
          s = e;
          fs = fe;
        }
      }
      if (fs > best.value && !nearly_equal(fs, best.value)) {
        moved = std::max(moved, std::abs(s - best.u[i]));
        best.u[i] = s;
        best.value = fs;
      }
    }
    if (moved < opts.tolerance) break;
  }
  return best;
}

double max_residual(const ControlProblem& p, const Extremal& e, std::span<const double> grid) {
  double worst = 0.0;
  for (double t : grid) {
    const Vector x = e.x(t);
    const Vector psi = e.psi(t);
    const Vector u = e.u.value(t, x);
    double current = hamiltonian(p, x, t, u, e.lambda, psi);
    if (e.gamma != 0.0 && e.weight.active()) current -= e.gamma * e.weight(t, u);
    const auto best = maximize_hamiltonian(p, x, t, e.lambda, psi, e.gamma, e.weight);
    worst = std::max(worst, best.value - current);
  }
  return worst;
}

Multipliers normalize(double lambda_raw, AdjointArc& psi) {
  if (lambda_raw < 0.0) throw PreconditionError("lambda must be nonnegative");
  const double s = lambda_raw + psi.value(0).norm();
  if (!(s > 0.0)) throw PreconditionError("degenerate multipliers: lambda and psi(0) both vanish");
  psi.scale(1.0 / s);
  return {lambda_raw / s, 1.0 / s};
}

// ---------------------------------------------------------------------------
// Forward-backward sweep

namespace {

// Split the leading m components of an augmented solution into a trajectory.
Trajectory head(const DenseSolution& sol, Eigen::Index m) {
  DenseSolution out;
  out.t = sol.t;
  auto take = [m](const std::vector<Vector>& vs) {
    std::vector<Vector> r;
    r.reserve(vs.size());
    for (const auto& v : vs) r.emplace_back(v.head(m));
    return r;
  };
  out.y = take(sol.y);
  out.dleft = take(sol.dleft);
  out.dright = take(sol.dright);
  out.correction = take(sol.correction);
  return Trajectory(std::move(out));
}

struct Evaluation {
  Trajectory x;
  double payoff = 0.0;
  double deviation = 0.0;
  double objective = 0.0;
};

Evaluation evaluate(const ControlProblem& p, const ReferenceControl& u, double tau, double gamma,
                    const DeviationWeight& w, const OdeOptions& opts) {
  const auto m = static_cast<Eigen::Index>(p.state_dim());
  const bool penalized = gamma != 0.0 && w.active();
  const OdeRhs rhs = [&](double t, const Vector& y, double piece, Vector& dy) {
    const Vector x = y.head(m);
    const Vector ut = u.value(t, x, piece);
    dy.resize(m + 2);
    dy.head(m) = p.dynamics(t, x, ut);
    dy[m] = p.payoff(t, x, ut);
    dy[m + 1] = penalized ? w(t, ut, piece) : 0.0;
  };
  Vector y0 = Vector::Zero(m + 2);
  y0.head(m) = p.x0();
  const auto bps = u.breakpoints(0.0, tau);
  const auto sol = integrate(rhs, y0, 0.0, tau, bps, opts);
  Evaluation ev;
  ev.payoff = sol.y.back()[m];
  ev.deviation = sol.y.back()[m + 1];
  ev.objective = ev.payoff - (penalized ? gamma * ev.deviation : 0.0);
  ev.x = head(sol, m);
  return ev;
}

Vector project(const ControlSet& U, double t, const Vector& u) {
  if (U.kind() == ControlSet::Kind::Box) {
    const auto [lo, hi] = U.bounds(t);
    return u.cwiseMax(lo).cwiseMin(hi);
  }
  const Vector* best = nullptr;
  double dist = 0.0;
  for (const auto& pt : U.points()) {
    const double d = (pt - u).squaredNorm();
    if (!best || d < dist) {
      best = &pt;
      dist = d;
    }
  }
  if (!best) throw PreconditionError("control set is empty");
  return *best;
}

struct Proposal {
  std::vector<Vector> u;
  std::vector<double> gain;
  double change = 0.0;  // L1 distance to the current control
};

}  // namespace

Extremal solve_finite_horizon(const ControlProblem& p, double tau, double gamma, const DeviationWeight& w,
                              const ReferenceControl& u_init, const SweepOptions& opts) {
  if (!(tau > 0.0)) throw PreconditionError("horizon must be positive");
  if (!(gamma >= 0.0)) throw PreconditionError("penalty weight must be nonnegative");
  if (!u_init.valid()) throw PreconditionError("initial control is missing");
  const auto m = static_cast<Eigen::Index>(p.state_dim());
  const bool penalized = gamma != 0.0 && w.active();
  const ControlSet& U = p.control_set();

  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(tau / opts.control_step - 1e-9)));
  std::vector<double> grid(n + 1);
  for (std::size_t i = 0; i <= n; ++i) grid[i] = tau * static_cast<double>(i) / static_cast<double>(n);
  grid[n] = tau;

  std::vector<Vector> values(n);
  {
    std::optional<Trajectory> x_init;
    if (u_init.depends_on_state()) x_init = integrate_state(p, u_init, p.x0(), {0.0, tau}, opts.ode);
    for (std::size_t i = 0; i < n; ++i) {
      const Vector xi = x_init ? (*x_init)(grid[i]) : p.x0();
      values[i] = project(U, grid[i], u_init.value(grid[i], xi, grid[i]));
    }
  }
  auto control_of = [&grid](const std::vector<Vector>& v) { return ReferenceControl::piecewise_constant(grid, v); };
  const Vector zero = Vector::Zero(m);

  auto penalized_h = [&](double t, const Vector& x, const Vector& psi, const Vector& u) {
    double h = hamiltonian(p, x, t, u, 1.0, psi);
    if (penalized) h -= gamma * w(t, u);
    return h;
  };
  // `polish`: also take maximizers whose gain is below the acceptance floor,
  // which otherwise leaves the control O(sqrt(1e-12 / curvature)) short.
  auto propose = [&](const std::vector<Vector>& v, const Trajectory& x, const AdjointArc& psi, bool polish) {
    Proposal prop;
    prop.u = v;
    prop.gain.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = grid[i];
      const Vector xi = x(t), pi = psi(t);
      const double current = penalized_h(t, xi, pi, v[i]);
      const auto best = maximize_hamiltonian(p, xi, t, 1.0, pi, penalized ? gamma : 0.0, w, opts.maximize);
      // Keep the current control unless the maximizer is strictly better.
      const double floor = polish ? -1e-15 : 1e-12;
      if (best.value > current + floor * (1.0 + std::abs(current)) && best.u != v[i]) {
        prop.u[i] = best.u;
        prop.gain[i] = best.value - current;
        prop.change += (best.u - v[i]).lpNorm<1>() * (grid[i + 1] - grid[i]);
      }
    }
    return prop;
  };

  Extremal e;
  e.horizon = tau;
  e.gamma = penalized ? gamma : 0.0;
  e.weight = w;
  e.grid = grid;

  auto current = evaluate(p, control_of(values), tau, gamma, w, opts.ode);
  auto psi = integrate_adjoint_backward(p, control_of(values), current.x, 1.0, zero, {0.0, tau}, opts.ode);
  e.objective_history.push_back(current.objective);

  bool converged = false;
  bool stalled = false;
  Proposal prop;
  std::size_t it = 0;
  for (; it < opts.max_iterations; ++it) {
    prop = propose(values, current.x, psi, false);
    if (prop.change <= opts.change_tol) {
      converged = true;
      break;
    }
    double theta = opts.theta;
    while (true) {
      std::vector<Vector> cand = values;
      if (U.kind() == ControlSet::Kind::Box) {
        for (std::size_t i = 0; i < n; ++i) cand[i] = values[i] + theta * (prop.u[i] - values[i]);
      } else {
        // Finite sets are not convex: update the fraction theta of the
        // improvable nodes with the largest gains.
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < n; ++i)
          if (prop.gain[i] > 0.0) order.push_back(i);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return prop.gain[a] > prop.gain[b]; });
        const auto take = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(theta * static_cast<double>(order.size()))));
        for (std::size_t j = 0; j < std::min(take, order.size()); ++j) cand[order[j]] = prop.u[order[j]];
      }
      auto trial = evaluate(p, control_of(cand), tau, gamma, w, opts.ode);
      if (trial.objective >= current.objective - 1e-10) {
        values = std::move(cand);
        current = std::move(trial);
        psi = integrate_adjoint_backward(p, control_of(values), current.x, 1.0, zero, {0.0, tau}, opts.ode);
        e.objective_history.push_back(current.objective);
        break;
      }
      theta *= 0.5;
      if (theta < 1e-8) {
        stalled = true;
        break;
      }
    }
    if (stalled) break;
  }

  if (converged && U.kind() == ControlSet::Kind::Box) prop = propose(values, current.x, psi, true);
  if (converged && prop.change > 0.0) {
    auto trial = evaluate(p, control_of(prop.u), tau, gamma, w, opts.ode);
    if (trial.objective >= current.objective - 1e-10) {
      values = prop.u;
      current = std::move(trial);
      psi = integrate_adjoint_backward(p, control_of(values), current.x, 1.0, zero, {0.0, tau}, opts.ode);
    }
  }

  e.values = values;
  e.u = control_of(values);
  e.x = std::move(current.x);
  e.psi = std::move(psi);
  e.objective = current.objective;
  // Swept with lambda = 1; rescale (lambda, psi, gamma) jointly.
  const auto mult = normalize(1.0, e.psi);
  e.lambda = mult.lambda;
  e.gamma *= mult.scale;
  e.iterations = it + (converged ? 1 : 0);
  e.converged = converged;
  if (stalled) e.note = "relaxation stalled: no objective-improving step";
  else if (!converged) e.note = fmt::format("iteration cap {} reached", opts.max_iterations);
  e.max_residual = max_residual(p, e, std::span<const double>(grid.data(), n));
  return e;
}

// ---------------------------------------------------------------------------
// Payoff comparisons

std::vector<double> payoffs(const ControlProblem& p, const ReferenceControl& u, std::span<const double> taus,
                            const OdeOptions& opts) {
  if (taus.empty()) return {};
  const double t_end = *std::max_element(taus.begin(), taus.end());
  const auto m = static_cast<Eigen::Index>(p.state_dim());
  const OdeRhs rhs = [&](double t, const Vector& y, double piece, Vector& dy) {
    const Vector x = y.head(m);
    const Vector ut = u.value(t, x, piece);
    dy.resize(m + 1);
    dy.head(m) = p.dynamics(t, x, ut);
    dy[m] = p.payoff(t, x, ut);
  };
  Vector y0 = Vector::Zero(m + 1);
  y0.head(m) = p.x0();
  const auto bps = u.breakpoints(0.0, t_end);
  const VectorArc arc(integrate(rhs, y0, 0.0, t_end, bps, opts));
  std::vector<double> out;
  for (double tau : taus) out.push_back(arc(tau)[m]);
  return out;
}

std::vector<ReferenceControl> bang_pool(const ControlProblem& p, const ReferenceControl& u0, std::size_t count,
                                        double horizon, std::uint64_t seed) {
  ReferenceControl base = u0;
  if (u0.depends_on_state()) base = along_trajectory(u0, integrate_state(p, u0, p.x0(), {0.0, horizon}));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ControlSet& U = p.control_set();
  std::vector<ReferenceControl> pool;
  pool.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double a = horizon * unit(rng);
    const double len = 0.1 + 1.9 * unit(rng);
    const double b = std::min(a + len, horizon);
    Vector v;
    if (U.kind() == ControlSet::Kind::Box) {
      const auto [lo, hi] = U.bounds(a);
      v.resize(lo.size());
      for (Eigen::Index j = 0; j < lo.size(); ++j) v[j] = unit(rng) < 0.5 ? lo[j] : hi[j];
    } else {
      if (U.points().empty()) throw PreconditionError("control set is empty");
      const auto j = static_cast<std::size_t>(unit(rng) * static_cast<double>(U.points().size()));
      v = U.points()[std::min(j, U.points().size() - 1)];
    }
    if (b > a) pool.push_back(ReferenceControl::spliced(base, a, b, v));
  }
  return pool;
}

OmegaEstimate estimate_omega(const ControlProblem& p, const ReferenceControl& u0, std::span<const double> taus,
                             const std::vector<ReferenceControl>& pool, const OdeOptions& opts) {
  OmegaEstimate est;
  est.taus.assign(taus.begin(), taus.end());
  est.raw.assign(taus.size(), 0.0);
  const auto base = payoffs(p, u0, taus, opts);
  est.pool_size = 1;  // u0 itself
  for (const auto& u : pool) {
    std::vector<double> j;
    try {
      j = payoffs(p, u, taus, opts);
    } catch (const IntegrationError&) {
      continue;  // a competitor that escapes is not admissible on these horizons
    }
    ++est.pool_size;
    for (std::size_t k = 0; k < taus.size(); ++k) est.raw[k] = std::max(est.raw[k], j[k] - base[k]);
  }
  // The gap must be a non-increasing function of the horizon: take the right envelope.
  est.omega = est.raw;
  for (std::size_t k = est.omega.size(); k-- > 1;) est.omega[k - 1] = std::max(est.omega[k - 1], est.omega[k]);
  return est;
}

// ---------------------------------------------------------------------------
// Truncation scheme

namespace {

// Previous solution on [0, horizon), the reference beyond.
class WarmStartLaw final : public ControlLaw {
 public:
  WarmStartLaw(ReferenceControl previous, double horizon, ReferenceControl tail)
      : prev_(std::move(previous)), horizon_(horizon), tail_(std::move(tail)) {}
  Vector value(double t, const Vector& x, double piece_start) const override {
    return piece_start < horizon_ ? prev_.value(t, x, piece_start) : tail_.value(t, x, piece_start);
  }
  void breakpoints(double a, double b, std::vector<double>& out) const override {
    prev_.law().breakpoints(a, std::min(b, horizon_), out);
    if (horizon_ > a && horizon_ < b) out.push_back(horizon_);
    tail_.law().breakpoints(std::max(a, horizon_), b, out);
  }

 private:
  ReferenceControl prev_;
  double horizon_;
  ReferenceControl tail_;
};

}  // namespace

bool TruncationRun::all_converged() const {
  return std::all_of(steps.begin(), steps.end(),
                     [](const TruncationStep& s) { return s.error.empty() && s.extremal.converged; });
}

const TruncationStep* TruncationRun::final_step() const {
  for (auto it = steps.rbegin(); it != steps.rend(); ++it)
    if (it->error.empty()) return &*it;
  return nullptr;
}

TruncationRun run_truncation(const ControlProblem& p, const ReferenceControl& u0, std::span<const double> taus,
                             const TruncationOptions& opts) {
  if (taus.size() < 2) throw PreconditionError("truncation needs at least two horizons");
  if (!(taus.front() > 0.0)) throw PreconditionError("horizons must be positive");
  for (std::size_t i = 1; i < taus.size(); ++i)
    if (!(taus[i] > taus[i - 1])) throw PreconditionError("horizons must be strictly increasing");

  const double t_max = taus.back();
  ReferenceControl reference = u0;
  if (u0.depends_on_state())
    reference = along_trajectory(u0, integrate_state(p, u0, p.x0(), {0.0, t_max}, opts.sweep.ode));

  TruncationRun run;
  run.seed = opts.seed;
  std::vector<ReferenceControl> pool{reference};
  if (opts.use_pool) {
    auto extra = bang_pool(p, reference, opts.pool_size, t_max, opts.seed);
    pool.insert(pool.end(), extra.begin(), extra.end());
  }
  run.omega = estimate_omega(p, reference, taus, pool, opts.sweep.ode);

  const DeviationWeight weight(reference);
  ReferenceControl warm = reference;
  const TruncationStep* previous = nullptr;
  for (std::size_t k = 0; k < taus.size(); ++k) {
    TruncationStep step;
    step.tau = taus[k];
    step.omega = run.omega.omega[k];
    step.gamma = std::sqrt(step.omega);
    try {
      step.extremal = solve_finite_horizon(p, step.tau, step.gamma, weight, warm, opts.sweep);
      if (previous) {
        step.psi0_change = (step.extremal.psi.value(0) - previous->extremal.psi.value(0)).norm();
        step.lambda_change = std::abs(step.extremal.lambda - previous->extremal.lambda);
      }
      warm = ReferenceControl(std::make_shared<WarmStartLaw>(step.extremal.u, step.tau, reference));
    } catch (const Error& err) {
      step.error = err.what();
    }
    run.steps.push_back(std::move(step));
    if (run.steps.back().error.empty()) previous = &run.steps.back();
  }
  return run;
}

std::string to_csv(const TruncationRun& run, std::size_t state_dim) {
  std::string out = "n,tau_n,gamma_n,lambda_n";
  for (std::size_t i = 1; i <= state_dim; ++i) out += fmt::format(",psi0_{}", i);
  out += ",residual,converged\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < run.steps.size(); ++k) {
    const auto& s = run.steps[k];
    const bool ok = s.error.empty();
    out += fmt::format("{},{},{},{}", k + 1, fmt17(s.tau), fmt17(s.gamma), fmt17(ok ? s.extremal.lambda : nan));
    for (std::size_t i = 0; i < state_dim; ++i)
      out += ',' + fmt17(ok ? s.extremal.psi.value(0)[static_cast<Eigen::Index>(i)] : nan);
    out += fmt::format(",{},{}\n", fmt17(ok ? s.extremal.max_residual : nan), ok && s.extremal.converged ? 1 : 0);
  }
  return out;
}

}  // namespace hpmp
