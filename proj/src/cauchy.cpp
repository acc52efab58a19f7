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

#include "horizon_pmp/cauchy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "horizon_pmp/errors.hpp"
#include "horizon_pmp/io.hpp"

namespace hpmp {

namespace {

double node_slack(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

void set_checkpoints(AccumulatedIntegral& acc) {
  acc.checkpoints.clear();
  acc.checkpoint_index.clear();
  for (double c = 1.0; c <= acc.t.back() + node_slack(acc.t.back()); c *= 2.0) {
    auto it = std::lower_bound(acc.t.begin(), acc.t.end(), c - node_slack(c));
    if (it != acc.t.end() && std::abs(*it - c) <= node_slack(c)) {
      acc.checkpoints.push_back(c);
      acc.checkpoint_index.push_back(static_cast<std::size_t>(it - acc.t.begin()));
    }
  }
}

// Least-squares slope of log(y) against log(x), skipping nonpositive y.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 1e-13) || !(x[i] > 0.0)) continue;  // roundoff is not signal
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return 0.0;
  const double den = n * sxx - sx * sx;
  return den == 0.0 ? 0.0 : (n * sxy - sx * sy) / den;
}

// Linear interpolation of I between nodes.
RowVector sample(const AccumulatedIntegral& acc, double T) {
  if (T < acc.t.front() - node_slack(T) || T > acc.t.back() + node_slack(T))
    throw PreconditionError(fmt::format("T={:.17g} outside accumulated span", T));
  auto it = std::lower_bound(acc.t.begin(), acc.t.end(), T - node_slack(T));
  const auto k = static_cast<std::size_t>(it - acc.t.begin());
  if (k < acc.t.size() && std::abs(acc.t[k] - T) <= node_slack(T)) return acc.I[k];
  const double w = (T - acc.t[k - 1]) / (acc.t[k] - acc.t[k - 1]);
  return (1.0 - w) * acc.I[k - 1] + w * acc.I[k];
}

}  // namespace

AccumulatedIntegral AccumulatedIntegral::from_samples(std::vector<double> t, std::vector<RowVector> I) {
  if (t.empty() || t.size() != I.size()) throw PreconditionError("samples need matching nonempty t and I");
  if (!std::is_sorted(t.begin(), t.end()) || std::adjacent_find(t.begin(), t.end()) != t.end())
    throw PreconditionError("sample times must be strictly increasing");
  AccumulatedIntegral acc;
  acc.xi = Vector::Zero(I.front().size());
  acc.t = std::move(t);
  acc.I = std::move(I);
  for (std::size_t k = 0; k + 1 < acc.I.size(); ++k) acc.increments.push_back(acc.I[k + 1] - acc.I[k]);
  set_checkpoints(acc);
  return acc;
}

std::size_t AccumulatedIntegral::index_of(double T) const {
  auto it = std::lower_bound(t.begin(), t.end(), T - node_slack(T));
  if (it == t.end() || std::abs(*it - T) > node_slack(T))
    throw PreconditionError(fmt::format("T={:.17g} is not a sample time", T));
  return static_cast<std::size_t>(it - t.begin());
}

const RowVector& AccumulatedIntegral::at(double T) const { return I[index_of(T)]; }

RowVector AccumulatedIntegral::tail(std::size_t k) const {
  RowVector s = RowVector::Zero(I.front().size());
  // Smallest terms first.
  for (std::size_t j = increments.size(); j-- > k;) s += increments[j];
  return s;
}

ReferenceControl open_loop_reference(const ControlProblem& p, const ReferenceControl& u0, double t_end,
                                     const OdeOptions& opts) {
  if (!u0.depends_on_state()) return u0;
  return along_trajectory(u0, integrate_state(p, u0, p.x0(), {0.0, t_end}, opts));
}

namespace {

struct SegmentSystem {
  const ControlProblem& p;
  const ReferenceControl& u;
  Eigen::Index m;

  // y = [x (m), Phi (m*m, column-major), int g_x Phi (m), int tr f_x (1)]
  void operator()(double s, const Vector& y, double piece, Vector& dy) const {
    const Vector x = y.head(m);
    const Vector us = u.value(s, x, piece);
    const Matrix J = p.state_jacobian(s, x, us);
    const RowVector gx = p.payoff_gradient(s, x, us);
    const Eigen::Map<const Matrix> phi(y.data() + m, m, m);
    dy.resize(y.size());
    dy.head(m) = p.dynamics(s, x, us);
    Eigen::Map<Matrix>(dy.data() + m, m, m) = J * phi;
    Eigen::Map<RowVector>(dy.data() + m + m * m, m) = gx * phi;
    dy[m + m * m + m] = J.trace();
  }

  [[nodiscard]] Vector start(const Vector& x) const {
    Vector y = Vector::Zero(m + m * m + m + 1);
    y.head(m) = x;
    Eigen::Map<Matrix>(y.data() + m, m, m).setIdentity();
    return y;
  }
};

}  // namespace

AccumulatedIntegral accumulate(const ControlProblem& p, const ReferenceControl& u0, const Vector& xi, double t_max,
                               const OdeOptions& opts) {
  if (!(t_max > 0.0)) throw PreconditionError("T_max must be positive");
  const auto m = static_cast<Eigen::Index>(p.state_dim());
  if (xi.size() != m) throw PreconditionError("perturbation has wrong length");
  const ReferenceControl u = open_loop_reference(p, u0, t_max, opts);
  const auto bps = u.breakpoints(0.0, t_max);
  const auto t = matrix_nodes({0.0, t_max}, opts.matrix_grid, bps);
  const SegmentSystem sys{p, u, m};
  const OdeRhs rhs = [&sys](double s, const Vector& y, double piece, Vector& dy) { sys(s, y, piece, dy); };

  AccumulatedIntegral acc;
  acc.xi = xi;
  acc.t = t;
  acc.I.push_back(RowVector::Zero(m));
  std::vector<Matrix> a{Matrix::Identity(m, m)}, steps;
  std::vector<double> logdet{0.0};
  std::vector<Vector> xs{p.x0() + xi};
  DenseSolution dense;

  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const auto sol = integrate(rhs, sys.start(xs.back()), t[k], t[k + 1], {}, opts);
    const Vector& y1 = sol.y.back();
    const Matrix phi = Eigen::Map<const Matrix>(y1.data() + m, m, m);
    const RowVector jk = Eigen::Map<const RowVector>(y1.data() + m + m * m, m);
    acc.local.push_back(jk);
    acc.increments.push_back(jk * a.back());
    acc.I.push_back(acc.I.back() + acc.increments.back());
    a.push_back(phi * a.back());
    logdet.push_back(logdet.back() + y1[m + m * m + m]);
    steps.push_back(phi);
    xs.push_back(y1.head(m));
    if (a.back().lpNorm<Eigen::Infinity>() > opts.blowup)
      throw IntegrationError(IntegrationError::Kind::BlowUp, t[k + 1],
                             fmt::format("fundamental matrix exceeded {:g} near t={:.17g}", opts.blowup, t[k + 1]));

    // Stitch the dense state output; shared nodes keep both one-sided slopes.
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
      if (i == 0 && k > 0) {
        dense.dright.back() = sol.dright[0].head(m);
        continue;
      }
      dense.t.push_back(sol.t[i]);
      dense.y.push_back(sol.y[i].head(m));
      dense.dleft.push_back(sol.dleft[i].head(m));
      dense.dright.push_back(sol.dright[i].head(m));
    }
    for (const auto& c : sol.correction) dense.correction.push_back(c.head(m));
  }

  std::vector<Matrix> dl, dr;
  for (std::size_t k = 0; k < t.size(); ++k) {
    auto slope = [&](double piece) {
      const Vector uk = u.value(t[k], xs[k], piece);
      return Matrix(p.state_jacobian(t[k], xs[k], uk) * a[k]);
    };
    const double left_piece = k == 0 ? t[0] : t[k - 1];
    const double right_piece = k + 1 == t.size() ? left_piece : t[k];
    dl.push_back(slope(left_piece));
    dr.push_back(k + 1 == t.size() ? dl.back() : slope(right_piece));
  }
  dl.front() = dr.front();
  acc.x = Trajectory(std::move(dense));
  acc.A = MatrixArc(t, std::move(a), std::move(logdet), std::move(steps), std::move(dl), std::move(dr));
  set_checkpoints(acc);
  return acc;
}

RowVector accumulate_segment(const ControlProblem& p, const ReferenceControl& u0, const Vector& x_start,
                             const Matrix& a_start, Span span, const OdeOptions& opts) {
  if (!(span.end > span.begin)) throw PreconditionError("segment needs a nonempty span");
  const auto m = static_cast<Eigen::Index>(p.state_dim());
  const SegmentSystem sys{p, u0, m};
  const OdeRhs rhs = [&sys](double s, const Vector& y, double piece, Vector& dy) { sys(s, y, piece, dy); };
  const auto bps = u0.breakpoints(span.begin, span.end);
  const auto t = matrix_nodes(span, opts.matrix_grid, bps);
  RowVector total = RowVector::Zero(m);
  Matrix a = a_start;
  Vector x = x_start;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const auto sol = integrate(rhs, sys.start(x), t[k], t[k + 1], {}, opts);
    const Vector& y1 = sol.y.back();
    const Matrix phi = Eigen::Map<const Matrix>(y1.data() + m, m, m);
    total += Eigen::Map<const RowVector>(y1.data() + m + m * m, m) * a;
    a = phi * a;
    x = y1.head(m);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Convergence classification

std::string to_string(ConvergenceVerdict::Kind k) {
  switch (k) {
    case ConvergenceVerdict::Kind::Converged: return "converged";
    case ConvergenceVerdict::Kind::Diverged: return "diverged";
    case ConvergenceVerdict::Kind::Oscillating: return "oscillating";
  }
  return "unknown";
}

ConvergenceVerdict classify_convergence(const AccumulatedIntegral& acc, double tol) {
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  const auto n = acc.checkpoints.size();
  if (n < 4)
    throw PreconditionError(fmt::format("insufficient samples: {} doubling checkpoints, need at least 4", n));

  ConvergenceVerdict v;
  v.tolerance = tol;
  const auto dim = acc.I.front().size();
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const auto a = acc.checkpoint_index[j], b = acc.checkpoint_index[j + 1];
    RowVector lo = acc.I[a], hi = acc.I[a];
    double mx = 0.0;
    for (std::size_t k = a; k <= b; ++k) {
      lo = lo.cwiseMin(acc.I[k]);
      hi = hi.cwiseMax(acc.I[k]);
      mx = std::max(mx, acc.I[k].norm());
    }
    v.window_end.push_back(acc.checkpoints[j + 1]);
    v.oscillation.push_back(dim > 0 ? (hi - lo).maxCoeff() : 0.0);
    v.window_max.push_back(mx);
  }

  std::vector<double> cx, cy;
  for (std::size_t j = n - 4; j < n; ++j) {
    cx.push_back(acc.checkpoints[j]);
    cy.push_back(acc.I[acc.checkpoint_index[j]].norm());
  }
  v.growth_exponent = loglog_slope(cx, cy);

  const auto w = v.oscillation.size();
  const double o1 = v.oscillation[w - 3], o2 = v.oscillation[w - 2], o3 = v.oscillation[w - 1];
  // Noise far below the tolerance must not break monotonicity.
  const double slack = 1e-3 * tol;
  if (o1 <= tol && o2 <= tol && o3 <= tol && o2 <= o1 + slack && o3 <= o2 + slack) {
    v.kind = ConvergenceVerdict::Kind::Converged;
    v.limit = acc.I.back();
    return v;
  }
  const double m1 = v.window_max[w - 3], m2 = v.window_max[w - 2], m3 = v.window_max[w - 1];
  if (v.growth_exponent > 0.05 && m1 < m2 && m2 < m3) {
    v.kind = ConvergenceVerdict::Kind::Diverged;
    return v;
  }

  v.kind = ConvergenceVerdict::Kind::Oscillating;
  const auto a = acc.checkpoint_index[n - 2], b = acc.checkpoint_index[n - 1];
  const double radius = o3 / 8.0;
  std::vector<std::pair<RowVector, std::vector<std::size_t>>> clusters;  // seed, members
  for (std::size_t k = a; k <= b; ++k) {
    bool placed = false;
    for (auto& [seed, members] : clusters) {
      if ((acc.I[k] - seed).lpNorm<Eigen::Infinity>() <= radius) {
        members.push_back(k);
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back({acc.I[k], {k}});
  }
  for (const auto& [seed, members] : clusters) {
    RowVector mean = RowVector::Zero(dim);
    for (auto k : members) mean += acc.I[k];
    v.clusters.push_back(mean / static_cast<double>(members.size()));
  }
  std::sort(v.clusters.begin(), v.clusters.end(), [](const RowVector& x, const RowVector& y) {
    return std::lexicographical_compare(x.data(), x.data() + x.size(), y.data(), y.data() + y.size());
  });
  return v;
}

// ---------------------------------------------------------------------------
// Continuity and abnormality probes

namespace {

// Run jobs [0, n) on up to worker_threads() threads.
template <class Job>
void parallel_for(std::size_t n, Job job) {
  const auto workers = std::min<std::size_t>(worker_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

ContinuityProbe continuity_probe(const ControlProblem& p, const ReferenceControl& u0, const std::vector<double>& radii,
                                 const std::vector<Vector>& directions, double t_max, const OdeOptions& opts) {
  if (radii.empty()) throw PreconditionError("continuity probe needs at least one radius");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw PreconditionError("radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw PreconditionError("radii must be strictly decreasing");
  }
  if (directions.empty()) throw PreconditionError("continuity probe needs at least one direction");
  const auto m = static_cast<Eigen::Index>(p.state_dim());
  std::vector<Vector> dirs;
  for (const auto& d : directions) {
    if (d.size() != m || !(d.norm() > 0.0)) throw PreconditionError("directions must be nonzero state vectors");
    dirs.push_back(d / d.norm());
  }

  const ReferenceControl u = open_loop_reference(p, u0, t_max, opts);
  const auto base = accumulate(p, u, Vector::Zero(m), t_max, opts);

  ContinuityProbe probe;
  for (double r : radii)
    for (std::size_t d = 0; d < dirs.size(); ++d) probe.rows.push_back({r, d, r * dirs[d], 0.0, {}});

  parallel_for(probe.rows.size(), [&](std::size_t i) {
    auto& row = probe.rows[i];
    try {
      const auto acc = accumulate(p, u, row.xi, t_max, opts);
      if (acc.size() != base.size()) throw PreconditionError("perturbed run used a different node grid");
      double sup = 0.0;
      for (std::size_t k = 0; k < acc.size(); ++k) sup = std::max(sup, (acc.I[k] - base.I[k]).norm());
      row.sup_difference = sup;
    } catch (const Error& e) {
      row.error = e.what();
    }
  });

  std::vector<double> rs, sups;
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& row : probe.rows) {
      if (row.direction != d || !row.error.empty()) continue;
      if (row.sup_difference > prev * (1.0 + 1e-9) + 1e-15) probe.decreasing = false;
      prev = row.sup_difference;
      rs.push_back(row.radius);
      sups.push_back(row.sup_difference);
    }
  }
  probe.modulus_exponent = loglog_slope(rs, sups);
  // Constant C of sup ~ C r^p, geometric mean over positive samples.
  double lc = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < rs.size(); ++i)
    if (sups[i] > 0.0) {
      lc += std::log(sups[i]) - probe.modulus_exponent * std::log(rs[i]);
      ++count;
    }
  probe.modulus_constant = count > 0 ? std::exp(lc / count) : 0.0;
  return probe;
}

AbnormalityReport abnormality_indicator(const ControlProblem& p, const ReferenceControl& u0,
                                        const std::vector<double>& radii, const std::vector<double>& taus,
                                        const OdeOptions& opts) {
  if (radii.empty()) throw PreconditionError("abnormality indicator needs at least one radius");
  if (taus.empty()) throw PreconditionError("abnormality indicator needs at least one horizon");
  for (std::size_t i = 0; i < taus.size(); ++i)
    if (!(taus[i] > 0.0) || (i > 0 && !(taus[i] > taus[i - 1])))
      throw PreconditionError("horizons must be positive and strictly increasing");
  for (double r : radii)
    if (!(r > 0.0)) throw PreconditionError("radii must be positive");

  const auto m = static_cast<Eigen::Index>(p.state_dim());
  const double t_max = taus.back();
  const ReferenceControl u = open_loop_reference(p, u0, t_max, opts);
  std::vector<Vector> starts{Vector::Zero(m)};
  for (double r : radii)
    for (Eigen::Index i = 0; i < m; ++i)
      for (double sgn : {1.0, -1.0}) starts.push_back(sgn * r * Vector::Unit(m, i));

  AbnormalityReport rep;
  rep.taus = taus;
  rep.sup_norm.assign(taus.size(), 0.0);
  std::mutex mu;
  std::vector<std::string> failures;
  parallel_for(starts.size(), [&](std::size_t i) {
    try {
      const auto acc = accumulate(p, u, starts[i], t_max, opts);
      std::vector<double> norms;
      for (double tau : taus) norms.push_back(sample(acc, tau).norm());
      const std::lock_guard lock(mu);
      for (std::size_t k = 0; k < taus.size(); ++k) rep.sup_norm[k] = std::max(rep.sup_norm[k], norms[k]);
    } catch (const Error& e) {
      const std::lock_guard lock(mu);
      failures.emplace_back(e.what());
    }
  });

  std::vector<double> fx, fy;
  for (std::size_t k = 0; k < taus.size(); ++k)
    if (taus[k] >= 1.0) {
      fx.push_back(taus[k]);
      fy.push_back(rep.sup_norm[k]);
    }
  if (fx.size() > 4) {
    fx.erase(fx.begin(), fx.end() - 4);
    fy.erase(fy.begin(), fy.end() - 4);
  }
  rep.growth_exponent = loglog_slope(fx, fy);
  const double peak = *std::max_element(rep.sup_norm.begin(), rep.sup_norm.end());
  rep.excluded = failures.empty() && std::isfinite(peak) && rep.growth_exponent <= 0.01;
  if (rep.excluded)
    rep.message = fmt::format("abnormality excluded at probe scale (sup |I| = {:.6g}, growth exponent {:.3g})", peak,
                              rep.growth_exponent);
  else if (!failures.empty())
    rep.message = fmt::format("abnormality not excluded: {} perturbed runs failed ({})", failures.size(),
                              failures.front());
  else
    rep.message = fmt::format("abnormality not excluded: |I| grows with exponent {:.3g}", rep.growth_exponent);
  return rep;
}

// ---------------------------------------------------------------------------
// Cauchy-type adjoint

CauchyAdjoint cauchy_adjoint(const ControlProblem& p, const ReferenceControl& u0, const AccumulatedIntegral& acc,
                             const RowVector& limit, double t_psi) {
  if (!acc.A || !acc.x || acc.local.size() + 1 != acc.size())
    throw PreconditionError("accumulated integral carries no trajectory data");
  const auto m = static_cast<Eigen::Index>(p.state_dim());
  if (limit.size() != m) throw PreconditionError("limit has wrong length");
  if (!(t_psi > 0.0) || t_psi > acc.t_end() + node_slack(t_psi))
    throw PreconditionError(fmt::format("adjoint span end {:.17g} outside the accumulated span", t_psi));
  const ReferenceControl u = open_loop_reference(p, u0, acc.t_end());

  CauchyAdjoint out;
  out.limit = limit;
  out.lambda = 1.0 / (1.0 + limit.norm());

  // psi(t_k)^T = J_k + psi(t_{k+1})^T Phi_k, started from the part of the limit
  // beyond t_end. Only that offset needs A(t_end)^{-1}; the recursion itself
  // never inverts A, which stays usable when A spreads over many decades.
  const std::size_t n = acc.size();
  const RowVector offset = limit - acc.I.back();
  RowVector v = RowVector::Zero(m);
  if (offset.norm() > 0.0) {
    const auto inv = checked_inverse(acc.A->value(n - 1));
    out.terminal_condition = inv.condition;
    v = offset * inv.inverse;
  }
  std::vector<Vector> psi_at(n);
  psi_at[n - 1] = v.transpose();
  for (std::size_t k = n - 1; k-- > 0;) {
    v = acc.local[k] + v * acc.A->step(k);
    psi_at[k] = v.transpose();
  }

  DenseSolution sol;
  for (std::size_t k = 0; k < n && acc.t[k] <= t_psi + node_slack(t_psi); ++k) {
    const Vector& psi = psi_at[k];
    const double tk = acc.t[k];
    const Vector xk = (*acc.x)(tk);
    auto slope = [&](double piece) {
      const Vector uk = u.value(tk, xk, piece);
      return Vector(-(p.state_jacobian(tk, xk, uk).transpose() * psi + p.payoff_gradient(tk, xk, uk).transpose()));
    };
    sol.t.push_back(tk);
    sol.y.push_back(psi);
    sol.dleft.push_back(slope(k == 0 ? tk : acc.t[k - 1]));
    sol.dright.push_back(slope(tk));
  }
  if (sol.t.size() < 2) throw PreconditionError("adjoint span covers fewer than two nodes");
  sol.dleft.front() = sol.dright.front();
  sol.dright.back() = sol.dleft.back();
  out.psi_unit = AdjointArc(sol);
  out.psi = AdjointArc(std::move(sol));
  out.psi.scale(out.lambda);
  return out;
}

CauchyAdjoint cauchy_adjoint(const ControlProblem& p, const ReferenceControl& u0, const AccumulatedIntegral& acc,
                             const ConvergenceVerdict& verdict, double t_psi) {
  if (verdict.kind != ConvergenceVerdict::Kind::Converged)
    throw PreconditionError(fmt::format("verdict is {}; pass an explicit partial limit instead",
                                        to_string(verdict.kind)));
  return cauchy_adjoint(p, u0, acc, verdict.limit, t_psi);
}

double verify_product_identity(const AdjointArc& psi, double lambda, const AccumulatedIntegral& acc,
                               const RowVector& limit) {
  if (!acc.A) throw PreconditionError("accumulated integral carries no fundamental matrix");
  const Span s = psi.span();
  if (s.begin < acc.t.front() - node_slack(s.begin) || s.end > acc.t.back() + node_slack(s.end))
    throw PreconditionError("span mismatch: adjoint extends beyond the accumulated integral");
  double worst = 0.0;
  for (std::size_t k = 0; k < acc.size(); ++k) {
    const double tk = acc.t[k];
    if (tk < s.begin - node_slack(tk) || tk > s.end + node_slack(tk)) continue;
    const RowVector lhs = psi(tk).transpose() * acc.A->value(k);
    worst = std::max(worst, (lhs - lambda * (limit - acc.I[k])).norm());
  }
  return worst;
}

std::string to_csv(const AccumulatedIntegral& acc) {
  const auto m = acc.xi.size();
  std::string out;
  for (Eigen::Index i = 1; i <= m; ++i) out += fmt::format("xi_{},", i);
  out += "T";
  for (Eigen::Index i = 1; i <= m; ++i) out += fmt::format(",I_{}", i);
  out += '\n';
  std::string prefix;
  for (Eigen::Index i = 0; i < m; ++i) prefix += fmt17(acc.xi[i]) + ',';
  for (std::size_t k = 0; k < acc.size(); ++k) {
    out += prefix + fmt17(acc.t[k]);
    for (Eigen::Index i = 0; i < acc.I[k].size(); ++i) out += ',' + fmt17(acc.I[k][i]);
    out += '\n';
  }
  return out;
}

}  // namespace hpmp
