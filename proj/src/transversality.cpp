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

#include "horizon_pmp/transversality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <fmt/format.h>

#include "horizon_pmp/errors.hpp"
#include "horizon_pmp/expr.hpp"
#include "horizon_pmp/io.hpp"

namespace hpmp {

namespace {

constexpr double kGrid = 1.0 / 32;
constexpr double kInf = std::numeric_limits<double>::infinity();

double slack(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }

void require_increasing(const std::vector<double>& taus, Span span) {
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (i > 0 && !(taus[i] > taus[i - 1])) throw PreconditionError("tau sequence must be strictly increasing");
    if (taus[i] < span.begin - slack(taus[i]) || taus[i] > span.end + slack(taus[i]))
      throw PreconditionError(fmt::format("tau={:.17g} outside [{:.17g}, {:.17g}]", taus[i], span.begin, span.end));
  }
}

// Window sample points: 1/32 grid, the window ends, and extra nodes inside.
std::vector<double> window_points(double a, double b, const std::vector<double>& extra) {
  std::vector<double> pts{a, b};
  for (double s = std::ceil(a / kGrid) * kGrid; s < b; s += kGrid) pts.push_back(s);
  auto lo = std::lower_bound(extra.begin(), extra.end(), a);
  for (; lo != extra.end() && *lo <= b; ++lo) pts.push_back(*lo);
  std::sort(pts.begin(), pts.end());
  return pts;
}

// Full-span sample grid used when no subsequence is given.
std::vector<double> span_points(Span s, const std::vector<double>& extra) {
  auto pts = window_points(s.begin, s.end, extra);
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

LimitCheck windowed_verdict(const WindowStats& w, double tol) {
  LimitCheck out;
  out.tolerance = tol;
  out.evidence.columns = {"window_start", "window_end", "sup_norm"};
  for (std::size_t i = 0; i < w.sup.size(); ++i) out.evidence.rows.push_back({w.start[i], w.end[i], w.sup[i]});
  const auto n = w.sup.size();
  const double s1 = w.sup[n - 3], s2 = w.sup[n - 2], s3 = w.sup[n - 1];
  const double noise = 1e-3 * tol;
  if (s1 <= tol && s2 <= tol && s3 <= tol && s2 <= s1 + noise && s3 <= s2 + noise)
    out.verdict = Verdict::Holds;
  else if (s1 > 10 * tol && s2 > 10 * tol && s3 > 10 * tol && s3 >= 0.9 * w.sup.front())
    out.verdict = Verdict::Fails;
  else
    out.verdict = Verdict::Inconclusive;
  return out;
}

LimitCheck subsequence_verdict(const std::vector<double>& taus, const std::vector<double>& norms, double tol) {
  if (taus.empty()) throw PreconditionError("tau sequence is empty");
  LimitCheck out;
  out.tolerance = tol;
  out.subsequence = taus;
  out.evidence.columns = {"tau", "norm"};
  for (std::size_t i = 0; i < taus.size(); ++i) out.evidence.rows.push_back({taus[i], norms[i]});
  const std::size_t tail = std::max<std::size_t>(1, (taus.size() + 2) / 3);
  const double lowest = *std::min_element(norms.end() - static_cast<std::ptrdiff_t>(tail), norms.end());
  out.verdict = lowest <= tol ? Verdict::Holds : lowest > 10 * tol ? Verdict::Fails : Verdict::Inconclusive;
  return out;
}

void require_cover(const VectorArc& psi, const MatrixArc& a) {
  const Span s = psi.span(), w = a.span();
  if (psi.dim() != a.dim()) throw PreconditionError("span mismatch: weight and adjoint dimensions differ");
  if (w.begin > s.begin + slack(s.begin) || w.end < s.end - slack(s.end))
    throw PreconditionError(fmt::format("span mismatch: weight covers [{:.6g}, {:.6g}], adjoint [{:.6g}, {:.6g}]",
                                        w.begin, w.end, s.begin, s.end));
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict parse_verdict(std::string_view s) {
  if (s == "holds") return Verdict::Holds;
  if (s == "fails") return Verdict::Fails;
  if (s == "inconclusive") return Verdict::Inconclusive;
  throw ParseError(fmt::format("unknown verdict '{}'", s), 0);
}

std::vector<double> Evidence::column(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw PreconditionError(fmt::format("evidence has no column '{}'", name));
  const auto j = static_cast<std::size_t>(it - columns.begin());
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r[j]);
  return out;
}

WindowStats window_stats(const std::function<double(double)>& norm, Span span,
                         const std::vector<double>& extra_nodes) {
  std::vector<std::pair<double, double>> windows;
  for (double len = 1.0, right = span.end;; len *= 2.0) {
    const double left = span.end - len;
    if (left < span.begin - slack(span.begin)) break;
    windows.emplace_back(std::max(left, span.begin), right);
    right = left;
  }
  if (windows.size() < 4)
    throw PreconditionError(fmt::format("arc too short: [{:.6g}, {:.6g}] holds {} doubling windows, need 4",
                                        span.begin, span.end, windows.size()));
  std::reverse(windows.begin(), windows.end());
  std::vector<double> extra = extra_nodes;
  std::sort(extra.begin(), extra.end());
  WindowStats w;
  for (const auto& [a, b] : windows) {
    double sup = 0.0;
    for (double s : window_points(a, b, extra)) sup = std::max(sup, norm(s));
    w.start.push_back(a);
    w.end.push_back(b);
    w.sup.push_back(sup);
  }
  return w;
}

LimitCheck check_plain_limit(const VectorArc& psi, double tol) {
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  const auto w = window_stats([&](double t) { return psi(t).norm(); }, psi.span(), psi.times());
  return windowed_verdict(w, tol);
}

LimitCheck check_subsequence_limit(const VectorArc& psi, const std::vector<double>& taus, double tol) {
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  require_increasing(taus, psi.span());
  std::vector<double> norms;
  for (double t : taus) norms.push_back(psi(t).norm());
  return subsequence_verdict(taus, norms, tol);
}

LimitCheck check_weighted_limit(const VectorArc& psi, const MatrixArc& a, WeightMode mode, double tol,
                                const std::vector<double>& taus) {
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  require_cover(psi, a);
  auto norm = [&](double t) { return (psi(t).transpose() * a(t)).norm(); };
  if (mode == WeightMode::FullLimit) return windowed_verdict(window_stats(norm, psi.span(), psi.times()), tol);
  const auto seq = taus.empty() ? span_points(psi.span(), psi.times()) : taus;
  require_increasing(seq, psi.span());
  std::vector<double> norms;
  for (double t : seq) norms.push_back(norm(t));
  return subsequence_verdict(seq, norms, tol);
}

// ---------------------------------------------------------------------------
// Exponential dominance

DominanceFit fit_exponential_dominance(const std::vector<DominanceSample>& samples) {
  if (samples.empty()) throw PreconditionError("dominance fit needs at least one trajectory");
  DominanceFit fit;
  fit.sample_size = samples.size();
  fit.alpha = kInf;
  bool any = false;
  for (const auto& s : samples) {
    if (s.t.size() != s.product.size()) throw PreconditionError("dominance sample has ragged columns");
    double n = 0, st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      if (!(s.product[i] > 0.0)) continue;
      const double y = std::log(s.product[i]);
      n += 1;
      st += s.t[i];
      sy += y;
      stt += s.t[i] * s.t[i];
      sty += s.t[i] * y;
    }
    if (n == 0) {
      fit.alpha_each.push_back(kInf);
      fit.beta_each.push_back(0.0);
      continue;
    }
    const double den = n * stt - st * st;
    const double slope = n >= 2 && den > 0 ? (n * sty - st * sy) / den : 0.0;
    const double intercept = (sy - slope * st) / n;
    fit.alpha_each.push_back(-slope);
    fit.beta_each.push_back(std::exp(intercept));
    fit.alpha = std::min(fit.alpha, -slope);
    fit.beta = std::max(fit.beta, std::exp(intercept));
    any = true;
  }
  if (!any) {
    fit.holds = true;  // the product vanishes identically
    return fit;
  }
  fit.max_log_excess = -kInf;
  for (const auto& s : samples)
    for (std::size_t i = 0; i < s.t.size(); ++i)
      if (s.product[i] > 0.0)
        fit.max_log_excess =
            std::max(fit.max_log_excess, std::log(s.product[i]) - (std::log(fit.beta) - fit.alpha * s.t[i]));
  fit.beta_envelope = fit.beta * std::exp(std::max(0.0, fit.max_log_excess));
  fit.holds = fit.alpha > 0.01;
  return fit;
}

std::vector<DominanceSample> dominance_samples(const ControlProblem& p, const std::vector<ReferenceControl>& controls,
                                               Span span, const OdeOptions& opts) {
  std::vector<DominanceSample> out;
  for (std::size_t c = 0; c < controls.size(); ++c) {
    const auto x = integrate_state(p, controls[c], p.x0(), span, opts);
    const auto a = fundamental_matrix(p, controls[c], x, span, opts);
    DominanceSample s;
    s.label = c == 0 ? "reference" : fmt::format("perturbation {}", c);
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double t = a.t(k);
      const Vector xt = x(t);
      const Vector u = controls[c].value(t, xt);
      const double gx = p.payoff_gradient(t, xt, u).norm();
      const double an = a.dim() == 1 ? std::abs(a.value(k)(0, 0))
                                     : Eigen::JacobiSVD<Matrix>(a.value(k)).singularValues()(0);
      s.t.push_back(t);
      s.product.push_back(gx * an);
    }
    out.push_back(std::move(s));
  }
  return out;
}

DominanceFit fit_exponential_dominance(const ControlProblem& p, const std::vector<ReferenceControl>& controls,
                                       Span span, const OdeOptions& opts) {
  return fit_exponential_dominance(dominance_samples(p, controls, span, opts));
}

// ---------------------------------------------------------------------------
// Lyapunov exponents

std::vector<double> lyapunov_exponents(const MatrixArc& a, const LyapunovOptions& opts) {
  if (a.size() < 2) throw PreconditionError("matrix arc has fewer than two nodes");
  if (!(opts.interval > 0.0)) throw PreconditionError("re-orthonormalization interval must be positive");
  const Span s = a.span();
  if (s.length() < opts.min_span - slack(opts.min_span))
    throw PreconditionError(fmt::format("arc span {:.6g} shorter than {:.6g}", s.length(), opts.min_span));
  const auto m = static_cast<Eigen::Index>(a.dim());
  Matrix q = Matrix::Identity(m, m), block = Matrix::Identity(m, m);
  Vector sums = Vector::Zero(m);
  double last = s.begin;
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    Matrix step = a.step(k);
    if (opts.adjoint_flow) step = checked_inverse(step).inverse.transpose();
    block = step * block;
    const double t = a.t(k + 1);
    if (t - last >= opts.interval - slack(t) || k + 2 == a.size()) {
      Eigen::HouseholderQR<Matrix> qr(block * q);
      const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
      for (Eigen::Index i = 0; i < m; ++i) {
        const double d = std::abs(r(i, i));
        if (!(d > 0.0) || !std::isfinite(d))
          throw SingularMatrixError(fmt::format("re-orthonormalization degenerate near t={:.6g}", t));
        sums[i] += std::log(d);
      }
      q = qr.householderQ() * Matrix::Identity(m, m);
      block.setIdentity();
      last = t;
    }
  }
  std::vector<double> out(sums.data(), sums.data() + m);
  for (double& v : out) v /= s.length();
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

// ---------------------------------------------------------------------------
// Monotone case

MonotoneReport monotone_analysis(const ControlProblem& p, const ReferenceControl& u0, const Trajectory& x,
                                 const std::vector<double>& probe_times, const VectorArc& psi, double lambda,
                                 const RowVector& limit, const std::vector<RowVector>& perturbed_limits) {
  constexpr double kSign = 1e-8;
  MonotoneReport rep;
  const auto m = static_cast<Eigen::Index>(p.state_dim());
  for (double t : probe_times) {
    const Vector xt = x(t);
    const Vector u = u0.value(t, xt);
    const RowVector gx = p.payoff_gradient(t, xt, u);
    const Matrix fx = p.state_jacobian(t, xt, u);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (gx[i] < 0.0) {
        rep.gradient_nonnegative = false;
        rep.violations.push_back(fmt::format("g_x[{}] = {:.6g} < 0 at t={:.6g}", i + 1, gx[i], t));
      }
      if (!(gx[i] > 0.0)) rep.gradient_positive = false;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (i == j) continue;
        if (fx(i, j) < 0.0) {
          rep.offdiag_nonnegative = false;
          rep.violations.push_back(fmt::format("f_x[{},{}] = {:.6g} < 0 at t={:.6g}", i + 1, j + 1, fx(i, j), t));
        }
        if (!(fx(i, j) > 0.0)) rep.offdiag_positive = false;
      }
    }
  }
  // A scalar state has no off-diagonal entries to be strict about.
  if (m == 1) rep.offdiag_positive = true;
  rep.psi0 = psi(psi.span().begin);
  if (!rep.hypotheses_hold()) return rep;

  double lowest = kInf;
  for (double t : probe_times)
    if (t >= psi.span().begin - slack(t) && t <= psi.span().end + slack(t)) lowest = std::min(lowest, psi(t).minCoeff());
  rep.psi_min_component = lowest;
  rep.psi_nonnegative = lowest >= -kSign;
  if (rep.strict_hypotheses()) rep.psi_positive = lowest > 0.0;

  rep.lower = lambda * limit.transpose();
  rep.upper = rep.lower;
  for (const auto& l : perturbed_limits) rep.upper = rep.upper.cwiseMax(lambda * l.transpose());
  bool ok = true;
  for (Eigen::Index i = 0; i < m; ++i)
    ok = ok && rep.upper[i] >= rep.psi0[i] - kSign && rep.psi0[i] >= rep.lower[i] - kSign && rep.lower[i] >= -kSign;
  rep.sandwich_holds = ok;
  return rep;
}

// ---------------------------------------------------------------------------
// Battery

namespace {

ConditionEntry entry_from(std::string id, const LimitCheck& c) {
  ConditionEntry e;
  e.id = std::move(id);
  e.verdict = c.verdict;
  e.evidence = c.evidence;
  e.subsequence = c.subsequence;
  return e;
}

std::vector<double> doubling_taus(Span s) {
  std::vector<double> out;
  for (double t = 1.0; t <= s.end + slack(s.end); t *= 2.0)
    if (t >= s.begin) out.push_back(t);
  if (out.empty()) out.push_back(s.end);
  return out;
}

template <class F>
void guarded(TransversalityReport& rep, const std::string& id, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    ConditionEntry entry;
    entry.id = id;
    entry.note = fmt::format("not evaluated: {}", e.what());
    rep.entries.push_back(std::move(entry));
  }
}

}  // namespace

TransversalityReport run_battery(const ControlProblem& p, const BatteryInput& in, const BatteryOptions& opts) {
  TransversalityReport rep;
  rep.tolerance = opts.tol;
  rep.notes = in.notes;
  const auto taus = in.taus.empty() ? doubling_taus(in.psi.span()) : in.taus;

  guarded(rep, "trans", [&] { rep.entries.push_back(entry_from("trans", check_plain_limit(in.psi, opts.tol))); });
  guarded(rep, "partlim",
          [&] { rep.entries.push_back(entry_from("partlim", check_subsequence_limit(in.psi, taus, opts.tol))); });
  guarded(rep, "weighted_liminf", [&] {
    rep.entries.push_back(
        entry_from("weighted_liminf", check_weighted_limit(in.psi, in.a, WeightMode::Liminf, opts.tol, taus)));
  });
  guarded(rep, "lim", [&] {
    rep.entries.push_back(entry_from("lim", check_weighted_limit(in.psi, in.a, WeightMode::FullLimit, opts.tol)));
  });

  if (!in.dominance.empty()) {
    guarded(rep, "exp", [&] {
      const auto fit = fit_exponential_dominance(in.dominance);
      ConditionEntry e;
      e.id = "exp";
      e.verdict = fit.holds ? Verdict::Holds : Verdict::Fails;
      e.evidence.columns = {"trajectory", "alpha", "beta"};
      for (std::size_t i = 0; i < fit.alpha_each.size(); ++i)
        e.evidence.rows.push_back({static_cast<double>(i), fit.alpha_each[i], fit.beta_each[i]});
      e.note = fmt::format("fit over a sample of {} trajectories", fit.sample_size);
      rep.dominance = fit;
      rep.entries.push_back(std::move(e));
    });
  }

  try {
    rep.lyapunov = lyapunov_exponents(in.a, opts.lyapunov);
  } catch (const Error& e) {
    rep.notes.push_back(fmt::format("lyapunov exponents not evaluated: {}", e.what()));
  }

  if (in.x) {
    guarded(rep, "monotone", [&] {
      const auto mono = monotone_analysis(p, in.u0, *in.x, in.probe_times, in.psi, in.lambda, in.limit,
                                          in.perturbed_limits);
      ConditionEntry e;
      e.id = "monotone";
      if (!mono.hypotheses_hold()) {
        e.verdict = Verdict::Inconclusive;
        e.note = "sign hypotheses fail; no sign conclusion asserted";
      } else {
        const bool ok = mono.psi_nonnegative.value_or(false) && mono.sandwich_holds.value_or(false);
        e.verdict = ok ? Verdict::Holds : Verdict::Fails;
        e.note = "probe-scale estimate";
      }
      e.evidence.columns = {"psi0", "lower", "upper"};
      if (mono.lower.size() == mono.psi0.size())
        for (Eigen::Index i = 0; i < mono.psi0.size(); ++i)
          e.evidence.rows.push_back({mono.psi0[i], mono.lower[i], mono.upper[i]});
      rep.monotone = mono;
      rep.entries.push_back(std::move(e));
    });
  }

  const auto* trans = rep.find("trans");
  const auto* lim = rep.find("lim");
  const auto* dom = rep.find("exp");
  if (in.a_is_fundamental && dom && dom->verdict == Verdict::Holds && lim && lim->verdict != Verdict::Holds)
    rep.notes.push_back(fmt::format("internal inconsistency: exponential dominance holds but the weighted limit is {}",
                                    to_string(lim->verdict)));
  if (trans && lim && trans->verdict == Verdict::Fails && lim->verdict == Verdict::Holds)
    rep.notes.push_back(
        "psi itself does not vanish while psi A vanishes: the plain condition is not necessary here, "
        "the weighted one is the meaningful asymptotic condition");
  return rep;
}

TransversalityReport run_battery(const ControlProblem& p, const Extremal& e, const MatrixArc& a,
                                 const std::vector<double>& taus, const BatteryOptions& opts) {
  BatteryInput in;
  in.psi = e.psi;
  in.lambda = e.lambda;
  in.a = a;
  in.taus = taus;
  return run_battery(p, in, opts);
}

BatteryInput prepare_battery(const ControlProblem& p, const ReferenceControl& u0, const PrepareOptions& opts,
                             const std::optional<AdjointArc>& psi_override) {
  const auto m = static_cast<Eigen::Index>(p.state_dim());
  const ReferenceControl u = open_loop_reference(p, u0, opts.t_max, opts.ode);
  const auto acc = accumulate(p, u, Vector::Zero(m), opts.t_max, opts.ode);
  const auto verdict = classify_convergence(acc, opts.tol_conv);

  BatteryInput in;
  in.a = *acc.A;
  in.x = *acc.x;
  in.u0 = u;
  in.limit = verdict.kind == ConvergenceVerdict::Kind::Converged ? verdict.limit : acc.I.back();
  if (verdict.kind != ConvergenceVerdict::Kind::Converged)
    in.notes.push_back(fmt::format("accumulated integral {}; partial limit at T={:.6g} used",
                                   to_string(verdict.kind), acc.t_end()));
  if (psi_override) {
    in.psi = *psi_override;
    in.lambda = 1.0 / (1.0 + in.limit.norm());
  } else {
    const auto ca = cauchy_adjoint(p, u, acc, in.limit, opts.t_psi);
    in.psi = ca.psi;
    in.lambda = ca.lambda;
  }
  for (double t = 0.0; t <= in.psi.span().end + slack(t); t += 0.25) in.probe_times.push_back(t);

  for (Eigen::Index i = 0; i < m; ++i)
    for (double sgn : {1.0, -1.0}) {
      const Vector xi = sgn * opts.probe_radius * Vector::Unit(m, i);
      try {
        in.perturbed_limits.push_back(accumulate(p, u, xi, opts.t_max, opts.ode).I.back());
      } catch (const IntegrationError& e) {
        in.notes.push_back(fmt::format("perturbed start failed: {}", e.what()));
      }
    }

  const Span dom{0.0, in.psi.span().end};
  std::vector<ReferenceControl> controls{u};
  for (auto& c : bang_pool(p, u, opts.dominance_controls, dom.end, opts.seed)) controls.push_back(std::move(c));
  in.dominance = dominance_samples(p, controls, dom, opts.ode);
  return in;
}

MatrixArc weight_from_expressions(std::size_t dim, const std::vector<std::string>& entries, Span span,
                                  double spacing) {
  const auto m = static_cast<Eigen::Index>(dim);
  if (dim == 0 || entries.size() != dim * dim)
    throw PreconditionError(fmt::format("weight needs {} entries, got {}", dim * dim, entries.size()));
  std::vector<Expr> e;
  for (const auto& s : entries) e.push_back(parse(s, {"t"}));
  const auto t = matrix_nodes(span, spacing, {});
  std::vector<Matrix> a, d, steps;
  std::vector<double> logdet;
  for (double tk : t) {
    Matrix v(m, m), dv(m, m);
    const std::vector<double> at{tk};
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        const auto r = e[static_cast<std::size_t>(i * m + j)].eval_dual(at, 0);
        v(i, j) = r.value;
        dv(i, j) = r.derivative;
      }
    if (!v.allFinite()) throw PreconditionError(fmt::format("weight is not finite at t={:.6g}", tk));
    logdet.push_back(std::log(std::abs(v.determinant())));
    a.push_back(std::move(v));
    d.push_back(std::move(dv));
  }
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    // Exact-zero pivots only: a graded weight like diag(e^-t, e^-2t) is fine.
    Eigen::FullPivLU<Matrix> lu(a[k]);
    lu.setThreshold(0.0);
    steps.push_back(lu.isInvertible() ? Matrix(a[k + 1] * lu.inverse())
                                      : Matrix::Constant(m, m, std::numeric_limits<double>::quiet_NaN()));
  }
  return MatrixArc(t, std::move(a), std::move(logdet), std::move(steps), d, d);
}

VectorArc tabulate_arc(const std::function<Vector(double)>& f, const std::function<Vector(double)>& df, Span span,
                       double spacing) {
  DenseSolution sol;
  for (double t : matrix_nodes(span, spacing, {})) {
    sol.t.push_back(t);
    sol.y.push_back(f(t));
    sol.dleft.push_back(df(t));
    sol.dright.push_back(sol.dleft.back());
  }
  return VectorArc(std::move(sol));
}

// ---------------------------------------------------------------------------
// Report text

const ConditionEntry* TransversalityReport::find(std::string_view id) const {
  for (const auto& e : entries)
    if (e.id == id) return &e;
  return nullptr;
}

std::string TransversalityReport::summary_line() const {
  std::string out;
  for (const auto& e : entries) {
    if (!out.empty()) out += ';';
    out += e.id + '=' + to_string(e.verdict);
  }
  return out;
}

std::vector<std::pair<std::string, Verdict>> parse_summary_line(std::string_view line) {
  std::vector<std::pair<std::string, Verdict>> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto end = std::min(line.find(';', pos), line.size());
    const auto item = line.substr(pos, end - pos);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ParseError("summary item without '='", pos);
    out.emplace_back(std::string(item.substr(0, eq)), parse_verdict(item.substr(eq + 1)));
    pos = end + 1;
  }
  return out;
}

namespace {

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt17(v[i]);
  return out;
}

std::string join(const Vector& v) { return join(std::vector<double>(v.data(), v.data() + v.size())); }

std::string flag(const std::optional<bool>& b) { return b ? (*b ? "true" : "false") : "na"; }

void write_evidence(std::string& out, const Evidence& ev) {
  out += "evidence\n";
  for (std::size_t i = 0; i < ev.columns.size(); ++i) out += (i ? "," : "") + ev.columns[i];
  out += '\n';
  for (const auto& r : ev.rows) out += join(r) + '\n';
  out += "end\n";
}

// Line cursor with offsets for error reporting.
struct Lines {
  std::string_view text;
  std::size_t pos = 0;
  [[nodiscard]] bool done() const { return pos >= text.size(); }
  std::string_view next() {
    const auto end = std::min(text.find('\n', pos), text.size());
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  }
};

std::pair<std::string, std::string> key_value(std::string_view line, std::size_t offset) {
  const auto eq = line.find(" = ");
  if (eq == std::string_view::npos) throw ParseError(fmt::format("expected 'key = value', got '{}'", line), offset);
  return {std::string(line.substr(0, eq)), std::string(line.substr(eq + 3))};
}

double number(std::string_view s, std::size_t offset) {
  try {
    const auto t = parse_csv(fmt::format("v\n{}\n", s));
    if (t.rows.size() != 1) throw ConfigError("empty");
    return t.rows[0][0];
  } catch (const ConfigError&) {
    throw ParseError(fmt::format("bad number '{}'", s), offset);
  }
}

std::vector<double> numbers(std::string_view s, std::size_t offset) {
  if (s.empty()) return {};
  try {
    std::string header;
    const auto n = std::count(s.begin(), s.end(), ',') + 1;
    for (long i = 0; i < n; ++i) header += i ? ",c" : "c";
    const auto t = parse_csv(fmt::format("{}\n{}\n", header, s));
    return t.rows.at(0);
  } catch (const std::exception&) {
    throw ParseError(fmt::format("bad number list '{}'", s), offset);
  }
}

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::optional<bool> parse_flag(std::string_view s, std::size_t offset) {
  if (s == "true") return true;
  if (s == "false") return false;
  if (s == "na") return std::nullopt;
  throw ParseError(fmt::format("bad flag '{}'", s), offset);
}

bool parse_bool(std::string_view s, std::size_t offset) {
  const auto f = parse_flag(s, offset);
  if (!f) throw ParseError("flag must be true or false", offset);
  return *f;
}

Evidence read_evidence(Lines& lines) {
  Evidence ev;
  const auto at = lines.pos;
  if (lines.done()) throw ParseError("evidence block truncated", at);
  const auto header = lines.next();
  std::string block(header);
  block += '\n';
  for (;;) {
    if (lines.done()) throw ParseError("evidence block without 'end'", lines.pos);
    const auto line = lines.next();
    if (line == "end") break;
    block += std::string(line) + '\n';
  }
  try {
    auto t = parse_csv(block);
    ev.columns = std::move(t.header);
    ev.rows = std::move(t.rows);
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), at);
  }
  return ev;
}

}  // namespace

std::string TransversalityReport::serialize() const {
  std::string out = "horizon-pmp transversality report\n";
  out += "summary = " + summary_line() + '\n';
  out += "tolerance = " + fmt17(tolerance) + '\n';
  for (const auto& e : entries) {
    out += "\n[condition " + e.id + "]\n";
    out += "verdict = " + to_string(e.verdict) + '\n';
    out += "subsequence = " + join(e.subsequence) + '\n';
    out += "note = " + one_line(e.note) + '\n';
    write_evidence(out, e.evidence);
  }
  if (dominance) {
    const auto& d = *dominance;
    out += "\n[dominance]\n";
    out += "alpha = " + fmt17(d.alpha) + '\n';
    out += "beta = " + fmt17(d.beta) + '\n';
    out += fmt::format("holds = {}\n", d.holds);
    out += fmt::format("sample_size = {}\n", d.sample_size);
    out += "max_log_excess = " + fmt17(d.max_log_excess) + '\n';
    out += "beta_envelope = " + fmt17(d.beta_envelope) + '\n';
    out += "alpha_each = " + join(d.alpha_each) + '\n';
    out += "beta_each = " + join(d.beta_each) + '\n';
  }
  out += "\n[lyapunov]\n";
  out += "exponents = " + join(lyapunov) + '\n';
  if (monotone) {
    const auto& mo = *monotone;
    out += "\n[monotone]\n";
    out += fmt::format("gradient_nonnegative = {}\n", mo.gradient_nonnegative);
    out += fmt::format("gradient_positive = {}\n", mo.gradient_positive);
    out += fmt::format("offdiag_nonnegative = {}\n", mo.offdiag_nonnegative);
    out += fmt::format("offdiag_positive = {}\n", mo.offdiag_positive);
    out += "psi_nonnegative = " + flag(mo.psi_nonnegative) + '\n';
    out += "psi_positive = " + flag(mo.psi_positive) + '\n';
    out += "psi_min_component = " + fmt17(mo.psi_min_component) + '\n';
    out += "sandwich_holds = " + flag(mo.sandwich_holds) + '\n';
    out += "psi0 = " + join(mo.psi0) + '\n';
    out += "lower = " + join(mo.lower) + '\n';
    out += "upper = " + join(mo.upper) + '\n';
    for (const auto& v : mo.violations) out += "violation = " + one_line(v) + '\n';
  }
  out += "\n[notes]\n";
  for (const auto& n : notes) out += "note = " + one_line(n) + '\n';
  return out;
}

TransversalityReport TransversalityReport::parse(std::string_view text) {
  TransversalityReport rep;
  Lines lines{text};
  if (lines.done() || lines.next() != "horizon-pmp transversality report")
    throw ParseError("missing report header", 0);
  std::string section;
  std::optional<std::string> summary;
  bool saw_tol = false;
  while (!lines.done()) {
    const auto at = lines.pos;
    const auto line = lines.next();
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", at);
      section = std::string(line.substr(1, line.size() - 2));
      if (section.rfind("condition ", 0) == 0) {
        rep.entries.emplace_back();
        rep.entries.back().id = section.substr(10);
        section = "condition";
      } else if (section == "dominance") {
        rep.dominance.emplace();
      } else if (section == "monotone") {
        rep.monotone.emplace();
      } else if (section != "lyapunov" && section != "notes") {
        throw ParseError(fmt::format("unknown section '{}'", section), at);
      }
      continue;
    }
    if (section == "condition" && line == "evidence") {
      rep.entries.back().evidence = read_evidence(lines);
      continue;
    }
    const auto [key, value] = key_value(line, at);
    if (section.empty()) {
      if (key == "summary") summary = value;
      else if (key == "tolerance") { rep.tolerance = number(value, at); saw_tol = true; }
      else throw ParseError(fmt::format("unknown key '{}'", key), at);
    } else if (section == "condition") {
      auto& e = rep.entries.back();
      if (key == "verdict") e.verdict = parse_verdict(value);
      else if (key == "subsequence") e.subsequence = numbers(value, at);
      else if (key == "note") e.note = value;
      else throw ParseError(fmt::format("unknown key '{}'", key), at);
    } else if (section == "dominance") {
      auto& d = *rep.dominance;
      if (key == "alpha") d.alpha = number(value, at);
      else if (key == "beta") d.beta = number(value, at);
      else if (key == "holds") d.holds = parse_bool(value, at);
      else if (key == "sample_size") d.sample_size = static_cast<std::size_t>(number(value, at));
      else if (key == "max_log_excess") d.max_log_excess = number(value, at);
      else if (key == "beta_envelope") d.beta_envelope = number(value, at);
      else if (key == "alpha_each") d.alpha_each = numbers(value, at);
      else if (key == "beta_each") d.beta_each = numbers(value, at);
      else throw ParseError(fmt::format("unknown key '{}'", key), at);
    } else if (section == "lyapunov") {
      if (key != "exponents") throw ParseError(fmt::format("unknown key '{}'", key), at);
      rep.lyapunov = numbers(value, at);
    } else if (section == "monotone") {
      auto& mo = *rep.monotone;
      if (key == "gradient_nonnegative") mo.gradient_nonnegative = parse_bool(value, at);
      else if (key == "gradient_positive") mo.gradient_positive = parse_bool(value, at);
      else if (key == "offdiag_nonnegative") mo.offdiag_nonnegative = parse_bool(value, at);
      else if (key == "offdiag_positive") mo.offdiag_positive = parse_bool(value, at);
      else if (key == "psi_nonnegative") mo.psi_nonnegative = parse_flag(value, at);
      else if (key == "psi_positive") mo.psi_positive = parse_flag(value, at);
      else if (key == "psi_min_component") mo.psi_min_component = number(value, at);
      else if (key == "sandwich_holds") mo.sandwich_holds = parse_flag(value, at);
      else if (key == "psi0") mo.psi0 = to_vector(numbers(value, at));
      else if (key == "lower") mo.lower = to_vector(numbers(value, at));
      else if (key == "upper") mo.upper = to_vector(numbers(value, at));
      else if (key == "violation") mo.violations.push_back(value);
      else throw ParseError(fmt::format("unknown key '{}'", key), at);
    } else if (section == "notes") {
      if (key != "note") throw ParseError(fmt::format("unknown key '{}'", key), at);
      rep.notes.push_back(value);
    }
  }
  if (!summary || !saw_tol) throw ParseError("report lacks summary or tolerance", 0);
  if (*summary != rep.summary_line()) throw ParseError("summary line disagrees with condition sections", 0);
  return rep;
}

}  // namespace hpmp
