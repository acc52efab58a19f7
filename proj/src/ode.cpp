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

#include "horizon_pmp/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "horizon_pmp/errors.hpp"
#include "horizon_pmp/io.hpp"

namespace hpmp {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// Continuous extension (Hairer, Norsett & Wanner, dopri5 dense output).
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct RawNode {
  double t;
  Vector y;
  Vector d_in;   // derivative of the piece that arrived here
  Vector d_out;  // derivative of the piece that leaves from here
  Vector corr;   // correction of the step that ended here
};

bool all_finite(const Vector& v) { return v.allFinite(); }

double error_norm(const Vector& err, const Vector& y0, const Vector& y1, const OdeOptions& o) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = o.atol + o.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    worst = std::max(worst, std::abs(err[i]) / sc);
  }
  return worst;
}

// Integrate one smooth piece from a to b and append nodes after the first.
void run_piece(const OdeRhs& rhs, double a, double b, double key, std::vector<RawNode>& nodes, const Vector& y0_norm,
               const OdeOptions& o, std::size_t& steps) {
  const double dir = b > a ? 1.0 : -1.0;
  Vector y = nodes.back().y;
  const auto n = y.size();
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y5(n), err(n);
  rhs(a, y, key, k1);
  nodes.back().d_out = k1;

  const double length = std::abs(b - a);
  double h;
  {
    // Starting step from the size of y and y'.
    const double d0 = y.lpNorm<Eigen::Infinity>(), d1 = k1.lpNorm<Eigen::Infinity>();
    h = (d0 > 1e-5 && d1 > 1e-5) ? 0.01 * d0 / d1 : 1e-4;
    h = std::clamp(h, 1e-8, o.max_step);
    h = std::min(h, length);
  }

  double t = a;
  bool last_rejected = false;
  while (dir * (b - t) > 0.0) {
    if (++steps > o.max_steps) throw IntegrationError(IntegrationError::Kind::TooManySteps, t, "too many steps");
    const double remaining = std::abs(b - t);
    bool final_step = false;
    if (h >= remaining * (1.0 - 1e-12)) {
      h = remaining;
      final_step = true;
    }
    const double hs = dir * h;
    tmp = y + hs * (a21 * k1);
    rhs(t + c2 * hs, tmp, key, k2);
    tmp = y + hs * (a31 * k1 + a32 * k2);
    rhs(t + c3 * hs, tmp, key, k3);
    tmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * hs, tmp, key, k4);
    tmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * hs, tmp, key, k5);
    tmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + hs, tmp, key, k6);
    y5 = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const double t_new = final_step ? b : t + hs;
    rhs(t_new, y5, key, k7);
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const double en = all_finite(y5) && all_finite(k7) ? error_norm(err, y, y5, o) : std::numeric_limits<double>::infinity();
    if (en <= 1.0) {
      t = t_new;
      Vector corr = hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      nodes.push_back({t, y5, k7, k7, std::move(corr)});
      y = y5;
      k1 = k7;
      if (y.lpNorm<Eigen::Infinity>() > o.blowup)
        throw IntegrationError(IntegrationError::Kind::BlowUp, t,
                               fmt::format("solution norm exceeded {:g} near t={:.17g}", o.blowup, t));
      double fac = en == 0.0 ? 10.0 : 0.9 * std::pow(en, -0.2);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
      h = std::min(h * fac, o.max_step);
      last_rejected = false;
    } else {
      const double fac = std::isfinite(en) ? std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9) : 0.1;
      h *= fac;
      last_rejected = true;
    }
    const double min_step = 1e-14 * std::max(1.0, std::abs(t));
    if (h < min_step && dir * (b - t) > min_step) {
      // A collapsing step on a rapidly growing solution is a finite escape.
      if (y.lpNorm<Eigen::Infinity>() > 1e6 * (1.0 + y0_norm.lpNorm<Eigen::Infinity>()))
        throw IntegrationError(IntegrationError::Kind::BlowUp, t,
                               fmt::format("finite escape time near t={:.17g}", t));
      throw IntegrationError(IntegrationError::Kind::StepUnderflow, t,
                             fmt::format("step size underflow at t={:.17g}", t));
    }
  }
}

}  // namespace

DenseSolution integrate(const OdeRhs& rhs, const Vector& y0, double t0, double t1,
                        std::span<const double> breakpoints, const OdeOptions& opts) {
  if (!all_finite(y0)) throw PreconditionError("initial value is not finite");
  std::vector<double> cuts;
  const double lo = std::min(t0, t1), hi = std::max(t0, t1);
  for (double b : breakpoints)
    if (b > lo && b < hi) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  if (t1 < t0) std::reverse(cuts.begin(), cuts.end());

  std::vector<double> points{t0};
  points.insert(points.end(), cuts.begin(), cuts.end());
  points.push_back(t1);

  std::vector<RawNode> nodes;
  nodes.push_back({t0, y0, Vector(), Vector(), Vector()});
  std::size_t steps = 0;
  if (t0 == t1) {
    Vector d(y0.size());
    rhs(t0, y0, t0, d);
    nodes.back().d_in = nodes.back().d_out = d;
  }
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double a = points[i], b = points[i + 1];
    run_piece(rhs, a, b, std::min(a, b), nodes, y0, opts, steps);
  }
  nodes.front().d_in = nodes.front().d_out;
  nodes.back().d_out = nodes.back().d_in;

  DenseSolution sol;
  const bool backward = t1 < t0;
  if (backward) std::reverse(nodes.begin(), nodes.end());
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    sol.correction.push_back(backward ? nodes[i].corr : nodes[i + 1].corr);
  for (auto& nd : nodes) {
    sol.t.push_back(nd.t);
    sol.y.push_back(std::move(nd.y));
    // Forward: the arriving piece lies to the left. Backward: to the right.
    sol.dleft.push_back(backward ? nd.d_out : nd.d_in);
    sol.dright.push_back(backward ? std::move(nd.d_in) : std::move(nd.d_out));
  }
  return sol;
}

// ---------------------------------------------------------------------------
// VectorArc

VectorArc::VectorArc(DenseSolution sol)
    : t_(std::move(sol.t)),
      y_(std::move(sol.y)),
      dl_(std::move(sol.dleft)),
      dr_(std::move(sol.dright)),
      corr_(std::move(sol.correction)) {
  if (t_.empty()) throw PreconditionError("arc needs at least one node");
  if (!corr_.empty() && corr_.size() + 1 != t_.size()) throw PreconditionError("arc correction terms misaligned");
}

std::size_t VectorArc::interval(double t) const {
  const double slack = 1e-12 * std::max(1.0, std::abs(t));
  if (t < t_.front() - slack || t > t_.back() + slack)
    throw PreconditionError(fmt::format("t={:.17g} outside arc span [{:.17g}, {:.17g}]", t, t_.front(), t_.back()));
  if (t_.size() == 1) return 0;
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  auto i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - t_.begin()) - 1));
  return std::min(i, t_.size() - 2);
}

namespace {

struct HermiteWeights {
  double h00, h10, h01, h11;  // value weights (h10, h11 pre-multiplied by h)
  double d00, d10, d01, d11;  // derivative weights
};

HermiteWeights hermite(double t0, double t1, double t) {
  const double h = t1 - t0;
  const double s = (t - t0) / h, s2 = s * s, s3 = s2 * s;
  return {2 * s3 - 3 * s2 + 1,      (s3 - 2 * s2 + s) * h, -2 * s3 + 3 * s2,       (s3 - s2) * h,
          (6 * s2 - 6 * s) / h,     3 * s2 - 4 * s + 1,    (-6 * s2 + 6 * s) / h, 3 * s2 - 2 * s};
}

}  // namespace

Vector VectorArc::operator()(double t) const {
  const auto i = interval(t);
  if (t_.size() == 1 || t <= t_[i]) return y_[i];
  if (t >= t_[i + 1]) return y_[i + 1];
  const auto w = hermite(t_[i], t_[i + 1], t);
  Vector v = w.h00 * y_[i] + w.h10 * dr_[i] + w.h01 * y_[i + 1] + w.h11 * dl_[i + 1];
  if (!corr_.empty()) {
    // s^2 (1-s)^2 is symmetric, so the term is the same for backward steps.
    const double s = (t - t_[i]) / (t_[i + 1] - t_[i]);
    v += (s * s * (1 - s) * (1 - s)) * corr_[i];
  }
  return v;
}

Vector VectorArc::derivative(double t) const {
  const auto i = interval(t);
  if (t_.size() == 1) return dr_[0];
  if (t <= t_[i]) return dr_[i];
  if (t >= t_[i + 1]) return i + 2 == t_.size() ? dl_[i + 1] : dr_[i + 1];
  const auto w = hermite(t_[i], t_[i + 1], t);
  Vector d = w.d00 * y_[i] + w.d10 * dr_[i] + w.d01 * y_[i + 1] + w.d11 * dl_[i + 1];
  if (!corr_.empty()) {
    const double h = t_[i + 1] - t_[i];
    const double s = (t - t_[i]) / h;
    d += (2 * s * (1 - s) * (1 - 2 * s) / h) * corr_[i];
  }
  return d;
}

void VectorArc::scale(double c) {
  for (auto* vs : {&y_, &dl_, &dr_, &corr_})
    for (auto& v : *vs) v *= c;
}

// ---------------------------------------------------------------------------
// MatrixArc

MatrixArc::MatrixArc(std::vector<double> t, std::vector<Matrix> a, std::vector<double> logdet,
                     std::vector<Matrix> steps, std::vector<Matrix> dleft, std::vector<Matrix> dright)
    : t_(std::move(t)),
      a_(std::move(a)),
      logdet_(std::move(logdet)),
      steps_(std::move(steps)),
      dl_(std::move(dleft)),
      dr_(std::move(dright)) {
  if (t_.empty() || a_.size() != t_.size() || logdet_.size() != t_.size() || steps_.size() + 1 != t_.size() ||
      dl_.size() != t_.size() || dr_.size() != t_.size())
    throw PreconditionError("matrix arc fields have inconsistent lengths");
}

MatrixArc MatrixArc::identity(std::size_t dim, Span span, double spacing) {
  const auto t = matrix_nodes(span, spacing, {});
  const auto m = static_cast<Eigen::Index>(dim);
  const Matrix I = Matrix::Identity(m, m), Z = Matrix::Zero(m, m);
  return MatrixArc(t, std::vector<Matrix>(t.size(), I), std::vector<double>(t.size(), 0.0),
                   std::vector<Matrix>(t.size() - 1, I), std::vector<Matrix>(t.size(), Z),
                   std::vector<Matrix>(t.size(), Z));
}

std::optional<std::size_t> MatrixArc::node_index(double t) const {
  auto it = std::lower_bound(t_.begin(), t_.end(), t - 1e-12 * std::max(1.0, std::abs(t)));
  if (it != t_.end() && std::abs(*it - t) <= 1e-12 * std::max(1.0, std::abs(t)))
    return static_cast<std::size_t>(it - t_.begin());
  return std::nullopt;
}

Matrix MatrixArc::operator()(double t) const {
  if (auto i = node_index(t)) return a_[*i];
  if (t < t_.front() || t > t_.back())
    throw PreconditionError(fmt::format("t={:.17g} outside arc span [{:.17g}, {:.17g}]", t, t_.front(), t_.back()));
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const auto i = static_cast<std::size_t>(it - t_.begin()) - 1;
  const auto w = hermite(t_[i], t_[i + 1], t);
  return w.h00 * a_[i] + w.h10 * dr_[i] + w.h01 * a_[i + 1] + w.h11 * dl_[i + 1];
}

InverseResult checked_inverse(const Matrix& a) {
  if (a.rows() != a.cols()) throw PreconditionError("inverse of a non-square matrix");
  if (!a.allFinite()) throw SingularMatrixError("matrix has non-finite entries");
  const Eigen::JacobiSVD<Matrix> svd(a);
  const auto& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e14)) throw SingularMatrixError(fmt::format("matrix is numerically singular (cond={:.3g})", cond));
  return {Eigen::PartialPivLU<Matrix>(a).inverse(), cond};
}

InverseResult inverse_at(const MatrixArc& a, double t) { return checked_inverse(a(t)); }

// ---------------------------------------------------------------------------
// Problem-level integrations

namespace {

class AlongTrajectoryLaw final : public ControlLaw {
 public:
  AlongTrajectoryLaw(ReferenceControl u, Trajectory x) : u_(std::move(u)), x_(std::move(x)) {}
  Vector value(double t, const Vector& /*x*/, double piece_start) const override {
    return u_.value(t, x_(t), piece_start);
  }
  void breakpoints(double a, double b, std::vector<double>& out) const override {
    u_.law().breakpoints(a, b, out);
  }

 private:
  ReferenceControl u_;
  Trajectory x_;
};

}  // namespace

ReferenceControl along_trajectory(const ReferenceControl& u, const Trajectory& x) {
  if (!u.depends_on_state()) return u;
  return ReferenceControl(std::make_shared<AlongTrajectoryLaw>(u, x));
}

Trajectory integrate_state(const ControlProblem& p, const ReferenceControl& u, const Vector& x_init, Span span,
                           const OdeOptions& opts) {
  if (!(span.end > span.begin)) throw PreconditionError("state integration needs a nonempty span");
  if (static_cast<std::size_t>(x_init.size()) != p.state_dim()) throw PreconditionError("x_init has wrong length");
  const OdeRhs rhs = [&](double t, const Vector& x, double piece, Vector& dx) {
    dx = p.dynamics(t, x, u.value(t, x, piece));
  };
  const auto bps = u.breakpoints(span.begin, span.end);
  return Trajectory(integrate(rhs, x_init, span.begin, span.end, bps, opts));
}

AdjointArc integrate_adjoint_backward(const ControlProblem& p, const ReferenceControl& u, const Trajectory& x,
                                      double lambda, const Vector& psi_terminal, Span span, const OdeOptions& opts) {
  if (!(span.end > span.begin)) throw PreconditionError("adjoint integration needs a nonempty span");
  if (static_cast<std::size_t>(psi_terminal.size()) != p.state_dim())
    throw PreconditionError("terminal costate has wrong length");
  const OdeRhs rhs = [&](double t, const Vector& psi, double piece, Vector& dpsi) {
    const Vector xt = x(t);
    const Vector ut = u.value(t, xt, piece);
    dpsi = -(p.state_jacobian(t, xt, ut).transpose() * psi + lambda * p.payoff_gradient(t, xt, ut).transpose());
  };
  const auto bps = u.breakpoints(span.begin, span.end);
  return AdjointArc(integrate(rhs, psi_terminal, span.end, span.begin, bps, opts));
}

std::vector<double> matrix_nodes(Span span, double spacing, std::span<const double> breakpoints) {
  if (!(span.end > span.begin)) throw PreconditionError("matrix arc needs a nonempty span");
  if (!(spacing > 0.0)) throw PreconditionError("node spacing must be positive");
  std::vector<double> t;
  for (std::size_t i = 0;; ++i) {
    const double ti = span.begin + static_cast<double>(i) * spacing;
    if (ti >= span.end - 1e-12 * std::max(1.0, std::abs(span.end))) break;
    t.push_back(ti);
  }
  t.push_back(span.end);
  for (double b : breakpoints)
    if (b > span.begin && b < span.end) t.push_back(b);
  std::sort(t.begin(), t.end());
  std::vector<double> out;
  for (double v : t)
    if (out.empty() || v - out.back() > 1e-12 * std::max(1.0, std::abs(v))) out.push_back(v);
  return out;
}

MatrixArc fundamental_matrix(const ControlProblem& p, const ReferenceControl& u, const Trajectory& x, Span span,
                             const OdeOptions& opts) {
  const auto m = static_cast<Eigen::Index>(p.state_dim());
  const auto bps = u.breakpoints(span.begin, span.end);
  const auto t = matrix_nodes(span, opts.matrix_grid, bps);
  auto jac = [&](double s, double piece) {
    const Vector xs = x(s);
    return p.state_jacobian(s, xs, u.value(s, xs, piece));
  };

  std::vector<Matrix> a{Matrix::Identity(m, m)}, steps, dl, dr;
  std::vector<double> logdet{0.0};
  const OdeRhs rhs = [&](double s, const Vector& y, double piece, Vector& dy) {
    const Matrix J = jac(s, piece);
    const Eigen::Map<const Matrix> phi(y.data(), m, m);
    dy.resize(m * m + 1);
    Eigen::Map<Matrix>(dy.data(), m, m) = J * phi;
    dy[m * m] = J.trace();
  };
  Vector y0 = Vector::Zero(m * m + 1);
  Eigen::Map<Matrix>(y0.data(), m, m).setIdentity();

  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const auto sol = integrate(rhs, y0, t[k], t[k + 1], {}, opts);
    const Vector& y1 = sol.y.back();
    Matrix phi = Eigen::Map<const Matrix>(y1.data(), m, m);
    a.push_back(phi * a.back());
    logdet.push_back(logdet.back() + y1[m * m]);
    steps.push_back(std::move(phi));
    if (a.back().lpNorm<Eigen::Infinity>() > opts.blowup)
      throw IntegrationError(IntegrationError::Kind::BlowUp, t[k + 1],
                             fmt::format("fundamental matrix exceeded {:g} near t={:.17g}", opts.blowup, t[k + 1]));
  }
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double left_piece = k == 0 ? t[0] : t[k - 1];
    const double right_piece = k + 1 == t.size() ? left_piece : t[k];
    dr.push_back(jac(t[k], right_piece) * a[k]);
    dl.push_back(k == 0 ? dr.back() : Matrix(jac(t[k], left_piece) * a[k]));
  }
  if (t.size() > 1) dr.back() = dl.back();
  return MatrixArc(t, std::move(a), std::move(logdet), std::move(steps), std::move(dl), std::move(dr));
}

// ---------------------------------------------------------------------------
// CSV

std::string to_csv(const VectorArc& arc, std::string_view column) {
  std::string out = "t";
  for (std::size_t i = 1; i <= arc.dim(); ++i) out += fmt::format(",{}{}", column, i);
  out += '\n';
  for (std::size_t k = 0; k < arc.size(); ++k) {
    out += fmt17(arc.t(k));
    for (Eigen::Index i = 0; i < arc.value(k).size(); ++i) out += ',' + fmt17(arc.value(k)[i]);
    out += '\n';
  }
  return out;
}

std::string to_csv(const MatrixArc& arc) {
  const auto m = arc.dim();
  std::string out = "t";
  for (std::size_t i = 1; i <= m; ++i)
    for (std::size_t j = 1; j <= m; ++j) out += fmt::format(",a{}{}", i, j);
  out += '\n';
  for (std::size_t k = 0; k < arc.size(); ++k) {
    out += fmt17(arc.t(k));
    const Matrix& a = arc.value(k);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) out += ',' + fmt17(a(i, j));
    out += '\n';
  }
  return out;
}

}  // namespace hpmp
