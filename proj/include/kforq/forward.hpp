#pragma once

// Controlled viscous k-FORQ/MCH equation in momentum form,
//
//   y_t - eps y_xx + (u^2 - u_x^2) y_x + 2 u_x y^2 + k u_x = B omega,
//   y = u - u_xx,  y = u = 0 on the boundary,
//
// integrated by IMEX Euler: diffusion implicit, transport and control explicit.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "kforq/errors.hpp"
#include "kforq/grid.hpp"
#include "kforq/helmholtz.hpp"

namespace kforq {

struct ModelParams {
  double epsilon = 0.1;  ///< viscosity, > 0
  double k = 0.0;        ///< coefficient of the linear k u_x term
  double cfl = 0.5;      ///< advisory bound dt <= cfl h / max|u^2 - u_x^2|

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("ModelParams: epsilon must be > 0");
    if (!std::isfinite(k)) throw std::invalid_argument("ModelParams: k must be finite");
    if (!(cfl > 0.0)) throw std::invalid_argument("ModelParams: cfl must be > 0");
  }
};

/// A control lives on the step intervals: frame j holds omega on
/// [t_j, t_{j+1}), j = 0..n_steps-1.
using Control = Trajectory;

/// Values of a control at the cells of a ControlWindow, in window order.
struct WindowVector {
  std::vector<double> v;

  WindowVector() = default;
  explicit WindowVector(std::size_t n, double value = 0.0) : v(n, value) {}

  std::size_t size() const noexcept { return v.size(); }
  double& operator[](std::size_t i) noexcept { return v[i]; }
  double operator[](std::size_t i) const noexcept { return v[i]; }

  WindowVector& axpy(double a, const WindowVector& x) {
    if (x.size() != size()) throw DimensionError("WindowVector: size mismatch");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += a * x.v[i];
    return *this;
  }
  WindowVector& operator*=(double a) noexcept {
    for (double& x : v) x *= a;
    return *this;
  }
  friend WindowVector operator+(WindowVector a, const WindowVector& b) { return a.axpy(1.0, b); }
  friend WindowVector operator-(WindowVector a, const WindowVector& b) { return a.axpy(-1.0, b); }
  friend WindowVector operator*(double s, WindowVector a) { return a *= s; }
  friend bool operator==(const WindowVector&, const WindowVector&) = default;
};

/// Space-time control region Q0 realized as a node/step mask. A cell
/// (j, i) belongs to the window when x_i is in [x_min, x_max] and the
/// midpoint of step j lies in [t_min, t_max].
class ControlWindow {
 public:
  ControlWindow(const Domain1D& dom, const TimeGrid& tg, double x_min, double x_max, double t_min, double t_max)
      : dom_(dom), tg_(tg), x_min_(x_min), x_max_(x_max), t_min_(t_min), t_max_(t_max) {
    if (!(x_min <= x_max) || !(t_min <= t_max)) throw std::invalid_argument("ControlWindow: empty interval");
    if (x_min < 0.0 || x_max > dom.length || t_min < 0.0 || t_max > tg.horizon)
      throw std::invalid_argument("ControlWindow: window must lie inside Q");
    mask_.assign(static_cast<std::size_t>(tg.n_steps) * dom.size(), -1);
    for (int j = 0; j < tg.n_steps; ++j) {
      const double tm = tg.t(j) + 0.5 * tg.dt();
      if (tm < t_min || tm > t_max) continue;
      for (int i = 0; i < dom.n_interior; ++i) {
        const double x = dom.x(i);
        if (x < x_min || x > x_max) continue;
        mask_[index(j, i)] = static_cast<int>(cells_.size());
        cells_.emplace_back(j, i);
      }
    }
    if (cells_.empty()) throw std::invalid_argument("ControlWindow: window contains no grid cell");
  }

  /// The whole cylinder Q.
  static ControlWindow full(const Domain1D& dom, const TimeGrid& tg) {
    return ControlWindow(dom, tg, 0.0, dom.length, 0.0, tg.horizon);
  }

  const Domain1D& domain() const noexcept { return dom_; }
  const TimeGrid& time() const noexcept { return tg_; }
  std::size_t size() const noexcept { return cells_.size(); }
  const std::vector<std::pair<int, int>>& cells() const noexcept { return cells_; }
  bool contains(int step, int node) const noexcept { return mask_[index(step, node)] >= 0; }
  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  double t_min() const noexcept { return t_min_; }
  double t_max() const noexcept { return t_max_; }

  /// Zero extension B: window values -> control on Q.
  Control apply_B(const WindowVector& q) const {
    if (q.size() != size()) throw DimensionError("apply_B: window vector size mismatch");
    Control out = Trajectory::zeros(static_cast<std::size_t>(tg_.n_steps), dom_.size());
    for (std::size_t c = 0; c < cells_.size(); ++c) out[cells_[c].first][cells_[c].second] = q[c];
    return out;
  }

  /// Restriction B*: control on Q -> window values.
  WindowVector restrict(const Control& w) const {
    check_control(w);
    WindowVector out(size());
    for (std::size_t c = 0; c < cells_.size(); ++c) out[c] = w[cells_[c].first][cells_[c].second];
    return out;
  }

  /// L2(Q0) product: sum over cells of dt h q r.
  double inner(const WindowVector& q, const WindowVector& r) const {
    if (q.size() != size() || r.size() != size()) throw DimensionError("ControlWindow::inner: size mismatch");
    double acc = 0.0;
    for (std::size_t c = 0; c < q.size(); ++c) acc += q[c] * r[c];
    return tg_.dt() * dom_.h() * acc;
  }
  double norm(const WindowVector& q) const { return std::sqrt(inner(q, q)); }

  /// Window vector sampled from f(x, t) at (x_i, midpoint of step j).
  template <class F>
  WindowVector sample(F&& f) const {
    WindowVector out(size());
    for (std::size_t c = 0; c < cells_.size(); ++c)
      out[c] = f(dom_.x(cells_[c].second), tg_.t(cells_[c].first) + 0.5 * tg_.dt());
    return out;
  }

  void check_control(const Control& w) const {
    if (w.size() != static_cast<std::size_t>(tg_.n_steps)) throw DimensionError("control must have n_steps frames");
    for (const auto& f : w.frames) check_on(f, dom_, "control");
  }

 private:
  std::size_t index(int step, int node) const noexcept {
    return static_cast<std::size_t>(step) * dom_.size() + static_cast<std::size_t>(node);
  }

  Domain1D dom_;
  TimeGrid tg_;
  double x_min_, x_max_, t_min_, t_max_;
  std::vector<int> mask_;
  std::vector<std::pair<int, int>> cells_;
};

/// Transport part of the equation moved to the right-hand side:
/// -(u^2 - u_x^2) y_x - 2 u_x y^2 - k u_x.
inline Field transport(const Field& y, const Velocity& vel, const Domain1D& dom, double k) {
  const Field yx = d1(y, dom);
  Field out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double b = vel.u[i] * vel.u[i] - vel.ux[i] * vel.ux[i];
    out[i] = -b * yx[i] - 2.0 * vel.ux[i] * y[i] * y[i] - k * vel.ux[i];
  }
  return out;
}

/// Full right-hand side eps D2 y + transport(y) + omega_t.
inline Field rhs(const Field& y, const Field& omega_t, const ModelParams& p, const HelmholtzOperator& helm) {
  const auto& dom = helm.domain();
  check_on(y, dom, "rhs");
  check_on(omega_t, dom, "rhs");
  Field out = transport(y, helm.solve(y), dom, p.k);
  out.axpy(p.epsilon, d2(y, dom));
  out += omega_t;
  if (!out.all_finite()) throw NumericalFailure("rhs: non-finite value");
  return out;
}

/// max |u^2 - u_x^2| over the nodes.
inline double transport_speed(const Velocity& vel) {
  double m = 0.0;
  for (std::size_t i = 0; i < vel.u.size(); ++i)
    m = std::max(m, std::abs(vel.u[i] * vel.u[i] - vel.ux[i] * vel.ux[i]));
  return m;
}

struct ForwardTrajectory {
  Trajectory y;
  Trajectory u;
  Trajectory ux;
  /// Steps at which the advective stability bound was exceeded.
  std::vector<int> stability_warnings;
};

struct StepOptions {
  bool nonlinear = true;  ///< false drops transport (pure diffusion, test hook)
};

/// IMEX Euler integrator for a fixed grid and parameter set. Immutable
/// after construction and safe to share between threads.
class ForwardSolver {
 public:
  ForwardSolver(const Domain1D& dom, const TimeGrid& tg, const ModelParams& p, StepOptions opts = {})
      : dom_(dom),
        tg_(tg),
        p_((p.validate(), p)),
        opts_(opts),
        helm_(dom),
        implicit_(shifted_laplacian(dom, 1.0, tg.dt() * p.epsilon)) {}

  const Domain1D& domain() const noexcept { return dom_; }
  const TimeGrid& time() const noexcept { return tg_; }
  const ModelParams& params() const noexcept { return p_; }
  const StepOptions& options() const noexcept { return opts_; }
  const HelmholtzOperator& helmholtz() const noexcept { return helm_; }
  /// Factorization of I - dt eps D2.
  const TridiagonalFactor& implicit_factor() const noexcept { return implicit_; }

  /// dt <= cfl h / max|u^2 - u_x^2|
  bool stable(const Velocity& vel) const {
    const double s = transport_speed(vel);
    return s == 0.0 || tg_.dt() <= p_.cfl * dom_.h() / s;
  }

  /// y_{n+1} = (I - dt eps D2)^{-1} (y_n + dt (transport(y_n) + omega_n)).
  /// `stable_out`, when given, receives the stability flag of the step.
  Field step(const Field& y, const Field& omega, bool* stable_out = nullptr, int index = -1) const {
    check_on(y, dom_, "step");
    check_on(omega, dom_, "step");
    const double dt = tg_.dt();
    Field rhs_explicit = y;
    if (opts_.nonlinear) {
      const Velocity vel = helm_.solve(y);
      if (stable_out) *stable_out = stable(vel);
      rhs_explicit.axpy(dt, transport(y, vel, dom_, p_.k));
    } else if (stable_out) {
      *stable_out = true;
    }
    rhs_explicit.axpy(dt, omega);
    Field next(y.size());
    implicit_.solve(rhs_explicit.span(), next.span());
    if (!next.all_finite()) throw NumericalFailure("step: non-finite state", index);
    return next;
  }

  ForwardTrajectory solve(const Field& y0, const Control& omega) const {
    check_on(y0, dom_, "solve_forward");
    if (!y0.all_finite()) throw NumericalFailure("solve_forward: non-finite initial state", 0);
    if (omega.size() != static_cast<std::size_t>(tg_.n_steps))
      throw DimensionError("solve_forward: control must have n_steps frames");
    ForwardTrajectory out;
    out.y.frames.reserve(omega.size() + 1);
    out.y.frames.push_back(y0);
    for (int n = 0; n < tg_.n_steps; ++n) {
      bool ok = true;
      out.y.frames.push_back(step(out.y[n], omega[n], &ok, n));
      if (!ok) out.stability_warnings.push_back(n);
    }
    fill_velocity(out);
    return out;
  }

  /// Recomputes the u, u_x caches from y.
  void fill_velocity(ForwardTrajectory& tr) const {
    tr.u.frames.clear();
    tr.ux.frames.clear();
    for (const auto& y : tr.y.frames) {
      auto vel = helm_.solve(y);
      tr.u.frames.push_back(std::move(vel.u));
      tr.ux.frames.push_back(std::move(vel.ux));
    }
  }

 private:
  Domain1D dom_;
  TimeGrid tg_;
  ModelParams p_;
  StepOptions opts_;
  HelmholtzOperator helm_;
  TridiagonalFactor implicit_;
};

/// Which viscous pairing the weak residual uses.
enum class ViscousForm {
  momentum_gradient,  ///< eps (y_x, eta_x), consistent with the strong form
  velocity_v_product  ///< eps (u, eta)_V, the alternative pairing
};

struct WeakResidual {
  double max_abs = 0.0;  ///< max over modes and interior frames
  double scale = 0.0;    ///< largest individual term in the same battery
  int at_frame = -1;
  int at_mode = -1;

  double relative() const noexcept { return scale > 0.0 ? max_abs / scale : max_abs; }
};

/// Residual of the weak formulation tested against the first `n_modes`
/// Dirichlet eigenmodes, with d/dt by central differences at interior frames.
inline WeakResidual weak_residual(const Trajectory& y, const Control& omega, const ModelParams& p,
                                  const Domain1D& dom, const TimeGrid& tg,
                                  ViscousForm form = ViscousForm::momentum_gradient, int n_modes = 5) {
  check_on(y, dom, tg, "weak_residual");
  if (omega.size() != static_cast<std::size_t>(tg.n_steps)) throw DimensionError("weak_residual: control frames");
  const HelmholtzOperator helm(dom);
  const double pi = std::acos(-1.0);
  std::vector<Field> eta, eta_x;
  for (int j = 1; j <= n_modes; ++j) {
    eta.push_back(Field::sample(dom, [&](double x) { return std::sin(j * pi * x / dom.length); }));
    eta_x.push_back(d1(eta.back(), dom));
  }
  WeakResidual out;
  const double dt = tg.dt();
  for (int n = 1; n < tg.n_steps; ++n) {
    Field ydot = y[n + 1] - y[n - 1];
    ydot *= 0.5 / dt;
    const Velocity vel = helm.solve(y[n]);
    Field trans = transport(y[n], vel, dom, p.k);
    trans *= -1.0;
    Field w = omega[n - 1] + omega[n];
    w *= 0.5;
    const Field yx = d1(y[n], dom);
    for (int j = 0; j < n_modes; ++j) {
      const double t_time = inner_h(ydot, eta[j], dom);
      double t_visc = 0.0;
      if (form == ViscousForm::momentum_gradient) {
        t_visc = p.epsilon * inner_h(yx, eta_x[j], dom);
      } else {
        t_visc = p.epsilon * (inner_h(vel.u, eta[j], dom) + inner_h(vel.ux, eta_x[j], dom));
      }
      const double t_trans = inner_h(trans, eta[j], dom);
      const double t_ctrl = inner_h(w, eta[j], dom);
      const double r = std::abs(t_time + t_visc + t_trans - t_ctrl);
      out.scale = std::max({out.scale, std::abs(t_time), std::abs(t_visc), std::abs(t_trans), std::abs(t_ctrl)});
      if (r > out.max_abs || out.at_frame < 0) {
        out.max_abs = r;
        out.at_frame = n;
        out.at_mode = j + 1;
      }
    }
  }
  return out;
}

}  // namespace kforq
