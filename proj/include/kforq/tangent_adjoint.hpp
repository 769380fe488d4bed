#pragma once

// Tangent (Jacobian-vector) and adjoint (transposed Jacobian) of the
// discrete forward map, plus the continuous backward adjoint equation
// integrated forward in reversed time as a cross-check.
//
// Discrete scheme:   y^{n+1} = S^{-1}(y^n + dt N(y^n) + dt w^n),  S = I - dt eps D2
// Tangent:           m^{n+1} = S^{-1}(m^n + dt N'(y^n) m^n + dt q^n),  m^0 = 0
// Adjoint:           lam^N = 0,  lam^{n-1} = S^{-1}(lam^n + dt N'(y^n)^T lam^n - dt s^n)
//
// With the space-time pairing <a, s> = sum_{n=1..N} dt (a^n, s^n)_H the
// adjoint satisfies <T q, s> = -<q, B* lam>_{Q0}, so that the reduced
// gradient of a tracking cost reads delta*omega - B* lam.

#include <cmath>
#include <utility>

#include "kforq/forward.hpp"
#include "kforq/grid.hpp"
#include "kforq/helmholtz.hpp"

namespace kforq {

/// Space-time pairing used by the cost and the adjoint:
/// right-endpoint rule in time over frames 1..N.
inline double inner_st(const Trajectory& a, const Trajectory& b, const Domain1D& dom, const TimeGrid& tg) {
  check_on(a, dom, tg, "inner_st");
  check_on(b, dom, tg, "inner_st");
  double acc = 0.0;
  for (int n = 1; n <= tg.n_steps; ++n) acc += inner_h(a[n], b[n], dom);
  return tg.dt() * acc;
}

/// Derivative of the transport term at a base momentum y (with velocity
/// u, u_x), applied to a momentum perturbation m or transposed.
class TransportLinearization {
 public:
  TransportLinearization(const Field& y, const HelmholtzOperator& helm, double k)
      : helm_(&helm), k_(k), y_(y), vel_(helm.solve(y)), yx_(d1(y, helm.domain())) {}

  const Velocity& velocity() const noexcept { return vel_; }

  /// -(2uv - 2u_x v_x) y_x - (u^2 - u_x^2) m_x - 2 v_x y^2 - 4 u_x y m - k v_x
  Field apply(const Field& m) const {
    const auto& dom = helm_->domain();
    const Velocity v = helm_->solve(m);
    const Field mx = d1(m, dom);
    Field out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double u = vel_.u[i], ux = vel_.ux[i], y = y_[i];
      const double b = u * u - ux * ux;
      out[i] = -(2.0 * u * v.u[i] - 2.0 * ux * v.ux[i]) * yx_[i] - b * mx[i] - 2.0 * v.ux[i] * y * y -
               4.0 * ux * y * m[i] - k_ * v.ux[i];
    }
    return out;
  }

  /// Exact matrix transpose of `apply` (D1^T = -D1, Helmholtz symmetric).
  Field apply_transpose(const Field& psi) const {
    const auto& dom = helm_->domain();
    const std::size_t n = psi.size();
    Field b_psi(n), yux_psi(n), y2_psi(n), smooth(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = vel_.u[i], ux = vel_.ux[i], y = y_[i];
      b_psi[i] = (u * u - ux * ux) * psi[i];
      yux_psi[i] = yx_[i] * ux * psi[i];
      y2_psi[i] = y * y * psi[i];
      smooth[i] = -2.0 * yx_[i] * u * psi[i];
    }
    smooth.axpy(-2.0, d1(yux_psi, dom));
    smooth.axpy(2.0, d1(y2_psi, dom));
    smooth.axpy(k_, d1(psi, dom));
    Field out = d1(b_psi, dom);
    out += helm_->inverse(smooth);
    for (std::size_t i = 0; i < n; ++i) out[i] -= 4.0 * vel_.ux[i] * y_[i] * psi[i];
    return out;
  }

 private:
  const HelmholtzOperator* helm_;
  double k_;
  Field y_;
  Velocity vel_;
  Field yx_;
};

/// eps D2 m + N'(y) m + q_t, the linearized right-hand side.
inline Field tangent_rhs(const Field& y, const Field& m, const Field& q_t, const ModelParams& p,
                         const HelmholtzOperator& helm) {
  const auto& dom = helm.domain();
  check_on(y, dom, "tangent_rhs");
  check_on(m, dom, "tangent_rhs");
  check_on(q_t, dom, "tangent_rhs");
  Field out = TransportLinearization(y, helm, p.k).apply(m);
  out.axpy(p.epsilon, d2(m, dom));
  out += q_t;
  if (!out.all_finite()) throw NumericalFailure("tangent_rhs: non-finite value");
  return out;
}

struct TangentState {
  Trajectory m;  ///< linearized momentum, m^0 = 0
  Trajectory v;  ///< (I - D2)^{-1} m
};

/// Exact derivative of ForwardSolver::solve in the control direction q.
inline TangentState solve_tangent(const ForwardSolver& solver, const ForwardTrajectory& base, const Control& q) {
  const auto& dom = solver.domain();
  const auto& tg = solver.time();
  check_on(base.y, dom, tg, "solve_tangent");
  if (q.size() != static_cast<std::size_t>(tg.n_steps)) throw DimensionError("solve_tangent: control frames");
  const double dt = tg.dt();
  TangentState out;
  out.m.frames.reserve(base.y.size());
  out.m.frames.emplace_back(dom.size());
  for (int n = 0; n < tg.n_steps; ++n) {
    Field r = out.m[n];
    if (solver.options().nonlinear) r.axpy(dt, TransportLinearization(base.y[n], solver.helmholtz(), solver.params().k).apply(out.m[n]));
    r.axpy(dt, q[n]);
    Field next(dom.size());
    solver.implicit_factor().solve(r.span(), next.span());
    if (!next.all_finite()) throw NumericalFailure("solve_tangent: non-finite state", n);
    out.m.frames.push_back(std::move(next));
  }
  for (const auto& m : out.m.frames) out.v.frames.push_back(solver.helmholtz().inverse(m));
  return out;
}

struct AdjointState {
  Trajectory lambda;  ///< multiplier of the state equation, lambda^N = 0
  Field mu;           ///< multiplier of the initial condition, mu = lambda^0
};

/// Backward sweep of the transposed tangent scheme. `source` carries the
/// L2(H) representative of the observation residual on frames 1..N;
/// frame 0 is ignored.
inline AdjointState solve_adjoint_discrete(const ForwardSolver& solver, const ForwardTrajectory& base,
                                           const Trajectory& source) {
  const auto& dom = solver.domain();
  const auto& tg = solver.time();
  check_on(base.y, dom, tg, "solve_adjoint_discrete");
  check_on(source, dom, tg, "solve_adjoint_discrete");
  const double dt = tg.dt();
  const int N = tg.n_steps;
  AdjointState out;
  out.lambda = Trajectory::zeros(static_cast<std::size_t>(N) + 1, dom.size());
  for (int n = N; n >= 1; --n) {
    Field r = out.lambda[n];
    if (n < N && solver.options().nonlinear)
      r.axpy(dt, TransportLinearization(base.y[n], solver.helmholtz(), solver.params().k).apply_transpose(out.lambda[n]));
    r.axpy(-dt, source[n]);
    solver.implicit_factor().solve(r.span(), out.lambda[n - 1].span());
    if (!out.lambda[n - 1].all_finite()) throw NumericalFailure("solve_adjoint_discrete: non-finite state", n - 1);
  }
  out.mu = out.lambda[0];
  return out;
}

/// Sign of the 2 u y rho_x term inside the Helmholtz inverse of the
/// reversed-time adjoint equation.
enum class AdjointTermSign {
  consistent,  ///< +2 u y rho_x: the exact adjoint of the linearized equation
  as_printed   ///< -2 u y rho_x: the transcription with the opposite sign
};

/// Right-hand side transport of the continuous adjoint in reversed time:
/// (u^2 - u_x^2) rho_x + (1 - d_xx)^{-1}(+-2u y rho_x + 2u_xx y rho_x + 2u_x y_x rho_x + 2u_x y rho_xx + k rho_x)
inline Field adjoint_transport(const Field& y, const Field& rho, const HelmholtzOperator& helm, double k,
                               AdjointTermSign sign = AdjointTermSign::consistent) {
  const auto& dom = helm.domain();
  const Velocity vel = helm.solve(y);
  const Field yx = d1(y, dom);
  const Field rx = d1(rho, dom);
  const Field rxx = d2(rho, dom);
  const double s = sign == AdjointTermSign::consistent ? 2.0 : -2.0;
  const std::size_t n = rho.size();
  Field inner(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = vel.u[i], ux = vel.ux[i], uxx = vel.uxx[i];
    inner[i] = s * u * y[i] * rx[i] + 2.0 * uxx * y[i] * rx[i] + 2.0 * ux * yx[i] * rx[i] +
               2.0 * ux * y[i] * rxx[i] + k * rx[i];
    out[i] = (u * u - ux * ux) * rx[i];
  }
  out += helm.inverse(inner);
  return out;
}

/// Integrates rho_tau - eps rho_xx = -source + adjoint_transport(rho) in
/// tau = T - t from rho(0) = 0 with the IMEX scheme of the forward solver,
/// and returns lambda(t_n) = rho(T - t_n).
inline Trajectory solve_adjoint_continuous(const ForwardSolver& solver, const ForwardTrajectory& base,
                                           const Trajectory& source,
                                           AdjointTermSign sign = AdjointTermSign::consistent) {
  const auto& dom = solver.domain();
  const auto& tg = solver.time();
  check_on(base.y, dom, tg, "solve_adjoint_continuous");
  check_on(source, dom, tg, "solve_adjoint_continuous");
  const double dt = tg.dt();
  const int N = tg.n_steps;
  Trajectory lambda = Trajectory::zeros(static_cast<std::size_t>(N) + 1, dom.size());
  // rho^j sits at t = T - j dt, i.e. lambda frame N - j.
  for (int j = 0; j < N; ++j) {
    const int n = N - j;
    Field r = lambda[n];
    if (solver.options().nonlinear)
      r.axpy(dt, adjoint_transport(base.y[n], lambda[n], solver.helmholtz(), solver.params().k, sign));
    r.axpy(-dt, source[n]);
    solver.implicit_factor().solve(r.span(), lambda[n - 1].span());
    if (!lambda[n - 1].all_finite()) throw NumericalFailure("solve_adjoint_continuous: non-finite state", n - 1);
  }
  return lambda;
}

}  // namespace kforq
