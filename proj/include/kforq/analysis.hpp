#pragma once

// Monitors for the a-priori estimates of the viscous equation: energy and
// momentum identities, the Gronwall-type growth bound, the W(V) bound and
// the smallness hypothesis of the well-posedness result.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kforq/forward.hpp"
#include "kforq/grid.hpp"
#include "kforq/helmholtz.hpp"

namespace kforq {

struct EstimateReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  ///< rhs - lhs
  double tolerance = 0.0;
  bool pass = true;     ///< margin >= -tolerance
  int n_interior = 0;
  int n_steps = 0;
  std::string note;
};

inline EstimateReport make_report(std::string name, double lhs, double rhs, double tolerance, const Domain1D& dom,
                                  const TimeGrid& tg, std::string note = {}) {
  EstimateReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = rhs - lhs;
  r.tolerance = tolerance;
  r.pass = r.margin >= -tolerance;
  r.n_interior = dom.n_interior;
  r.n_steps = tg.n_steps;
  r.note = std::move(note);
  return r;
}

/// E = 1/2 (||u||^2 + ||u_x||^2)
inline double velocity_energy(const Field& u, const Domain1D& dom) {
  const double v = norm_v(u, dom);
  return 0.5 * v * v;
}

struct EnergySeries {
  std::vector<double> energy;     ///< E at frames 0..N
  std::vector<double> residual;   ///< per step n = 0..N-1
  double max_abs = 0.0;
  double max_excess_increase = 0.0;  ///< max_n (E^{n+1} - E^n - dt |r_n|), <= 0 when the identity controls growth
};

/// Per step: (E^{n+1} - E^n)/dt + eps (||u_x||^2 + ||u_xx||^2) - (omega^n, u) with
/// the dissipation and the forcing pairing taken at the new frame.
inline EnergySeries energy_identity(const ForwardTrajectory& traj, const Control& omega, const ModelParams& p,
                                    const Domain1D& dom, const TimeGrid& tg) {
  check_on(traj.y, dom, tg, "energy_identity");
  check_on(traj.u, dom, tg, "energy_identity");
  if (omega.size() != static_cast<std::size_t>(tg.n_steps)) throw DimensionError("energy_identity: control frames");
  const double dt = tg.dt();
  EnergySeries out;
  for (const auto& u : traj.u.frames) out.energy.push_back(velocity_energy(u, dom));
  out.max_excess_increase = -std::numeric_limits<double>::infinity();
  for (int n = 0; n < tg.n_steps; ++n) {
    const Field& u = traj.u[n + 1];
    const Field uxx = u - traj.y[n + 1];
    const Field ux = traj.ux[n + 1];
    const double diss = p.epsilon * (inner_h(ux, ux, dom) + inner_h(uxx, uxx, dom));
    const double r = (out.energy[n + 1] - out.energy[n]) / dt + diss - inner_h(omega[n], u, dom);
    out.residual.push_back(r);
    out.max_abs = std::max(out.max_abs, std::abs(r));
    out.max_excess_increase =
        std::max(out.max_excess_increase, out.energy[n + 1] - out.energy[n] - dt * std::abs(r));
  }
  if (tg.n_steps == 0) out.max_excess_increase = 0.0;
  return out;
}

struct MomentumIdentity {
  double lhs = 0.0;  ///< ||y||^2
  double rhs = 0.0;  ///< ||u||^2 + 2 ||u_x||^2 + ||u_xx||^2
  double relerr = 0.0;
};

inline MomentumIdentity momentum_identity(const Field& y, const HelmholtzOperator& helm) {
  const auto& dom = helm.domain();
  const Velocity vel = helm.solve(y);
  MomentumIdentity out;
  out.lhs = inner_h(y, y, dom);
  out.rhs = inner_h(vel.u, vel.u, dom) + 2.0 * inner_h(vel.ux, vel.ux, dom) + inner_h(vel.uxx, vel.uxx, dom);
  out.relerr = out.lhs > 0.0 ? std::abs(out.lhs - out.rhs) / out.lhs : std::abs(out.lhs - out.rhs);
  return out;
}

struct GronwallReport {
  double C = 0.0;
  double A = 0.0;               ///< ||y0||_H^2
  std::vector<double> measured; ///< ||y(t_n)||_H^2
  std::vector<double> bound;    ///< NaN where the bound is inapplicable
  double first_violation_time = -1.0;  ///< -1 when none
  double t_star = std::numeric_limits<double>::infinity();  ///< end of the validity window
  bool applicable_on_horizon = true;
  double max_ratio = 0.0;       ///< max measured / bound over the applicable frames
};

/// ||y||^2 <= e^{C t} A / sqrt((1 - e^{2 C t}) A + 1). The denominator
/// vanishes at t* = ln(1 + 1/A) / (2C); beyond it the bound is reported as
/// inapplicable.
inline GronwallReport gronwall_bound(const Trajectory& y, double C, const Domain1D& dom, const TimeGrid& tg,
                                     double rel_tol = 1e-12) {
  check_on(y, dom, tg, "gronwall_bound");
  if (C < 0.0) throw std::invalid_argument("gronwall_bound: C must be >= 0");
  GronwallReport r;
  r.C = C;
  r.A = inner_h(y[0], y[0], dom);
  if (C > 0.0 && r.A > 0.0) r.t_star = std::log1p(1.0 / r.A) / (2.0 * C);
  for (std::size_t n = 0; n < y.size(); ++n) {
    const double t = tg.t(static_cast<int>(n));
    const double m = inner_h(y[n], y[n], dom);
    r.measured.push_back(m);
    const double denom = (1.0 - std::exp(2.0 * C * t)) * r.A + 1.0;
    if (denom <= 0.0) {
      r.bound.push_back(std::numeric_limits<double>::quiet_NaN());
      r.applicable_on_horizon = false;
      continue;
    }
    const double b = std::exp(C * t) * r.A / std::sqrt(denom);
    r.bound.push_back(b);
    if (b > 0.0) r.max_ratio = std::max(r.max_ratio, m / b);
    if (m > b * (1.0 + rel_tol) + rel_tol * r.A && r.first_violation_time < 0.0) r.first_violation_time = t;
  }
  return r;
}

/// Smallest C with ||y^{n+1}||^2 <= e^{C dt} ||y^n||^2 for every step.
inline double calibrate_growth_rate(const Trajectory& y, const Domain1D& dom, const TimeGrid& tg) {
  check_on(y, dom, tg, "calibrate_growth_rate");
  double c = 0.0;
  for (std::size_t n = 0; n + 1 < y.size(); ++n) {
    const double a = inner_h(y[n], y[n], dom);
    const double b = inner_h(y[n + 1], y[n + 1], dom);
    if (a > 0.0 && b > a) c = std::max(c, std::log(b / a) / tg.dt());
  }
  return c;
}

struct WVBound {
  double lhs = 0.0;        ///< ||y||_W(V)
  double base = 0.0;       ///< exp(||y0||^2) + ||omega||^2 + 1
  double C = 0.0;
  double rhs = 0.0;        ///< C * base
  double minimal_C = 0.0;  ///< lhs / base
  bool holds = true;
};

inline WVBound wv_bound(const Trajectory& y, double omega_norm_sq, double C, const Domain1D& dom,
                        const TimeGrid& tg) {
  WVBound r;
  r.lhs = norm_wv(y, dom, tg);
  r.base = std::exp(inner_h(y[0], y[0], dom)) + omega_norm_sq + 1.0;
  r.C = C;
  r.rhs = C * r.base;
  r.minimal_C = r.lhs / r.base;
  r.holds = r.lhs <= r.rhs;
  return r;
}

struct SmallnessMargin {
  double lhs = 0.0;  ///< ||y0||^2 + C T ||B omega||^2
  double rhs = 0.0;  ///< (e^{2 C T} - 1)^{-1/2}
  double C = 0.0;
  bool pass = true;
};

/// `b_omega_norm_sq` is ||B omega||^2 over the whole cylinder.
inline SmallnessMargin smallness_margin(const Field& y0, double b_omega_norm_sq, double C, const Domain1D& dom,
                                        const TimeGrid& tg) {
  if (C < 0.0) throw std::invalid_argument("smallness_margin: C must be >= 0");
  SmallnessMargin r;
  r.C = C;
  r.lhs = inner_h(y0, y0, dom) + C * tg.horizon * b_omega_norm_sq;
  const double g = std::expm1(2.0 * C * tg.horizon);
  r.rhs = g > 0.0 ? 1.0 / std::sqrt(g) : std::numeric_limits<double>::infinity();
  r.pass = r.lhs < r.rhs;
  return r;
}

}  // namespace kforq
