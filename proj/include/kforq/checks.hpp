#pragma once

// Derivative checks shared by the CLI and the test suites.

#include <cmath>
#include <vector>

#include "kforq/control.hpp"
#include "kforq/tangent_adjoint.hpp"

namespace kforq {

struct TaylorRow {
  double h = 0.0;
  double remainder = 0.0;  ///< ||F(w + h q) - F(w) - h T q||_C(H)
  double order = 0.0;      ///< against the previous row (0 for the first)
};

struct TaylorResult {
  std::vector<TaylorRow> rows;
  double min_order = 0.0;
};

inline TaylorResult taylor_test(const ControlProblem& pb, const WindowVector& omega, const WindowVector& q,
                                const std::vector<double>& steps) {
  const auto base = pb.state(omega);
  const auto tan = solve_tangent(pb.solver(), base, pb.window().apply_B(q));
  TaylorResult out;
  out.min_order = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double h = steps[i];
    Trajectory r = pb.state(omega + h * q).y;
    r -= base.y;
    r.axpy(-h, tan.m);
    TaylorRow row{h, norm_ct_h(r, pb.domain()), 0.0};
    if (i > 0) {
      const auto& prev = out.rows.back();
      row.order = std::log(prev.remainder / row.remainder) / std::log(prev.h / h);
      out.min_order = std::min(out.min_order, row.order);
    }
    out.rows.push_back(row);
  }
  if (steps.size() < 2) out.min_order = 0.0;
  return out;
}

/// |<T q, s> + <q, B* lambda>_{Q0}| / (||q|| ||s||) with lambda the discrete
/// adjoint for source s; zero up to round-off.
inline double transpose_defect(const ControlProblem& pb, const ForwardTrajectory& base, const WindowVector& q,
                               const Trajectory& s) {
  const auto& dom = pb.domain();
  const auto& tg = pb.time();
  const auto tan = solve_tangent(pb.solver(), base, pb.window().apply_B(q));
  const auto adj = solve_adjoint_discrete(pb.solver(), base, s);
  const double lhs = inner_st(tan.m, s, dom, tg);
  const double rhs = -pb.window().inner(q, restrict_multiplier(adj.lambda, pb.window()));
  const double scale = pb.window().norm(q) * std::sqrt(inner_st(s, s, dom, tg));
  return scale > 0.0 ? std::abs(lhs - rhs) / scale : std::abs(lhs - rhs);
}

struct FDCheck {
  double fd = 0.0;
  double adjoint = 0.0;    ///< <g, q>_{Q0}
  double curvature = 0.0;  ///< second difference of J along q
  double rel_error = 0.0;
};

/// Central difference of the reduced cost along q against <g, q>. With
/// `fourth_order` the five-point stencil is used. The error is relative to
/// max(|fd|, |<g,q>|, h |J''|) so that a vanishing directional derivative
/// is measured against the truncation scale instead of zero.
inline FDCheck fd_gradient_check(const ControlProblem& pb, const WindowVector& omega, const WindowVector& g,
                                 const WindowVector& q, double h, bool fourth_order = false) {
  FDCheck out;
  const double jp = cost(omega + h * q, pb);
  const double jm = cost(omega - h * q, pb);
  const double j0 = cost(omega, pb);
  if (fourth_order) {
    const double jp2 = cost(omega + (2.0 * h) * q, pb);
    const double jm2 = cost(omega - (2.0 * h) * q, pb);
    out.fd = (8.0 * (jp - jm) - (jp2 - jm2)) / (12.0 * h);
  } else {
    out.fd = (jp - jm) / (2.0 * h);
  }
  out.curvature = (jp - 2.0 * j0 + jm) / (h * h);
  out.adjoint = pb.window().inner(g, q);
  const double scale = std::max({std::abs(out.fd), std::abs(out.adjoint), h * std::abs(out.curvature)});
  out.rel_error = scale > 0.0 ? std::abs(out.fd - out.adjoint) / scale : 0.0;
  return out;
}

/// delta * omega - B* lambda with lambda from the continuous adjoint equation.
inline WindowVector continuous_gradient(const ControlProblem& pb, const WindowVector& omega,
                                        AdjointTermSign sign = AdjointTermSign::consistent) {
  const auto base = pb.state(omega);
  const auto lam = solve_adjoint_continuous(pb.solver(), base, pb.residual_source(base.y), sign);
  WindowVector g = restrict_multiplier(lam, pb.window());
  g *= -1.0;
  g.axpy(pb.cost_params().delta, omega);
  return g;
}

}  // namespace kforq
