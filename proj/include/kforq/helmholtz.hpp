#pragma once

#include "kforq/grid.hpp"
#include "kforq/tridiagonal.hpp"

namespace kforq {

/// Velocity recovered from momentum: u solves (I - D2) u = y, with its
/// first derivative and u_xx = u - y.
struct Velocity {
  Field u;
  Field ux;
  Field uxx;
};

/// The momentum/velocity map y = u - u_xx on a Dirichlet domain.
/// Immutable after construction; `solve` is reentrant.
class HelmholtzOperator {
 public:
  explicit HelmholtzOperator(const Domain1D& dom) : dom_(dom), factor_(shifted_laplacian(dom, 1.0, 1.0)) {}

  const Domain1D& domain() const noexcept { return dom_; }

  /// y = u - D2 u
  Field apply(const Field& u) const {
    check_on(u, dom_, "HelmholtzOperator::apply");
    Field y = u;
    y -= d2(u, dom_);
    return y;
  }

  /// u = (I - D2)^{-1} y
  Field inverse(const Field& y) const {
    check_on(y, dom_, "HelmholtzOperator::inverse");
    Field u(y.size());
    factor_.solve(y.span(), u.span());
    return u;
  }

  Velocity solve(const Field& y) const {
    Velocity out;
    out.u = inverse(y);
    out.ux = d1(out.u, dom_);
    out.uxx = out.u - y;
    return out;
  }

  /// ||(I - D2) u - y|| / ||y||
  double residual(const Field& u, const Field& y) const { return factor_.relative_residual(u.span(), y.span()); }

 private:
  Domain1D dom_;
  TridiagonalFactor factor_;
};

/// Measured constants of the smoothing estimate ||u||_inf, ||u_x||_inf <= C ||y||_H.
struct SmoothingConstants {
  double c_u = 0.0;
  double c_ux = 0.0;
};

inline SmoothingConstants smoothing_ratio(const HelmholtzOperator& op, const Field& y) {
  const double ny = norm_h(y, op.domain());
  if (ny == 0.0) return {};
  const auto vel = op.solve(y);
  return {norm_sup(vel.u) / ny, norm_sup(vel.ux) / ny};
}

}  // namespace kforq
