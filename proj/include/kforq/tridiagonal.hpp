#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "kforq/errors.hpp"

namespace kforq {

/// Symmetric tridiagonal matrix stored by its diagonal and its first
/// off-diagonal (`off[i]` couples rows i and i+1).
struct SymTridiagonal {
  std::vector<double> diag;
  std::vector<double> off;

  std::size_t size() const noexcept { return diag.size(); }

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = size();
    if (x.size() != n || y.size() != n) throw DimensionError("SymTridiagonal::multiply: size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      double acc = diag[i] * x[i];
      if (i > 0) acc += off[i - 1] * x[i - 1];
      if (i + 1 < n) acc += off[i] * x[i + 1];
      y[i] = acc;
    }
  }
};

/// Thomas-algorithm factorization of a symmetric, diagonally dominant
/// tridiagonal matrix. The elimination multipliers are computed once so that
/// every solve is a forward and a backward sweep without divisions by
/// freshly computed pivots.
class TridiagonalFactor {
 public:
  TridiagonalFactor() = default;

  explicit TridiagonalFactor(SymTridiagonal a) : a_(std::move(a)) {
    const std::size_t n = a_.size();
    if (n == 0) throw DimensionError("TridiagonalFactor: empty matrix");
    if (a_.off.size() + 1 != n) throw DimensionError("TridiagonalFactor: off-diagonal length must be n-1");
    inv_pivot_.resize(n);
    upper_.assign(n, 0.0);
    double pivot = a_.diag[0];
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) pivot = a_.diag[i] - a_.off[i - 1] * upper_[i - 1];
      if (!(std::abs(pivot) > 0.0) || !std::isfinite(pivot))
        throw NumericalFailure("TridiagonalFactor: zero or non-finite pivot");
      inv_pivot_[i] = 1.0 / pivot;
      if (i + 1 < n) upper_[i] = a_.off[i] * inv_pivot_[i];
    }
  }

  std::size_t size() const noexcept { return a_.size(); }
  const SymTridiagonal& matrix() const noexcept { return a_; }

  /// Solves A x = b. `x` and `b` may alias.
  void solve(std::span<const double> b, std::span<double> x) const {
    const std::size_t n = size();
    if (b.size() != n || x.size() != n) throw DimensionError("TridiagonalFactor::solve: size mismatch");
    x[0] = b[0] * inv_pivot_[0];
    for (std::size_t i = 1; i < n; ++i) x[i] = (b[i] - a_.off[i - 1] * x[i - 1]) * inv_pivot_[i];
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= upper_[i] * x[i + 1];
  }

  std::vector<double> solve(std::span<const double> b) const {
    std::vector<double> x(b.size());
    solve(b, x);
    return x;
  }

  /// ||A x - b||_2 / ||b||_2 (0 when b = 0 and x = 0).
  double relative_residual(std::span<const double> x, std::span<const double> b) const {
    std::vector<double> ax(x.size());
    a_.multiply(x, ax);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) {
      num += (ax[i] - b[i]) * (ax[i] - b[i]);
      den += b[i] * b[i];
    }
    if (den == 0.0) return std::sqrt(num);
    return std::sqrt(num / den);
  }

 private:
  SymTridiagonal a_;
  std::vector<double> inv_pivot_;
  std::vector<double> upper_;
};

}  // namespace kforq
