#pragma once

// Uniform 1-D mesh with homogeneous Dirichlet boundary, uniform time
// partition, grid functions and the discrete norms used throughout:
// H = L2, V = H1, V* (via the Riesz map of 1 - d_xx), C(H), L2(V), W(V).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kforq/errors.hpp"
#include "kforq/tridiagonal.hpp"

namespace kforq {

/// Interval [0, L] resolved by `n_interior` unknowns at x_i = (i+1) h,
/// i = 0..n-1, with h = L/(n+1). Boundary values are implicitly zero.
struct Domain1D {
  double length = 1.0;
  int n_interior = 3;

  static Domain1D make(double length, int n_interior) {
    if (!(length > 0.0) || !std::isfinite(length)) throw std::invalid_argument("Domain1D: length must be positive");
    if (n_interior < 3) throw std::invalid_argument("Domain1D: n_interior must be >= 3");
    return Domain1D{length, n_interior};
  }

  double h() const noexcept { return length / (n_interior + 1); }
  double x(int i) const noexcept { return (i + 1) * h(); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_interior); }

  friend bool operator==(const Domain1D&, const Domain1D&) = default;
};

/// Uniform partition t_n = n dt of [0, T], n = 0..n_steps.
struct TimeGrid {
  double horizon = 1.0;
  int n_steps = 1;

  static TimeGrid make(double horizon, int n_steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("TimeGrid: horizon must be positive");
    if (n_steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
    return TimeGrid{horizon, n_steps};
  }

  double dt() const noexcept { return horizon / n_steps; }
  double t(int n) const noexcept { return n * dt(); }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Values of a grid function on the interior nodes of a Domain1D.
class Field {
 public:
  Field() = default;
  explicit Field(std::size_t n, double value = 0.0) : v_(n, value) {}
  explicit Field(std::vector<double> values) : v_(std::move(values)) {}

  /// Samples f at the interior nodes.
  static Field sample(const Domain1D& dom, const std::function<double(double)>& f) {
    Field out(dom.size());
    for (int i = 0; i < dom.n_interior; ++i) out[i] = f(dom.x(i));
    return out;
  }

  std::size_t size() const noexcept { return v_.size(); }
  double& operator[](std::size_t i) noexcept { return v_[i]; }
  double operator[](std::size_t i) const noexcept { return v_[i]; }
  double* data() noexcept { return v_.data(); }
  const double* data() const noexcept { return v_.data(); }
  auto begin() noexcept { return v_.begin(); }
  auto end() noexcept { return v_.end(); }
  auto begin() const noexcept { return v_.begin(); }
  auto end() const noexcept { return v_.end(); }
  std::span<double> span() noexcept { return v_; }
  std::span<const double> span() const noexcept { return v_; }
  const std::vector<double>& values() const noexcept { return v_; }

  bool all_finite() const noexcept {
    return std::all_of(v_.begin(), v_.end(), [](double a) { return std::isfinite(a); });
  }

  Field& operator+=(const Field& o) {
    check_same(o);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_same(o);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  Field& operator*=(double a) noexcept {
    for (double& x : v_) x *= a;
    return *this;
  }
  /// this += a * x
  Field& axpy(double a, const Field& x) {
    check_same(x);
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += a * x.v_[i];
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend bool operator==(const Field&, const Field&) = default;

 private:
  void check_same(const Field& o) const {
    if (o.size() != size()) throw DimensionError("Field: size mismatch");
  }
  std::vector<double> v_;
};

/// Pointwise product.
inline Field hadamard(const Field& a, const Field& b) {
  if (a.size() != b.size()) throw DimensionError("hadamard: size mismatch");
  Field out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

/// Time history of a Field; frame 0 is the initial time.
struct Trajectory {
  std::vector<Field> frames;

  static Trajectory zeros(std::size_t n_frames, std::size_t n) {
    return Trajectory{std::vector<Field>(n_frames, Field(n))};
  }

  std::size_t size() const noexcept { return frames.size(); }
  Field& operator[](std::size_t n) noexcept { return frames[n]; }
  const Field& operator[](std::size_t n) const noexcept { return frames[n]; }
  const Field& back() const { return frames.back(); }

  bool all_finite() const noexcept {
    return std::all_of(frames.begin(), frames.end(), [](const Field& f) { return f.all_finite(); });
  }

  Trajectory& operator+=(const Trajectory& o) {
    check_same(o);
    for (std::size_t n = 0; n < frames.size(); ++n) frames[n] += o.frames[n];
    return *this;
  }
  Trajectory& operator-=(const Trajectory& o) {
    check_same(o);
    for (std::size_t n = 0; n < frames.size(); ++n) frames[n] -= o.frames[n];
    return *this;
  }
  Trajectory& operator*=(double a) noexcept {
    for (auto& f : frames) f *= a;
    return *this;
  }
  Trajectory& axpy(double a, const Trajectory& x) {
    check_same(x);
    for (std::size_t n = 0; n < frames.size(); ++n) frames[n].axpy(a, x.frames[n]);
    return *this;
  }

  friend Trajectory operator+(Trajectory a, const Trajectory& b) { return a += b; }
  friend Trajectory operator-(Trajectory a, const Trajectory& b) { return a -= b; }
  friend Trajectory operator*(double s, Trajectory a) { return a *= s; }
  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  void check_same(const Trajectory& o) const {
    if (o.size() != size()) throw DimensionError("Trajectory: frame count mismatch");
  }
};

inline void check_on(const Field& f, const Domain1D& dom, const char* who) {
  if (f.size() != dom.size()) throw DimensionError(std::string(who) + ": field does not match domain");
}

inline void check_on(const Trajectory& tr, const Domain1D& dom, const TimeGrid& tg, const char* who) {
  if (tr.size() != static_cast<std::size_t>(tg.n_steps) + 1)
    throw DimensionError(std::string(who) + ": trajectory must have n_steps+1 frames");
  for (const auto& f : tr.frames) check_on(f, dom, who);
}

// ---------------------------------------------------------------------------
// Difference operators (zero boundary extension)
// ---------------------------------------------------------------------------

/// Centered first difference.
inline Field d1(const Field& f, const Domain1D& dom) {
  check_on(f, dom, "d1");
  const std::size_t n = f.size();
  const double s = 0.5 / dom.h();
  Field out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? f[i - 1] : 0.0;
    const double right = i + 1 < n ? f[i + 1] : 0.0;
    out[i] = s * (right - left);
  }
  return out;
}

/// Three-point second difference.
inline Field d2(const Field& f, const Domain1D& dom) {
  check_on(f, dom, "d2");
  const std::size_t n = f.size();
  const double s = 1.0 / (dom.h() * dom.h());
  Field out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i > 0 ? f[i - 1] : 0.0;
    const double right = i + 1 < n ? f[i + 1] : 0.0;
    out[i] = s * (right - 2.0 * f[i] + left);
  }
  return out;
}

/// Matrix of a I - b D2 with Dirichlet boundary.
inline SymTridiagonal shifted_laplacian(const Domain1D& dom, double a, double b) {
  const double s = b / (dom.h() * dom.h());
  SymTridiagonal m;
  m.diag.assign(dom.size(), a + 2.0 * s);
  m.off.assign(dom.size() - 1, -s);
  return m;
}

// ---------------------------------------------------------------------------
// Spatial inner products and norms
// ---------------------------------------------------------------------------

/// Trapezoid rule for the L2(Omega) product; the boundary nodes carry zero.
inline double inner_h(const Field& f, const Field& g, const Domain1D& dom) {
  check_on(f, dom, "inner_h");
  check_on(g, dom, "inner_h");
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * g[i];
  return dom.h() * acc;
}

inline double norm_h(const Field& f, const Domain1D& dom) { return std::sqrt(inner_h(f, f, dom)); }

inline double norm_v(const Field& f, const Domain1D& dom) {
  const Field fx = d1(f, dom);
  return std::sqrt(inner_h(f, f, dom) + inner_h(fx, fx, dom));
}

inline double norm_sup(const Field& f) {
  double m = 0.0;
  for (double a : f) m = std::max(m, std::abs(a));
  return m;
}

/// Riesz map of the dual norm, factored once per domain.
class DualNorm {
 public:
  explicit DualNorm(const Domain1D& dom) : dom_(dom), factor_(shifted_laplacian(dom, 1.0, 1.0)) {}

  /// sqrt((f, w)) with (I - D2) w = f.
  double operator()(const Field& f) const {
    check_on(f, dom_, "norm_vstar");
    const auto w = factor_.solve(f.span());
    const double res = factor_.relative_residual(w, f.span());
    if (res > 1e-10) throw NumericalFailure("norm_vstar: Riesz solve residual " + std::to_string(res));
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += f[i] * w[i];
    return std::sqrt(std::max(0.0, dom_.h() * acc));
  }

  const Domain1D& domain() const noexcept { return dom_; }

 private:
  Domain1D dom_;
  TridiagonalFactor factor_;
};

inline double norm_vstar(const Field& f, const Domain1D& dom) { return DualNorm(dom)(f); }

// ---------------------------------------------------------------------------
// Trajectory norms. Time integrals use the composite trapezoid rule.
// ---------------------------------------------------------------------------

inline double trapezoid_weight(std::size_t n, const TimeGrid& tg) {
  return (n == 0 || n == static_cast<std::size_t>(tg.n_steps)) ? 0.5 * tg.dt() : tg.dt();
}

/// max_n ||y^n||_H
inline double norm_ct_h(const Trajectory& tr, const Domain1D& dom) {
  double m = 0.0;
  for (const auto& f : tr.frames) m = std::max(m, norm_h(f, dom));
  return m;
}

/// (int_0^T ||y||_H^2 dt)^(1/2)
inline double norm_l2h(const Trajectory& tr, const Domain1D& dom, const TimeGrid& tg) {
  check_on(tr, dom, tg, "norm_l2h");
  double acc = 0.0;
  for (std::size_t n = 0; n < tr.size(); ++n) acc += trapezoid_weight(n, tg) * inner_h(tr[n], tr[n], dom);
  return std::sqrt(acc);
}

/// (int_0^T ||y||_V^2 dt)^(1/2)
inline double norm_l2v(const Trajectory& tr, const Domain1D& dom, const TimeGrid& tg) {
  check_on(tr, dom, tg, "norm_l2v");
  double acc = 0.0;
  for (std::size_t n = 0; n < tr.size(); ++n) {
    const double v = norm_v(tr[n], dom);
    acc += trapezoid_weight(n, tg) * v * v;
  }
  return std::sqrt(acc);
}

/// (sum_n dt ||(y^{n+1}-y^n)/dt||_{V*}^2)^(1/2), the dual-norm size of the
/// difference-quotient time derivative.
inline double norm_dt_vstar(const Trajectory& tr, const Domain1D& dom, const TimeGrid& tg) {
  check_on(tr, dom, tg, "norm_dt_vstar");
  const DualNorm dual(dom);
  const double dt = tg.dt();
  double acc = 0.0;
  for (std::size_t n = 0; n + 1 < tr.size(); ++n) {
    Field q = tr[n + 1] - tr[n];
    q *= 1.0 / dt;
    const double d = dual(q);
    acc += dt * d * d;
  }
  return std::sqrt(acc);
}

/// ||y||_W(V) = ||y||_L2(V) + ||y_t||_L2(V*)
inline double norm_wv(const Trajectory& tr, const Domain1D& dom, const TimeGrid& tg) {
  return norm_l2v(tr, dom, tg) + norm_dt_vstar(tr, dom, tg);
}

/// Measured embedding constant c_E in ||y||_C(H) <= c_E ||y||_W(V): the
/// largest ratio over a deterministic family of smooth, oscillatory and
/// random trajectories.
inline double estimate_embedding_constant(const Domain1D& dom, const TimeGrid& tg, int n_random = 32,
                                          unsigned long long seed = 7) {
  const std::size_t n_frames = static_cast<std::size_t>(tg.n_steps) + 1;
  double best = 0.0;
  auto consider = [&](const Trajectory& tr) {
    const double w = norm_wv(tr, dom, tg);
    if (w > 0.0) best = std::max(best, norm_ct_h(tr, dom) / w);
  };
  const double pi = std::acos(-1.0);
  for (int mode = 1; mode <= 4; ++mode) {
    const Field phi = Field::sample(dom, [&](double x) { return std::sin(mode * pi * x / dom.length); });
    consider(Trajectory{std::vector<Field>(n_frames, phi)});
    Trajectory ramp = Trajectory::zeros(n_frames, dom.size());
    for (std::size_t n = 0; n < n_frames; ++n) ramp[n] = (static_cast<double>(n) / tg.n_steps) * phi;
    consider(ramp);
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int s = 0; s < n_random; ++s) {
    Trajectory tr = Trajectory::zeros(n_frames, dom.size());
    Field base = Field::sample(dom, [&](double x) { return std::sin(pi * x / dom.length); });
    Field drift(dom.size());
    for (auto& a : drift) a = uni(rng);
    for (std::size_t n = 0; n < n_frames; ++n) {
      tr[n] = base;
      tr[n].axpy(0.1 * static_cast<double>(n) / tg.n_steps, drift);
    }
    consider(tr);
  }
  return best;
}

}  // namespace kforq
