#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kforq/analysis.hpp"
#include "oracles.hpp"

using namespace kforq;

namespace {

const double kPi = std::acos(-1.0);

Field gaussian(const Domain1D& dom, double amp = 1.0) {
  return Field::sample(dom, [&](double x) {
    const double z = (x - 0.5 * dom.length) / 1.5;
    return amp * std::exp(-z * z);
  });
}

ModelParams params(double eps, double k) {
  ModelParams p;
  p.epsilon = eps;
  p.k = k;
  return p;
}

Control bump(const Domain1D& dom, const TimeGrid& tg) {
  const ControlWindow w(dom, tg, 5.0, 15.0, 0.0, tg.horizon);
  return w.apply_B(w.sample([&](double x, double t) {
    return std::pow(std::sin(kPi * (x - 5.0) / 10.0), 2) * std::sin(kPi * t / tg.horizon);
  }));
}

}  // namespace

TEST(EstimateReport, MarginAndTolerance) {
  const auto dom = Domain1D::make(1.0, 4);
  const auto tg = TimeGrid::make(1.0, 2);
  const auto r = make_report("x", 1.0, 0.9, 0.2, dom, tg);
  EXPECT_DOUBLE_EQ(r.margin, -0.1);
  EXPECT_TRUE(r.pass);
  EXPECT_FALSE(make_report("x", 1.0, 0.9, 0.05, dom, tg).pass);
  EXPECT_EQ(r.n_interior, 4);
  EXPECT_EQ(r.n_steps, 2);
}

TEST(Energy, ZeroSolutionHasZeroResidual) {
  const auto dom = Domain1D::make(20.0, 32);
  const auto tg = TimeGrid::make(1.0, 20);
  const ForwardSolver solver(dom, tg, params(0.1, 0.5));
  const Control w = Trajectory::zeros(20, 32);
  const auto tr = solver.solve(Field(32), w);
  const auto e = energy_identity(tr, w, params(0.1, 0.5), dom, tg);
  EXPECT_EQ(e.max_abs, 0.0);
  EXPECT_EQ(e.energy.size(), 21u);
}

TEST(Energy, UnforcedEnergyDecays) {
  const auto dom = Domain1D::make(20.0, 64);
  const auto tg = TimeGrid::make(1.0, 100);
  const ModelParams p = params(0.1, 0.5);
  const Control w = Trajectory::zeros(100, 64);
  const auto tr = ForwardSolver(dom, tg, p).solve(gaussian(dom), w);
  const auto e = energy_identity(tr, w, p, dom, tg);
  for (std::size_t n = 1; n < e.energy.size(); ++n) EXPECT_LT(e.energy[n], e.energy[n - 1]);
  EXPECT_LE(e.max_excess_increase, 0.0);
}

TEST(Energy, ResidualVanishesUnderJointRefinement) {
  std::vector<double> res, forced;
  for (int l = 0; l < 3; ++l) {
    const int n = 32 << l, N = 50 << l;
    const auto dom = Domain1D::make(20.0, n);
    const auto tg = TimeGrid::make(1.0, N);
    const ModelParams p = params(0.1, 0.5);
    const ForwardSolver solver(dom, tg, p);
    const Control zero = Trajectory::zeros(static_cast<std::size_t>(N), dom.size());
    const auto e = energy_identity(solver.solve(gaussian(dom), zero), zero, p, dom, tg);
    EXPECT_LE(e.max_excess_increase, 0.0);
    res.push_back(e.max_abs);
    const Control w = bump(dom, tg);
    forced.push_back(energy_identity(solver.solve(gaussian(dom), w), w, p, dom, tg).max_abs);
  }
  for (std::size_t i = 1; i < res.size(); ++i) {
    EXPECT_GE(std::log2(res[i - 1] / res[i]), 1.0);
    EXPECT_GE(std::log2(forced[i - 1] / forced[i]), 1.0);
  }
}

TEST(Momentum, IdentityHoldsToSecondOrder) {
  EXPECT_EQ(momentum_identity(Field(16), HelmholtzOperator(Domain1D::make(1.0, 16))).relerr, 0.0);
  std::vector<double> scaled;
  for (int n : {64, 128, 256}) {
    const auto dom = Domain1D::make(20.0, n);
    const auto m = momentum_identity(gaussian(dom), HelmholtzOperator(dom));
    scaled.push_back(m.relerr / (dom.h() * dom.h()));
  }
  for (std::size_t i = 1; i < scaled.size(); ++i) EXPECT_NEAR(scaled[i] / scaled[i - 1], 1.0, 0.05);
}

TEST(Gronwall, ValidityWindowAndTrivialCases) {
  const auto dom = Domain1D::make(1.0, 16);
  const auto tg = TimeGrid::make(1.0, 10);
  const auto zero = gronwall_bound(Trajectory::zeros(11, 16), 2.0, dom, tg);
  EXPECT_EQ(zero.first_violation_time, -1.0);
  EXPECT_TRUE(std::isinf(zero.t_star));
  EXPECT_TRUE(zero.applicable_on_horizon);

  // ||y0||^2 = 1 exactly: h sum sin^2 on a unit interval is 1/2.
  const Field f = std::sqrt(2.0) * Field::sample(dom, [](double x) { return std::sin(kPi * x); });
  Trajectory flat{std::vector<Field>(11, f)};
  const auto r = gronwall_bound(flat, 1.0, dom, tg);
  EXPECT_NEAR(r.A, 1.0, 1e-14);
  EXPECT_NEAR(r.t_star, std::log(2.0) / 2.0, 1e-14);
  EXPECT_FALSE(r.applicable_on_horizon);
  for (std::size_t n = 0; n < r.bound.size(); ++n) {
    const double t = tg.t(static_cast<int>(n));
    if (t < r.t_star - 1e-12) {
      EXPECT_FALSE(std::isnan(r.bound[n]));
    } else {
      EXPECT_TRUE(std::isnan(r.bound[n]));
    }
  }
  EXPECT_EQ(r.first_violation_time, -1.0);
  EXPECT_THROW(gronwall_bound(flat, -1.0, dom, tg), std::invalid_argument);
}

TEST(Gronwall, CalibrationAndViolation) {
  const auto dom = Domain1D::make(1.0, 16);
  const auto tg = TimeGrid::make(1.0, 10);
  const Field f = 0.1 * Field::sample(dom, [](double x) { return std::sin(kPi * x); });
  Trajectory grow;
  const double a = 0.7;
  for (int n = 0; n <= 10; ++n) grow.frames.push_back(std::exp(0.5 * a * tg.t(n)) * f);
  EXPECT_NEAR(calibrate_growth_rate(grow, dom, tg), a, 1e-12);
  EXPECT_EQ(gronwall_bound(grow, a, dom, tg).first_violation_time, -1.0);
  // A rate well below the true growth is violated after the first step.
  const auto bad = gronwall_bound(grow, 0.1, dom, tg);
  EXPECT_DOUBLE_EQ(bad.first_violation_time, tg.t(1));
  EXPECT_GT(bad.max_ratio, 1.0);
  EXPECT_EQ(calibrate_growth_rate(Trajectory::zeros(11, 16), dom, tg), 0.0);
}

TEST(WVBound, MinimalConstant) {
  const auto dom = Domain1D::make(20.0, 32);
  const auto tg = TimeGrid::make(1.0, 20);
  const ModelParams p = params(0.1, 0.5);
  const auto tr = ForwardSolver(dom, tg, p).solve(gaussian(dom), Trajectory::zeros(20, 32));
  const auto r = wv_bound(tr.y, 0.0, 1.0, dom, tg);
  EXPECT_NEAR(r.minimal_C * r.base, r.lhs, 1e-12 * r.lhs);
  EXPECT_TRUE(wv_bound(tr.y, 0.0, r.minimal_C * 1.001, dom, tg).holds);
  EXPECT_FALSE(wv_bound(tr.y, 0.0, r.minimal_C * 0.999, dom, tg).holds);
  EXPECT_DOUBLE_EQ(wv_bound(tr.y, 2.0, 1.0, dom, tg).base, r.base + 2.0);
}

TEST(Smallness, KnownValues) {
  const auto dom = Domain1D::make(1.0, 8);
  const auto tg = TimeGrid::make(1.0, 4);
  const auto z = smallness_margin(Field(8), 0.0, 1.0, dom, tg);
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_NEAR(z.rhs, 1.0 / std::sqrt(std::exp(2.0) - 1.0), 1e-15);
  EXPECT_TRUE(z.pass);
  EXPECT_TRUE(std::isinf(smallness_margin(Field(8, 5.0), 3.0, 0.0, dom, tg).rhs));
  EXPECT_DOUBLE_EQ(smallness_margin(Field(8), 2.0, 0.5, dom, tg).lhs, 1.0);
  EXPECT_THROW(smallness_margin(Field(8), 0.0, -1.0, dom, tg), std::invalid_argument);
  EXPECT_FALSE(smallness_margin(Field(8, 3.0), 0.0, 1.0, dom, tg).pass);
}
