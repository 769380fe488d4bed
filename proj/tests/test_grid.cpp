#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "kforq/grid.hpp"
#include "kforq/tridiagonal.hpp"
#include "oracles.hpp"

using namespace kforq;

namespace {

const double kPi = std::acos(-1.0);

Field sine(const Domain1D& dom, int mode = 1) {
  return Field::sample(dom, [&](double x) { return std::sin(mode * kPi * x / dom.length); });
}

}  // namespace

TEST(Domain, ValidatesInputs) {
  EXPECT_THROW(Domain1D::make(1.0, 2), std::invalid_argument);
  EXPECT_THROW(Domain1D::make(0.0, 8), std::invalid_argument);
  EXPECT_THROW(TimeGrid::make(0.0, 4), std::invalid_argument);
  EXPECT_THROW(TimeGrid::make(1.0, 0), std::invalid_argument);
  const auto dom = Domain1D::make(2.0, 9);
  EXPECT_DOUBLE_EQ(dom.h(), 0.2);
  EXPECT_DOUBLE_EQ(dom.x(0), 0.2);
  EXPECT_DOUBLE_EQ(dom.x(8), 1.8);
  EXPECT_DOUBLE_EQ(TimeGrid::make(1.0, 4).dt(), 0.25);
}

TEST(FieldOps, ArithmeticAndDimensionChecks) {
  Field a(3, 1.0), b(3, 2.0);
  EXPECT_EQ((a + b)[1], 3.0);
  EXPECT_EQ((b - a)[2], 1.0);
  EXPECT_EQ((2.0 * a)[0], 2.0);
  a.axpy(3.0, b);
  EXPECT_EQ(a[0], 7.0);
  EXPECT_THROW(a += Field(4), DimensionError);
  const auto dom = Domain1D::make(1.0, 4);
  EXPECT_THROW(inner_h(Field(3), Field(3), dom), DimensionError);
  EXPECT_THROW(d1(Field(5), dom), DimensionError);
}

TEST(D1, ZeroMapsToZero) {
  const auto dom = Domain1D::make(1.0, 16);
  const Field z = d1(Field(16), dom);
  EXPECT_EQ(norm_sup(z), 0.0);
}

TEST(D1, SineDerivativeSecondOrder) {
  double prev = 0.0;
  for (int n : {31, 63, 127, 255}) {
    const auto dom = Domain1D::make(1.0, n);
    const Field df = d1(sine(dom), dom);
    const Field exact = Field::sample(dom, [&](double x) { return kPi * std::cos(kPi * x); });
    const double err = norm_sup(df - exact);
    if (prev > 0.0) { EXPECT_GT(std::log2(prev / err), 1.9) << "n=" << n; }
    prev = err;
  }
}

TEST(D1, ConstantFieldJumpsOnlyAtTheEnds) {
  const auto dom = Domain1D::make(1.0, 9);
  const Field df = d1(Field(9, 2.0), dom);
  EXPECT_DOUBLE_EQ(df[0], 2.0 / (2.0 * dom.h()));
  EXPECT_DOUBLE_EQ(df[8], -2.0 / (2.0 * dom.h()));
  for (int i = 1; i < 8; ++i) EXPECT_EQ(df[static_cast<std::size_t>(i)], 0.0);
}

TEST(D1, MatchesDenseStencilAndIsAntisymmetric) {
  std::mt19937_64 rng(1);
  const auto dom = Domain1D::make(3.0, 12);
  const Field f = oracle::random_field(12, rng);
  const auto ref = oracle::matvec(oracle::dense_d1(12, dom.h()), f.values());
  EXPECT_LT(oracle::max_abs_diff(d1(f, dom).values(), ref), 1e-12);
  const auto D = oracle::dense_d1(12, dom.h());
  const auto Dt = oracle::transpose(D);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) EXPECT_EQ(D[i][j], -Dt[i][j]);
}

TEST(D1, SummationByParts) {
  std::mt19937_64 rng(2);
  const auto dom = Domain1D::make(5.0, 40);
  for (int s = 0; s < 10; ++s) {
    const Field f = oracle::random_field(40, rng), g = oracle::random_field(40, rng);
    const double lhs = inner_h(d1(f, dom), g, dom);
    const double rhs = -inner_h(f, d1(g, dom), dom);
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST(D2, ZeroAndQuadraticExact) {
  const auto dom = Domain1D::make(2.0, 11);
  EXPECT_EQ(norm_sup(d2(Field(11), dom)), 0.0);
  // x (L - x) vanishes at both ends, so the zero extension is exact.
  const Field q = Field::sample(dom, [&](double x) { return x * (dom.length - x); });
  const Field dq = d2(q, dom);
  for (double v : dq) EXPECT_NEAR(v, -2.0, 1e-12);
}

TEST(D2, SineSecondDerivativeSecondOrder) {
  double prev = 0.0;
  for (int n : {31, 63, 127, 255}) {
    const auto dom = Domain1D::make(1.0, n);
    const Field f = sine(dom);
    const Field exact = -(kPi * kPi) * f;
    const double err = norm_sup(d2(f, dom) - exact);
    if (prev > 0.0) { EXPECT_GT(std::log2(prev / err), 1.9); }
    prev = err;
  }
}

TEST(D2, Linear) {
  std::mt19937_64 rng(3);
  const auto dom = Domain1D::make(1.0, 20);
  const Field a = oracle::random_field(20, rng), b = oracle::random_field(20, rng);
  const Field lhs = d2(2.0 * a + (-3.0) * b, dom);
  const Field rhs = 2.0 * d2(a, dom) + (-3.0) * d2(b, dom);
  EXPECT_LT(norm_sup(lhs - rhs), 1e-9);
}

TEST(InnerH, SineSquaredIsHalf) {
  for (int n : {16, 64, 256}) {
    const auto dom = Domain1D::make(1.0, n);
    const Field f = sine(dom);
    EXPECT_NEAR(inner_h(f, f, dom), 0.5, 1e-12 + dom.h() * dom.h());
  }
}

TEST(InnerH, SymmetricAndZero) {
  std::mt19937_64 rng(4);
  const auto dom = Domain1D::make(1.0, 30);
  const Field f = oracle::random_field(30, rng), g = oracle::random_field(30, rng);
  EXPECT_EQ(inner_h(f, g, dom), inner_h(g, f, dom));
  EXPECT_EQ(norm_h(Field(30), dom), 0.0);
}

TEST(NormV, Values) {
  std::mt19937_64 rng(5);
  const auto dom = Domain1D::make(1.0, 30);
  EXPECT_EQ(norm_v(Field(30), dom), 0.0);
  for (int s = 0; s < 20; ++s) {
    const Field f = oracle::random_field(30, rng);
    EXPECT_GE(norm_v(f, dom), norm_h(f, dom));
  }
  double prev = 0.0;
  for (int n : {63, 127, 255}) {
    const auto d = Domain1D::make(1.0, n);
    // The boundary nodes, where sin' is largest, carry no weight: first order.
    const double err = std::abs(norm_v(sine(d), d) - std::sqrt(0.5 + kPi * kPi / 2.0));
    if (prev > 0.0) { EXPECT_GT(std::log2(prev / err), 0.95); }
    prev = err;
  }
}

TEST(NormVstar, BoundedByNormHViaEigendecomposition) {
  std::mt19937_64 rng(6);
  const int n = 16;
  const auto dom = Domain1D::make(2.0, n);
  const auto A = oracle::add(oracle::identity(n), oracle::dense_d2(n, dom.h()), -1.0);
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  EXPECT_GE(es.eigenvalues().minCoeff(), 1.0);
  for (int s = 0; s < 20; ++s) {
    const Field f = oracle::random_field(n, rng);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = f[static_cast<std::size_t>(i)];
    const Eigen::VectorXd c = es.eigenvectors().transpose() * v;
    double q = 0.0;
    for (int i = 0; i < n; ++i) q += c(i) * c(i) / es.eigenvalues()(i);
    const double ref = std::sqrt(dom.h() * q);
    EXPECT_NEAR(norm_vstar(f, dom), ref, 1e-12 * ref);
    EXPECT_LE(norm_vstar(f, dom), norm_h(f, dom));
    EXPECT_LE(norm_h(f, dom), norm_v(f, dom));
  }
  EXPECT_EQ(norm_vstar(Field(n), dom), 0.0);
}

TEST(NormVstar, FirstEigenmode) {
  for (double L : {1.0, 4.0}) {
    const auto dom = Domain1D::make(L, 127);
    const Field f = sine(dom);
    const double lam_h = 4.0 / (dom.h() * dom.h()) * std::pow(std::sin(kPi * dom.h() / (2.0 * L)), 2);
    EXPECT_NEAR(norm_vstar(f, dom), norm_h(f, dom) / std::sqrt(1.0 + lam_h), 1e-13);
    EXPECT_NEAR(norm_vstar(f, dom), norm_h(f, dom) / std::sqrt(1.0 + kPi * kPi / (L * L)), 1e-4);
  }
}

TEST(Norms, HomogeneityAndTriangleInequality) {
  std::mt19937_64 rng(7);
  const auto dom = Domain1D::make(1.0, 25);
  const auto tg = TimeGrid::make(1.0, 6);
  for (int s = 0; s < 10; ++s) {
    const Field f = oracle::random_field(25, rng), g = oracle::random_field(25, rng);
    const double a = -2.5;
    for (auto norm : {+[](const Field& x, const Domain1D& d) { return norm_h(x, d); },
                      +[](const Field& x, const Domain1D& d) { return norm_v(x, d); },
                      +[](const Field& x, const Domain1D& d) { return norm_vstar(x, d); }}) {
      EXPECT_NEAR(norm(a * f, dom), std::abs(a) * norm(f, dom), 1e-12 * norm(f, dom));
      EXPECT_LE(norm(f + g, dom), (norm(f, dom) + norm(g, dom)) * (1.0 + 1e-12));
    }
    EXPECT_NEAR(norm_sup(a * f), std::abs(a) * norm_sup(f), 1e-15);
    const Trajectory x = oracle::random_trajectory(7, 25, rng), y = oracle::random_trajectory(7, 25, rng);
    for (auto tn : {+[](const Trajectory& t, const Domain1D& d, const TimeGrid&) { return norm_ct_h(t, d); },
                    +[](const Trajectory& t, const Domain1D& d, const TimeGrid& g) { return norm_l2v(t, d, g); },
                    +[](const Trajectory& t, const Domain1D& d, const TimeGrid& g) { return norm_wv(t, d, g); }}) {
      EXPECT_NEAR(tn(a * x, dom, tg), std::abs(a) * tn(x, dom, tg), 1e-12 * tn(x, dom, tg));
      EXPECT_LE(tn(x + y, dom, tg), (tn(x, dom, tg) + tn(y, dom, tg)) * (1.0 + 1e-12));
    }
  }
}

TEST(TrajectoryNorms, ZeroAndConstantInTime) {
  const auto dom = Domain1D::make(1.0, 20);
  const auto tg = TimeGrid::make(2.0, 8);
  const auto z = Trajectory::zeros(9, 20);
  EXPECT_EQ(norm_ct_h(z, dom), 0.0);
  EXPECT_EQ(norm_l2v(z, dom, tg), 0.0);
  EXPECT_EQ(norm_wv(z, dom, tg), 0.0);
  EXPECT_EQ(norm_sup(z[3]), 0.0);
  const Trajectory c{std::vector<Field>(9, sine(dom))};
  EXPECT_EQ(norm_dt_vstar(c, dom, tg), 0.0);
  EXPECT_EQ(norm_wv(c, dom, tg), norm_l2v(c, dom, tg));
  EXPECT_NEAR(norm_l2v(c, dom, tg), std::sqrt(2.0) * norm_v(sine(dom), dom), 1e-12);
  EXPECT_THROW(norm_l2v(Trajectory::zeros(8, 20), dom, tg), DimensionError);
}

TEST(Embedding, MeasuredConstantBoundsRandomTrajectories) {
  std::mt19937_64 rng(8);
  const auto dom = Domain1D::make(1.0, 24);
  const auto tg = TimeGrid::make(1.0, 10);
  const double cE = estimate_embedding_constant(dom, tg);
  EXPECT_GT(cE, 0.0);
  // Constant-in-time first mode: ||phi|| / (sqrt(T) ||phi||_V).
  const Field phi = sine(dom);
  EXPECT_GE(cE, norm_h(phi, dom) / norm_v(phi, dom) * (1.0 - 1e-12));
  for (int s = 0; s < 20; ++s) {
    Trajectory tr = Trajectory::zeros(11, 24);
    const Field base = oracle::smooth_random_field(dom, rng);
    for (std::size_t n = 0; n < tr.size(); ++n) tr[n] = (1.0 + 0.05 * static_cast<double>(n)) * base;
    const double ratio = norm_ct_h(tr, dom) / norm_wv(tr, dom, tg);
    RecordProperty("ratio", std::to_string(ratio));
    EXPECT_LE(norm_ct_h(tr, dom), 2.0 * cE * norm_wv(tr, dom, tg));
  }
}

TEST(Tridiagonal, MatchesDenseEliminationAndIsAliasSafe) {
  std::mt19937_64 rng(9);
  for (int n : {3, 8, 50}) {
    const auto dom = Domain1D::make(1.0, n);
    const auto m = shifted_laplacian(dom, 1.5, 0.3);
    const TridiagonalFactor fac(m);
    const Field b = oracle::random_field(static_cast<std::size_t>(n), rng);
    const auto nn = static_cast<std::size_t>(n);
    auto A = oracle::add(oracle::identity(nn), oracle::dense_d2(nn, dom.h()), -0.3);
    for (std::size_t i = 0; i < nn; ++i) A[i][i] += 0.5;
    const auto x_ref = oracle::solve(A, b.values());
    const auto x = fac.solve(b.span());
    EXPECT_LT(oracle::max_abs_diff(x, x_ref), 1e-12);
    EXPECT_LT(fac.relative_residual(x, b.span()), 1e-14);
    Field inplace = b;
    fac.solve(inplace.span(), inplace.span());
    EXPECT_LT(oracle::max_abs_diff(inplace.values(), x_ref), 1e-12);
  }
}
