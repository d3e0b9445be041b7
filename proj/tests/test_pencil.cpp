#include <random>

#include <gtest/gtest.h>

#include "nlsmooth/oracle.hpp"
#include "nlsmooth/pencil.hpp"

using namespace nlsmooth;

TEST(BoundaryRow, LaplacianNonlocalRow) {
  const double b1 = 0.7, chi = 1.6;
  const auto f = fixture_bs(b1, 0.0, chi, 1.0);
  const auto& row = f.problem.rows[0];
  const cplx lam(0.3, -0.4);
  // root -i gives e^{lambda w}
  const cplx v = boundary_row(f.problem, row, lam, 0, -I, 0);
  const cplx chi_f = std::exp(I * lam * std::log(chi));
  EXPECT_NEAR(std::abs(v - (std::exp(-lam * (pi / 2)) + b1 * chi_f)), 0.0, 1e-13);
  const cplx w = boundary_row(f.problem, row, lam, 0, I, 0);
  EXPECT_NEAR(std::abs(w - (std::exp(lam * (pi / 2)) + b1 * chi_f)), 0.0, 1e-13);
}

TEST(BoundaryRow, LocalDirichlet) {
  const auto f = fixture_loc(pi / 2);
  const cplx lam(0.8, 0.1);
  EXPECT_NEAR(std::abs(boundary_row(f.problem, f.problem.rows[1], lam, 0, -I, 0) - std::exp(lam * (pi / 2))),
              0.0, 1e-13);
}

namespace {

// d/dlambda log of a function by central differences.
template <class F>
cplx log_derivative(F f, cplx lam) {
  const double h = 1e-5;
  return (std::log(f(lam + h)) - std::log(f(lam - h))) / (2 * h);
}

void expect_same_log_derivative(const Fixture& fx, int samples, unsigned seed) {
  const Pencil pen(fx.problem);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < samples; ++i) {
    const cplx lam(u(rng), u(rng));
    const cplx a = log_derivative([&](cplx l) { return pen.det(l); }, lam);
    const cplx b = log_derivative(fx.closed_det, lam);
    if (std::abs(fx.closed_det(lam)) < 1e-3) continue;
    EXPECT_NEAR(std::abs(a - b), 0.0, 1e-6 * (1.0 + std::abs(b))) << fx.name << " at " << lam;
  }
}

}  // namespace

TEST(CharDet, MatchesClosedFormBs) { expect_same_log_derivative(fixture_bs(-0.2, -0.8), 50, 1); }
TEST(CharDet, MatchesClosedFormLoc) { expect_same_log_derivative(fixture_loc(pi / 3), 50, 2); }
TEST(CharDet, MatchesClosedFormHom) {
  expect_same_log_derivative(fixture_hom(1.0, 2.0), 50, 3);
  expect_same_log_derivative(fixture_hom(1.0, 0.5), 50, 4);
}

TEST(CharDet, NoSpuriousZeroAtDegeneration) {
  // sinh(2 lambda w0)/lambda is 2 w0 at lambda = 0
  const auto f = fixture_loc(pi / 2);
  const Pencil pen(f.problem);
  EXPECT_GT(std::abs(pen.det(0.0)), 1e-2);
  EXPECT_LT(std::abs(pen.det(-I)), 1e-10);
}

TEST(CharDet, ContourIntegralWithoutZerosVanishes) {
  const Pencil pen(fixture_bs(0.4, 0.2).problem);
  // circle of radius 0.2 around 0.5 - 0.5i, far from the zero set
  const int K = 256;
  cplx sum = 0.0;
  for (int k = 0; k < K; ++k) {
    const cplx u = 0.2 * std::polar(1.0, 2 * pi * k / K);
    const cplx l = cplx(0.5, -0.5) + u;
    const double h = 1e-5;
    const cplx d = (pen.log_det(l + h) - pen.log_det(l - h)) / (2 * h);
    sum += d * I * u * (2 * pi / K);
  }
  EXPECT_LT(std::abs(sum), 1e-6);
}

TEST(Collocation, SingularAtEigenvalue) {
  const auto f = fixture_bs_total(-1.0);
  const auto c = collocation_matrix(f.problem, -2.0 * I / 3.0, 32);
  EXPECT_LT(relative_sigma_min(c.a), 1e-8);
  const auto d = collocation_matrix(f.problem, -I / 3.0, 32);
  EXPECT_GT(relative_sigma_min(d.a), 1e-4);
}

TEST(Collocation, ResolventWellConditioned) {
  const auto f = fixture_loc(pi / 3);
  EXPECT_GT(relative_sigma_min(collocation_matrix(f.problem, cplx(0.3, -0.2), 48).a), 1e-6);
}

TEST(Collocation, AdjointKernelDimensions) {
  EXPECT_EQ(adjoint_kernel(collocation_matrix(fixture_bs_total(0.0).problem, -I, 48)).size(), 1u);
  EXPECT_EQ(adjoint_kernel(collocation_matrix(fixture_loc(pi / 2).problem, -I, 48)).size(), 1u);
  EXPECT_TRUE(adjoint_kernel(collocation_matrix(fixture_loc(pi / 2).problem, cplx(0.2, -0.5), 48)).empty());
}

TEST(Collocation, AdjointBoundaryPartMatchesPencilLeftKernel) {
  // Both describe the functionals c with {0, c} outside the range.
  const auto f = fixture_bs_total(0.0);
  const auto dual = adjoint_kernel(collocation_matrix(f.problem, -I, 48));
  const Pencil pen(f.problem);
  const auto sp = svd_split(pen.matrix(-I), 1e-8);
  ASSERT_EQ(sp.left_null.cols(), 1);
  const CVector a = dual[0].boundary.normalized(), b = sp.left_null.col(0);
  EXPECT_NEAR(std::abs(a.dot(b)), 1.0, 1e-8);
}

TEST(Collocation, ReconstructsPolynomial) {
  const auto f = fixture_loc(1.1);
  const Collocation col(f.problem, 24);
  // phi = 1 + 2 w + w^2: phi'' = 2
  CVector sol = CVector::Zero(col.unknowns());
  for (int i = 0; i < 24; ++i) sol(i) = 2.0;
  sol(24) = 1.0;
  sol(25) = 2.0;
  for (double w : {-1.0, 0.3, 0.95}) {
    EXPECT_NEAR(std::abs(col.evaluate(sol, 0, w, 0) - (1 + 2 * w + w * w)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(col.evaluate(sol, 0, w, 1) - (2 + 2 * w)), 0.0, 1e-12);
  }
}

TEST(Symmetry, BsEigenvaluesMirror) {
  // real coefficients, mirror-symmetric rotations: Delta(-conj(l)) = conj(Delta(l)) up to factor
  const Pencil pen(fixture_bs(-0.5, -0.5).problem);
  for (cplx l : {cplx(0.3, -0.4), cplx(1.1, -0.8)}) {
    const cplx a = pen.det(l), b = pen.det(-std::conj(l));
    EXPECT_NEAR(std::abs(a), std::abs(b), 1e-9 * std::abs(a));
  }
}
