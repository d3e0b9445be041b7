#include <random>

#include <gtest/gtest.h>

#include "nlsmooth/polar.hpp"

using namespace nlsmooth;

namespace {

std::vector<std::pair<double, double>> sample_grid() {
  std::vector<std::pair<double, double>> g;
  for (double r : {0.3, 0.7, 1.0, 1.9})
    for (double w = -2.8; w <= 2.8; w += 0.4) g.emplace_back(r, w);
  return g;
}

HomogeneousOperator random_op(std::mt19937& rng, int k) {
  std::normal_distribution<double> nd;
  std::vector<cplx> c(k + 1);
  for (auto& v : c) v = cplx(nd(rng), nd(rng));
  return {k, c};
}

}  // namespace

TEST(Polar, MinusLaplacian) {
  const auto p = to_polar(HomogeneousOperator::minus_laplacian());
  for (double w : {-1.0, 0.2, 2.5}) {
    const cplx lam(0.7, -0.3);
    const auto a = p.eval(w, lam);
    EXPECT_NEAR(std::abs(a[2] + 1.0), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(a[1]), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(a[0] - lam * lam), 0.0, 1e-13);
  }
}

TEST(Polar, FirstDerivative) {
  const auto p = to_polar(HomogeneousOperator::monomial(1, 0));
  const double w = 0.83;
  const cplx lam(-0.4, 1.1);
  const auto a = p.eval(w, lam);
  EXPECT_NEAR(std::abs(a[1] - I * std::sin(w)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(a[0] - lam * std::cos(w)), 0.0, 1e-14);
}

TEST(Polar, ZeroOrder) {
  const auto p = to_polar(HomogeneousOperator::identity());
  ASSERT_EQ(p.a.size(), 1u);
  EXPECT_EQ(p.eval(0.3, 2.0)[0], cplx(1.0));
}

TEST(Polar, ResidualExamples) {
  TrigPoly cos2{{{2, 0.5}, {-2, 0.5}}};
  EXPECT_LT(polar_residual(HomogeneousOperator::minus_laplacian(), 2.0 * I, cos2, sample_grid()), 1e-10);
  TrigPoly one{{{0, 1.0}}};
  EXPECT_LT(polar_residual(HomogeneousOperator::monomial(1, 0), 0.0, one, sample_grid()), 1e-14);
  TrigPoly zero;
  EXPECT_EQ(polar_residual(HomogeneousOperator::monomial(2, 1), 0.4, zero, sample_grid()), 0.0);
}

TEST(Polar, ResidualRandomOperators) {
  std::mt19937 rng(17);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 60; ++trial) {
    const int k = trial % 7;
    const auto op = random_op(rng, k);
    TrigPoly phi;
    for (int kk = -3; kk <= 3; ++kk) phi.c[kk] = cplx(nd(rng), nd(rng));
    const cplx lam(nd(rng), nd(rng));
    EXPECT_LT(polar_residual(op, lam, phi, sample_grid()), 1e-10) << "order " << k;
  }
}

TEST(Polar, Linearity) {
  std::mt19937 rng(3);
  const auto a = random_op(rng, 4), b = random_op(rng, 4);
  const cplx al(0.3, -1.2), be(2.0, 0.5);
  const auto lhs = to_polar(a * al + b * be);
  const auto pa = to_polar(a), pb = to_polar(b);
  for (int n = 0; n <= 4; ++n)
    for (int k = -4; k <= 4; ++k)
      for (int p = 0; p <= 4; ++p)
        EXPECT_NEAR(std::abs(lhs.a[n].at(k, p) - al * pa.a[n].at(k, p) - be * pb.a[n].at(k, p)), 0.0,
                    1e-13);
}

TEST(Polar, DegreeBounds) {
  std::mt19937 rng(5);
  for (int k = 0; k <= 6; ++k) {
    const auto p = to_polar(random_op(rng, k));
    for (const auto& t : p.a) {
      const auto [km, pm] = t.support();
      EXPECT_LE(km, k);
      EXPECT_LE(pm, k);
    }
  }
}

// A o B applied to r^{i lam} phi equals A applied to r^{i lam - k2} (Bphi), i.e.
// polar(A) evaluated at lambda + i k2 acting on the profile produced by polar(B).
TEST(Polar, Composition) {
  std::mt19937 rng(11);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 10; ++trial) {
    const int k1 = 1 + trial % 3, k2 = trial % 3;
    const auto A = random_op(rng, k1), B = random_op(rng, k2);
    const auto pab = to_polar(A.compose(B));
    const auto pa = to_polar(A), pb = to_polar(B);
    TrigPoly phi;
    for (int kk = -2; kk <= 2; ++kk) phi.c[kk] = cplx(nd(rng), nd(rng));
    const cplx lam(nd(rng), nd(rng));
    for (double w : {-1.3, 0.1, 0.9}) {
      // profile psi = sum_n b_n(w, lam) phi^{(n)}; need derivatives of psi up to k1.
      // Finite representation: b_n is a trig poly in w for fixed lam, so psi is a trig poly.
      TrigPoly psi;
      for (int n = 0; n <= k2; ++n)
        for (int kb = -k2; kb <= k2; ++kb) {
          const cplx bc = poly_eval(
              [&] {
                Poly q(k2 + 1);
                for (int p = 0; p <= k2; ++p) q[p] = pb.a[n].at(kb, p);
                return q;
              }(),
              lam);
          if (bc == 0.0) continue;
          for (const auto& [kp, cp] : phi.c) psi.c[kb + kp] += bc * std::pow(I * double(kp), n) * cp;
        }
      const cplx shifted = lam + I * double(k2);
      const auto aa = pa.eval(w, shifted);
      cplx lhs = 0.0;
      for (int n = 0; n <= k1; ++n) lhs += aa[n] * psi.derivative(w, n);
      const auto ab = pab.eval(w, lam);
      cplx rhs = 0.0;
      for (int n = 0; n <= k1 + k2; ++n) rhs += ab[n] * phi.derivative(w, n);
      EXPECT_NEAR(std::abs(lhs - rhs), 0.0, 1e-10 * (1.0 + std::abs(rhs)));
    }
  }
}
