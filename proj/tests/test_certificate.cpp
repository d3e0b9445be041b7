#include <gtest/gtest.h>

#include "nlsmooth/certificate.hpp"
#include "nlsmooth/oracle.hpp"

using namespace nlsmooth;

namespace {

EigenvalueRecord only_eigenvalue(const Pencil& pen, StripQuery q) {
  const auto s = find_in_strip(pen, q);
  EXPECT_EQ(s.eigenvalues.size(), 1u);
  return s.eigenvalues.at(0);
}

}  // namespace

TEST(GaussLegendre, IntegratesPolynomials) {
  const auto [x, w] = detail::gauss_legendre(8);
  double s = 0.0;
  for (int i = 0; i < 8; ++i) s += w[i] * std::pow(x[i], 14);
  EXPECT_NEAR(s, 2.0 / 15.0, 1e-14);
}

TEST(Certificate, BsMinusOne) {
  const Pencil pen(fixture_bs_total(-1.0).problem);
  const auto rec = only_eigenvalue(pen, {-1.0, 0.0, 10.0});
  const auto c = certify_eigenvalue(pen, rec);
  EXPECT_EQ(c.solution.l0, 0);
  EXPECT_LT(c.residual.interior, 1e-9);
  EXPECT_LT(c.residual.boundary, 1e-9);
  EXPECT_TRUE(c.valid);
  const auto bp = blowup_profile(pen, c.solution.function, 4, 10);
  EXPECT_NEAR(bp.fitted_ratio / std::pow(2.0, 2.0 / 3.0), 1.0, 0.02);
  for (double r : bp.ratios) EXPECT_NEAR(r / std::pow(2.0, 2.0 / 3.0), 1.0, 0.02);
}

TEST(Certificate, PerturbedExponentFailsResidual) {
  const Pencil pen(fixture_bs_total(-1.0).problem);
  const auto rec = only_eigenvalue(pen, {-1.0, 0.0, 10.0});
  auto f = build_power_solution(pen, rec).function;
  f.lambda0 += 1e-3;
  EXPECT_GT(verify_residual(pen, f).boundary, 1e-5);
}

TEST(Certificate, ClampedPlateEigenfunction) {
  // both rows vanish identically on the sides; the check must still be scale aware
  const Pencil pen(fixture_b4(0.8 * pi).problem);
  const auto rec = only_eigenvalue(pen, {-1.6, -1.4, 10.0});
  const auto c = certify_eigenvalue(pen, rec);
  EXPECT_TRUE(c.valid);
  EXPECT_LT(c.residual.boundary, 1e-9);
  auto f = c.solution.function;
  f.lambda0 += 1e-3;
  EXPECT_GT(verify_residual(pen, f).boundary, 1e-5);
}

TEST(Certificate, ZeroFunction) {
  const Pencil pen(fixture_bs_total(-1.0).problem);
  PowerLogFunction f{cplx(0, -0.5), {{CVector::Zero(2)}}};
  const auto r = verify_residual(pen, f);
  EXPECT_EQ(r.interior, 0.0);
  EXPECT_EQ(r.boundary, 0.0);
}

TEST(Certificate, AngularOnlySolutionAtZero) {
  // B = -2: the kernel at 0 is A + B w, D^2 U ~ r^-2 and the energy ratio is 4
  const Pencil pen(fixture_bs_total(-2.0).problem);
  const auto rec = only_eigenvalue(pen, {-0.1, 0.1, 10.0});
  const auto c = certify_eigenvalue(pen, rec);
  EXPECT_EQ(c.solution.l0, 0);
  EXPECT_TRUE(c.residual.pass);
  EXPECT_NEAR(c.blowup.fitted_ratio, 4.0, 0.08);
}

TEST(Certificate, LogarithmicSolutionFromJordanChain) {
  const Pencil pen(fixture_bs_total(-2.0).problem);
  const auto rec = only_eigenvalue(pen, {-0.1, 0.1, 10.0});
  ASSERT_EQ(rec.alg_mult, 2);
  const auto chain = jordan_chain(pen, rec.lambda, 2, kClusterRankTol);
  ASSERT_TRUE(chain.has_value());
  const PowerLogFunction f{rec.lambda, {{(*chain)[1], (*chain)[0]}, {(*chain)[0]}}};
  const auto r = verify_residual(pen, f);
  EXPECT_LT(r.interior, 1e-7);
  EXPECT_LT(r.boundary, 1e-7);
  // a genuine ln r factor: the ratio approaches 4 from above
  const auto bp = blowup_profile(pen, f, 4, 12);
  EXPECT_TRUE(bp.pass);
  for (double q : bp.ratios) EXPECT_GT(q, 4.0);
  EXPECT_LT(bp.ratios.back(), bp.ratios.front());
}

TEST(Certificate, PolynomialIsRefused) {
  // B = 0: the eigenfunction at -i is cos w + b sin w, i.e. U = y1 + b y2
  const Pencil pen(fixture_bs_total(0.0).problem);
  const auto rec = only_eigenvalue(pen, {-1.1, -0.9, 10.0});
  const PowerLogFunction f{cplx(0, -1), {{rec.eigenvectors.col(0)}}};
  EXPECT_TRUE(verify_residual(pen, f).pass);
  const auto bp = blowup_profile(pen, f);
  EXPECT_TRUE(bp.vanishing);
  EXPECT_FALSE(bp.pass);
  EXPECT_FALSE(build_power_solution(pen, rec).ok);
}
