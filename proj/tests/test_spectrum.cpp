#include <gtest/gtest.h>

#include "nlsmooth/oracle.hpp"
#include "nlsmooth/spectrum.hpp"

using namespace nlsmooth;

TEST(CountZeros, BsRectangle) {
  const Pencil a(fixture_bs_total(-1.0).problem);
  const auto w = count_zeros(pencil_log_det(a), {-1, 1, -0.9, -0.1});
  ASSERT_TRUE(w.ok);
  EXPECT_EQ(w.count, 1);
  EXPECT_NEAR(w.raw, 1.0, 0.05);
  const Pencil b(fixture_bs_total(1.0).problem);
  const auto v = count_zeros(pencil_log_det(b), {-1, 1, -0.9, -0.1});
  ASSERT_TRUE(v.ok);
  EXPECT_EQ(v.count, 0);
}

TEST(CountZeros, SpectralGap) {
  const Pencil p(fixture_loc(pi / 2).problem);
  const auto w = count_zeros(pencil_log_det(p), {-2, 2, -0.8, -0.2});
  ASSERT_TRUE(w.ok);
  EXPECT_EQ(w.count, 0);
}

TEST(CountZeros, ContourThroughZeroIsPerturbed) {
  const Pencil p(fixture_loc(pi / 2).problem);
  const auto w = count_zeros(pencil_log_det(p), {-0.5, 0.5, -1.0, -0.5});
  ASSERT_TRUE(w.ok);
  EXPECT_GT(w.perturbations, 0);
  EXPECT_EQ(w.count, 1);
}

TEST(FindInStrip, BsMinusOne) {
  const auto f = fixture_bs_total(-1.0);
  const Pencil pen(f.problem);
  const Collocation col(f.problem, kDefaultCollocation);
  const auto s = find_in_strip(pen, {-1.0, 0.0, 10.0}, &col);
  ASSERT_EQ(s.eigenvalues.size(), 1u);
  EXPECT_NEAR(std::abs(s.eigenvalues[0].lambda + 2.0 * I / 3.0), 0.0, 1e-8);
  EXPECT_EQ(s.eigenvalues[0].alg_mult, 1);
  EXPECT_EQ(s.eigenvalues[0].geo_mult, 1);
  EXPECT_TRUE(s.cap_ok);
  EXPECT_LE(s.eigenvalues[0].residual, 1e-8);
}

TEST(FindInStrip, BsMinusSqrt2) {
  const Pencil pen(fixture_bs_total(-std::sqrt(2.0)).problem);
  const auto s = find_in_strip(pen, {-1.0, 0.0, 10.0});
  ASSERT_EQ(s.eigenvalues.size(), 1u);
  EXPECT_NEAR(std::abs(s.eigenvalues[0].lambda + 0.5 * I), 0.0, 1e-8);
}

TEST(FindInStrip, LocalDirichlet) {
  const Pencil pen(fixture_loc(pi / 2).problem);
  const auto s = find_in_strip(pen, {-1.5, -0.5, 10.0});
  ASSERT_EQ(s.eigenvalues.size(), 1u);
  EXPECT_NEAR(std::abs(s.eigenvalues[0].lambda + I), 0.0, 1e-8);
}

TEST(FindInStrip, BsEigenvaluesOnImaginaryAxis) {
  for (double B : {-1.9, -1.5, -1.0, -0.5, -0.2}) {
    const Pencil pen(fixture_bs_total(B).problem);
    for (const auto& e : find_in_strip(pen, {-1.0, 0.0, 10.0}).eigenvalues)
      EXPECT_LT(std::abs(e.lambda.real()), 1e-8) << B;
  }
}

TEST(LineEigenvalues, Bs) {
  EXPECT_EQ(line_eigenvalues(Pencil(fixture_bs_total(0.0).problem), -1.0).on_line.size(), 1u);
  EXPECT_TRUE(line_eigenvalues(Pencil(fixture_bs_total(-1.0).problem), -1.0).on_line.empty());
  EXPECT_TRUE(line_eigenvalues(Pencil(fixture_bs_total(-2.5).problem), -1.0).on_line.empty());
}

TEST(Jordan, SimpleEigenvalues) {
  const auto s = find_in_strip(Pencil(fixture_bs_total(0.0).problem), {-1.1, -0.9, 10.0});
  ASSERT_EQ(s.eigenvalues.size(), 1u);
  EXPECT_EQ(s.eigenvalues[0].partial_multiplicities, std::vector<int>{1});
}

TEST(Jordan, DoubleZeroAtOrigin) {
  const auto f = fixture_bs_total(-2.0);
  const Pencil pen(f.problem);
  const Collocation col(f.problem, kDefaultCollocation);
  const auto s = find_in_strip(pen, {-0.5, 0.5, 10.0}, &col);
  ASSERT_EQ(s.eigenvalues.size(), 1u);
  const auto& e = s.eigenvalues[0];
  EXPECT_LT(std::abs(e.lambda), 1e-7);
  EXPECT_EQ(e.alg_mult, 2);
  EXPECT_EQ(e.geo_mult, 1);
  EXPECT_EQ(e.partial_multiplicities, std::vector<int>{2});
  EXPECT_TRUE(jordan_chain(pen, e.lambda, 2, kClusterRankTol).has_value());
}
