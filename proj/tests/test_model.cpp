#include <gtest/gtest.h>

#include "nlsmooth/model.hpp"

using namespace nlsmooth;

namespace {

BoundaryRow local_row(int j, int sigma, int mu, HomogeneousOperator op) {
  BoundaryRow r{j, sigma, mu, op.order, {}};
  r.terms.push_back({j, 0.0, 1.0, op});
  return r;
}

ModelProblem laplace_quadrant(HomogeneousOperator b1, HomogeneousOperator b2) {
  ModelProblem p;
  p.order_2m = 2;
  p.ell = 1;
  p.half_angles = {pi / 2};
  p.interior_ops = {HomogeneousOperator::minus_laplacian()};
  p.rows = {local_row(0, 1, 1, b1), local_row(0, 2, 1, b2)};
  check_structure(p);
  return p;
}

HomogeneousOperator biharmonic() {
  const auto l = HomogeneousOperator::minus_laplacian();
  return l.compose(l);
}

}  // namespace

TEST(Geometry, ShiftedPointInside) {
  auto p = laplace_quadrant(HomogeneousOperator::identity(), HomogeneousOperator::identity());
  p.rows[0].terms.push_back({0, pi / 2, 1.0, HomogeneousOperator::identity()});
  EXPECT_TRUE(validate_geometry(p).passed());
}

TEST(Geometry, ShiftedPointOnBoundaryFails) {
  auto p = laplace_quadrant(HomogeneousOperator::identity(), HomogeneousOperator::identity());
  p.rows[0].terms.push_back({0, pi, 1.0, HomogeneousOperator::identity()});
  const auto rep = validate_geometry(p);
  ASSERT_FALSE(rep.passed());
  EXPECT_NE(rep.items[0].detail.find("shifted angle"), std::string::npos);
}

TEST(Geometry, LocalOnlyVacuous) {
  auto p = laplace_quadrant(HomogeneousOperator::identity(), HomogeneousOperator::identity());
  EXPECT_TRUE(validate_geometry(p).passed());
  EXPECT_TRUE(validate_geometry(p).items.empty());
}

TEST(Ellipticity, Laplacian) {
  const auto e = check_proper_ellipticity(HomogeneousOperator::minus_laplacian(), 2);
  EXPECT_TRUE(e.passed);
  ASSERT_EQ(e.roots.size(), 2u);
  EXPECT_NEAR(std::abs(e.roots[0].value + I), 0.0, 1e-12);
}

TEST(Ellipticity, Hyperbolic) {
  const auto e = check_proper_ellipticity({2, {1.0, 0.0, -1.0}}, 2);
  EXPECT_FALSE(e.passed);
  EXPECT_TRUE(e.real_root);
}

TEST(Ellipticity, BiharmonicDoubleRoots) {
  const auto e = check_proper_ellipticity(biharmonic(), 4);
  EXPECT_TRUE(e.passed);
  ASSERT_EQ(e.roots.size(), 2u);
  EXPECT_EQ(e.roots[0].multiplicity, 2);
  EXPECT_EQ(e.roots[1].multiplicity, 2);
}

TEST(Ellipticity, DegreeDrop) {
  const auto e = check_proper_ellipticity({2, {1.0, 1.0, 0.0}}, 2);
  EXPECT_FALSE(e.passed);
  EXPECT_TRUE(e.degree_drop);
}

TEST(Ellipticity, RealSecondOrderAlwaysProper) {
  // a D1^2 + 2b D1D2 + c D2^2 with ac > b^2
  for (double a : {0.5, 1.0, 3.0})
    for (double b : {-0.9, 0.0, 0.4})
      for (double c : {1.0, 2.0}) {
        if (a * c <= b * b) continue;
        EXPECT_TRUE(check_proper_ellipticity({2, {a, 2 * b, c}}, 2).passed);
      }
}

TEST(Ellipticity, ConjugateReflection) {
  const HomogeneousOperator op{4, {1.0, cplx(0.2, 0.1), 2.0, cplx(0.0, -0.3), 1.5}};
  const auto e = check_proper_ellipticity(op, 4);
  std::vector<cplx> cc;
  for (auto c : op.coeffs) cc.push_back(std::conj(c));
  const auto f = check_proper_ellipticity({4, cc}, 4);
  EXPECT_EQ(e.upper, f.lower);
  EXPECT_EQ(e.lower, f.upper);
}

TEST(Lopatinsky, DirichletPasses) {
  const auto p = laplace_quadrant(HomogeneousOperator::identity(), HomogeneousOperator::identity());
  for (const auto& s : check_lopatinsky(p)) EXPECT_TRUE(s.passed);
}

TEST(Lopatinsky, TangentialDerivativeOnSide) {
  const double t1 = std::cos(pi / 2), t2 = std::sin(pi / 2);
  const auto p = laplace_quadrant(HomogeneousOperator::identity(), HomogeneousOperator::directional(t1, t2));
  for (const auto& s : check_lopatinsky(p)) EXPECT_TRUE(s.passed);
}

TEST(Lopatinsky, ObliqueDegenerateFails) {
  // side 2 at omega = pi/2: tangent (0,1), inward normal (1,0); d_n - i d_t
  const auto bad = HomogeneousOperator::directional(1.0, 0.0) + HomogeneousOperator::directional(0.0, 1.0) * (-I);
  const auto p = laplace_quadrant(HomogeneousOperator::identity(), bad);
  const auto sides = check_lopatinsky(p);
  EXPECT_TRUE(sides[0].passed);
  EXPECT_FALSE(sides[1].passed);
  EXPECT_EQ(sides[1].deficiency, 1);
}

TEST(Lopatinsky, ClampedPlatePasses) {
  ModelProblem p;
  p.order_2m = 4;
  p.ell = 2;
  p.half_angles = {pi / 3};
  p.interior_ops = {biharmonic()};
  for (int sigma = 1; sigma <= 2; ++sigma) {
    const double th = p.side_angle(0, sigma);
    const double n1 = sigma == 2 ? std::sin(th) : -std::sin(th);
    const double n2 = sigma == 2 ? -std::cos(th) : std::cos(th);
    p.rows.push_back(local_row(0, sigma, 1, HomogeneousOperator::identity()));
    p.rows.push_back(local_row(0, sigma, 2, HomogeneousOperator::directional(n1, n2)));
  }
  check_structure(p);
  for (const auto& s : check_lopatinsky(p)) EXPECT_TRUE(s.passed);
}

TEST(Structure, RejectsMissingLocalTerm) {
  ModelProblem p;
  p.half_angles = {1.0};
  p.interior_ops = {HomogeneousOperator::minus_laplacian()};
  p.rows = {local_row(0, 1, 1, HomogeneousOperator::identity()),
            BoundaryRow{0, 2, 1, 0, {{0, 0.3, 1.0, HomogeneousOperator::identity()}}}};
  EXPECT_THROW(check_structure(p), InputError);
}

TEST(Structure, RejectsWrongRowCount) {
  ModelProblem p;
  p.half_angles = {1.0};
  p.interior_ops = {HomogeneousOperator::minus_laplacian()};
  p.rows = {local_row(0, 1, 1, HomogeneousOperator::identity())};
  EXPECT_THROW(check_structure(p), InputError);
}
