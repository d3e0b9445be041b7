#ifndef NLSMOOTH_ORACLE_HPP
#define NLSMOOTH_ORACLE_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "model.hpp"

namespace nlsmooth {

/// A test problem with whatever closed forms are known for it.
struct Fixture {
  std::string name;
  ModelProblem problem;
  std::function<cplx(cplx)> closed_det;  // empty if unknown
};

namespace detail {

inline BoundaryRow single_row(int j, int sigma, int mu, const HomogeneousOperator& op) {
  BoundaryRow r{j, sigma, mu, op.order, {}};
  r.terms.push_back({j, 0.0, 1.0, op});
  return r;
}

}  // namespace detail

/// Dirichlet Laplacian on the angle (-w0, w0).
inline Fixture fixture_loc(double w0, int ell = 1) {
  Fixture f;
  f.name = "FIX-LOC";
  auto& p = f.problem;
  p.order_2m = 2;
  p.ell = ell;
  p.half_angles = {w0};
  p.interior_ops = {HomogeneousOperator::minus_laplacian()};
  p.rows = {detail::single_row(0, 1, 1, HomogeneousOperator::identity()),
            detail::single_row(0, 2, 1, HomogeneousOperator::identity())};
  check_structure(p);
  f.closed_det = [w0](cplx l) { return std::abs(l) < 1e-300 ? cplx(2.0 * w0) : std::sinh(2.0 * l * w0) / l; };
  return f;
}

/// Laplacian in the quadrant-pair angle (-pi/2, pi/2), rows
/// u(side sigma) + b_sigma u(rotated to omega = 0, scaled by chi_sigma).
inline Fixture fixture_bs(double b1, double b2, double chi1 = 1.0, double chi2 = 1.0, int ell = 1) {
  Fixture f;
  f.name = "FIX-BS";
  auto& p = f.problem;
  p.order_2m = 2;
  p.ell = ell;
  p.half_angles = {pi / 2};
  p.interior_ops = {HomogeneousOperator::minus_laplacian()};
  auto r1 = detail::single_row(0, 1, 1, HomogeneousOperator::identity());
  auto r2 = detail::single_row(0, 2, 1, HomogeneousOperator::identity());
  if (b1 != 0.0) r1.terms.push_back({0, pi / 2, chi1, HomogeneousOperator::identity() * b1});
  if (b2 != 0.0) r2.terms.push_back({0, -pi / 2, chi2, HomogeneousOperator::identity() * b2});
  p.rows = {r1, r2};
  check_structure(p);
  f.closed_det = [=](cplx l) {
    const cplx nl = b1 * std::exp(I * l * std::log(chi1)) + b2 * std::exp(I * l * std::log(chi2));
    if (std::abs(l) < 1e-300) return cplx(pi + nl * (pi / 2));
    return (std::sinh(l * pi) + nl * std::sinh(l * (pi / 2))) / l;
  };
  return f;
}

/// FIX-BS with only the first side nonlocal.
inline Fixture fixture_hom(double b, double chi, int ell = 1) {
  Fixture f = fixture_bs(b, 0.0, chi, 1.0, ell);
  f.name = "FIX-HOM";
  return f;
}

/// FIX-BS with total B split asymmetrically so both nonlocal terms are present.
inline Fixture fixture_bs_total(double B, int ell = 1) {
  return fixture_bs(B / 2 + 0.3, B / 2 - 0.3, 1.0, 1.0, ell);
}

/// Biharmonic operator with rows (u, du/dn) on (-w0, w0); b adds the nonlocal
/// term b u(rotated to omega = 0) on the first row of side 1.
inline Fixture fixture_b4(double w0, int ell = 2, double b = 0.0) {
  Fixture f;
  f.name = "FIX-B4";
  auto& p = f.problem;
  p.order_2m = 4;
  p.ell = ell;
  p.half_angles = {w0};
  const auto lap = HomogeneousOperator::minus_laplacian();
  p.interior_ops = {lap.compose(lap)};
  for (int sigma = 1; sigma <= 2; ++sigma) {
    const double th = p.side_angle(0, sigma);
    const double n1 = sigma == 2 ? std::sin(th) : -std::sin(th);
    const double n2 = sigma == 2 ? -std::cos(th) : std::cos(th);
    auto r1 = detail::single_row(0, sigma, 1, HomogeneousOperator::identity());
    if (sigma == 1 && b != 0.0) r1.terms.push_back({0, w0, 1.0, HomogeneousOperator::identity() * b});
    p.rows.push_back(r1);
    p.rows.push_back(detail::single_row(0, sigma, 2, HomogeneousOperator::directional(n1, n2)));
  }
  check_structure(p);
  return f;
}

inline Fixture fixture(const std::string& name, const std::vector<double>& params) {
  auto par = [&](std::size_t i, double d) { return i < params.size() ? params[i] : d; };
  if (name == "FIX-LOC") return fixture_loc(par(0, pi / 2), int(par(1, 1)));
  if (name == "FIX-BS") return fixture_bs(par(0, 0), par(1, 0), par(2, 1), par(3, 1), int(par(4, 1)));
  if (name == "FIX-HOM") return fixture_hom(par(0, 1), par(1, 2), int(par(2, 1)));
  if (name == "FIX-B4") return fixture_b4(par(0, pi / 3), int(par(1, 2)), par(2, 0));
  throw InputError("unknown fixture " + name);
}

// ---------------------------------------------------------------------------
// Exact polynomial ansatz for the model problem with monomial right-hand sides.
// ---------------------------------------------------------------------------

struct PolynomialSolve {
  bool feasible = false;
  std::vector<std::vector<cplx>> coeffs;  // per component, coefficient of y1^{s-a} y2^a
  double residual = 0.0;
};

namespace detail {

/// Homogeneous polynomial of degree d, coefficient index a = power of y2.
using HomPoly = std::vector<cplx>;

inline HomPoly apply_to_poly(const HomogeneousOperator& op, const HomPoly& v) {
  const int d = int(v.size()) - 1, k = op.order;
  if (k > d) return HomPoly(1, 0.0);  // zero polynomial (degree irrelevant)
  HomPoly out(d - k + 1, 0.0);
  const cplx pref = std::pow(-I, k);
  for (int a2 = 0; a2 <= k; ++a2) {
    const int a1 = k - a2;
    if (op.coeffs[a2] == 0.0) continue;
    for (int q = 0; q <= d; ++q) {
      const int p = d - q;
      if (p < a1 || q < a2) continue;
      out[q - a2] += op.coeffs[a2] * pref * falling(double(p), a1) * falling(double(q), a2) * v[q];
    }
  }
  return out;
}

inline cplx eval_hom(const HomPoly& v, double y1, double y2) {
  const int d = int(v.size()) - 1;
  cplx s = 0.0;
  for (int q = 0; q <= d; ++q) s += v[q] * std::pow(y1, d - q) * std::pow(y2, q);
  return s;
}

}  // namespace detail

/// Decides whether P V = 0, B V = c r^{s - m_row} has a solution V made of
/// homogeneous polynomials of degree s, by linear algebra on monomial coefficients.
inline PolynomialSolve brute_polynomial_solve(const ModelProblem& p, int s, const CVector& c) {
  const int N = p.N(), nv = s + 1, n = N * nv;
  // Each equation is linear in the coefficients; build by applying to unit polynomials.
  std::vector<std::vector<cplx>> rows;
  std::vector<cplx> rhs;
  for (int j = 0; j < N; ++j) {
    const int deg_out = s - p.order_2m;
    if (deg_out < 0) continue;
    for (int q = 0; q <= deg_out; ++q) {
      std::vector<cplx> row(n, 0.0);
      for (int a = 0; a < nv; ++a) {
        detail::HomPoly e(nv, 0.0);
        e[a] = 1.0;
        row[j * nv + a] = detail::apply_to_poly(p.interior_ops[j], e)[q];
      }
      rows.push_back(row);
      rhs.push_back(0.0);
    }
  }
  for (int r = 0; r < p.row_count(); ++r) {
    const auto& br = p.rows[r];
    std::vector<cplx> row(n, 0.0);
    if (br.order <= s) {
      for (const auto& t : br.terms) {
        const double th = p.shifted_angle(br, t);
        const double scale = std::pow(t.homothety, s - br.order);
        for (int a = 0; a < nv; ++a) {
          detail::HomPoly e(nv, 0.0);
          e[a] = 1.0;
          const auto q = detail::apply_to_poly(t.op, e);
          row[t.target * nv + a] += scale * detail::eval_hom(q, std::cos(th), std::sin(th));
        }
      }
    }
    rows.push_back(row);
    rhs.push_back(c(r));
  }
  CMatrix A(rows.size(), n);
  CVector b(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int k = 0; k < n; ++k) A(i, k) = rows[i][k];
    b(i) = rhs[i];
  }
  PolynomialSolve out;
  Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(A);
  cod.setThreshold(1e-10);
  const CVector v = cod.solve(b);
  const double bn = std::max(1.0, b.norm());
  out.residual = (A * v - b).norm() / bn;
  out.feasible = out.residual <= 1e-9;
  out.coeffs.assign(N, std::vector<cplx>(nv));
  for (int j = 0; j < N; ++j)
    for (int a = 0; a < nv; ++a) out.coeffs[j][a] = v(j * nv + a);
  return out;
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_ORACLE_HPP
