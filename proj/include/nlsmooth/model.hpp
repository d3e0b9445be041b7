#ifndef NLSMOOTH_MODEL_HPP
#define NLSMOOTH_MODEL_HPP

#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"

namespace nlsmooth {

/// Homogeneous constant-coefficient operator sum_{a2} c[a2] D1^{k-a2} D2^{a2},
/// with D = -i d/dy.
struct HomogeneousOperator {
  int order = 0;
  std::vector<cplx> coeffs;  // size order+1, index = power of D2

  HomogeneousOperator() : coeffs(1, 0.0) {}
  HomogeneousOperator(int k, std::vector<cplx> c) : order(k), coeffs(std::move(c)) {
    if (k < 0 || int(coeffs.size()) != k + 1)
      throw InputError("homogeneous operator of order " + std::to_string(k) + " needs " +
                       std::to_string(k + 1) + " coefficients");
  }

  static HomogeneousOperator identity() { return {0, {1.0}}; }

  /// D1^a1 D2^a2
  static HomogeneousOperator monomial(int a1, int a2, cplx c = 1.0) {
    std::vector<cplx> v(a1 + a2 + 1, 0.0);
    v[a2] = c;
    return {a1 + a2, v};
  }

  /// Laplacian-type operator D1^2 + D2^2 (= -Delta).
  static HomogeneousOperator minus_laplacian() { return {2, {1.0, 0.0, 1.0}}; }

  /// Real directional derivative d . grad = i (d1 D1 + d2 D2).
  static HomogeneousOperator directional(double d1, double d2) {
    return {1, {I * d1, I * d2}};
  }

  bool is_zero() const {
    for (auto c : coeffs)
      if (c != 0.0) return false;
    return true;
  }

  cplx coeff(int a1, int a2) const {
    if (a1 + a2 != order || a2 < 0 || a1 < 0) return 0.0;
    return coeffs[a2];
  }

  /// Symbol P(xi1, xi2).
  cplx symbol(cplx xi1, cplx xi2) const {
    cplx s = 0.0;
    for (int a2 = 0; a2 <= order; ++a2)
      s += coeffs[a2] * std::pow(xi1, order - a2) * std::pow(xi2, a2);
    return s;
  }

  /// P(a + eta b) as a polynomial in eta.
  Poly symbol_along(cplx a1, cplx a2, cplx b1, cplx b2) const {
    Poly total{0.0};
    for (int p2 = 0; p2 <= order; ++p2) {
      if (coeffs[p2] == 0.0) continue;
      Poly t{coeffs[p2]};
      for (int k = 0; k < order - p2; ++k) t = poly_mul(t, Poly{a1, b1});
      for (int k = 0; k < p2; ++k) t = poly_mul(t, Poly{a2, b2});
      total = poly_add(total, t);
    }
    return total;
  }

  HomogeneousOperator compose(const HomogeneousOperator& o) const {
    std::vector<cplx> c(order + o.order + 1, 0.0);
    for (int i = 0; i <= order; ++i)
      for (int j = 0; j <= o.order; ++j) c[i + j] += coeffs[i] * o.coeffs[j];
    return {order + o.order, c};
  }

  HomogeneousOperator operator+(const HomogeneousOperator& o) const {
    if (o.order != order) throw InputError("adding operators of different order");
    auto c = coeffs;
    for (int i = 0; i <= order; ++i) c[i] += o.coeffs[i];
    return {order, c};
  }

  HomogeneousOperator operator*(cplx s) const {
    auto c = coeffs;
    for (auto& v : c) v *= s;
    return {order, c};
  }
};

/// One summand of a boundary row: (B U_k)(G y) with G = rotation by `rotation`
/// composed with homothety `homothety`.
struct NonlocalTerm {
  int target = 0;  // 0-based component index k
  double rotation = 0.0;
  double homothety = 1.0;
  HomogeneousOperator op;

  bool is_local(int row_component) const {
    return target == row_component && rotation == 0.0 && homothety == 1.0;
  }
};

struct BoundaryRow {
  int component = 0;  // 0-based j
  int side = 1;       // sigma in {1, 2}; side sits at omega = (-1)^sigma omega_j
  int mu = 1;         // 1..m
  int order = 0;      // m_{j sigma mu}
  std::vector<NonlocalTerm> terms;
};

struct ModelProblem {
  int order_2m = 2;
  int ell = 0;
  std::vector<double> half_angles;
  std::vector<HomogeneousOperator> interior_ops;
  std::vector<BoundaryRow> rows;  // canonical order: j, sigma, mu

  int N() const { return int(half_angles.size()); }
  int m() const { return order_2m / 2; }
  int row_count() const { return int(rows.size()); }

  double side_angle(int j, int sigma) const {
    return (sigma == 1 ? -1.0 : 1.0) * half_angles[j];
  }
  double side_angle(const BoundaryRow& r) const { return side_angle(r.component, r.side); }

  /// Shifted evaluation angle of a term on a row.
  double shifted_angle(const BoundaryRow& r, const NonlocalTerm& t) const {
    return side_angle(r) + t.rotation;
  }

  int row_index(int j, int sigma, int mu) const { return (j * 2 + (sigma - 1)) * m() + (mu - 1); }
};

inline std::string row_label(const BoundaryRow& r) {
  return "(" + std::to_string(r.component + 1) + "," + std::to_string(r.side) + "," +
         std::to_string(r.mu) + ")";
}

/// Structural well-formedness; throws InputError. Sorts rows canonically.
inline void check_structure(ModelProblem& p) {
  if (p.order_2m < 2 || p.order_2m % 2 != 0)
    throw InputError("order_2m must be an even integer >= 2");
  const int N = p.N();
  if (N < 1) throw InputError("at least one component (angle) is required");
  if (int(p.interior_ops.size()) != N)
    throw InputError("one interior operator per component is required");
  if (p.ell < 0 || p.ell > p.order_2m - 1)
    throw InputError("ell must satisfy 0 <= ell <= 2m-1");
  for (int j = 0; j < N; ++j) {
    const double w = p.half_angles[j];
    if (!(w > 0.0 && w < pi))
      throw InputError("half angle of component " + std::to_string(j + 1) + " must lie in (0, pi)");
    if (p.interior_ops[j].order != p.order_2m)
      throw InputError("interior operator of component " + std::to_string(j + 1) +
                       " must have order 2m");
    if (p.interior_ops[j].is_zero())
      throw InputError("interior operator of component " + std::to_string(j + 1) + " is zero");
  }
  const int m = p.m();
  if (p.row_count() != 2 * m * N)
    throw InputError("expected exactly 2mN = " + std::to_string(2 * m * N) + " boundary rows, got " +
                     std::to_string(p.row_count()));
  std::vector<BoundaryRow> sorted(p.rows.size());
  std::vector<bool> seen(p.rows.size(), false);
  for (const auto& r : p.rows) {
    if (r.component < 0 || r.component >= N || (r.side != 1 && r.side != 2) || r.mu < 1 || r.mu > m)
      throw InputError("row index out of range: " + row_label(r));
    if (r.order < 0 || r.order > p.order_2m - 1)
      throw InputError("row " + row_label(r) + " order must be in [0, 2m-1]");
    const int idx = p.row_index(r.component, r.side, r.mu);
    if (seen[idx]) throw InputError("duplicate row " + row_label(r));
    seen[idx] = true;
    int local = 0;
    for (const auto& t : r.terms) {
      if (t.target < 0 || t.target >= N)
        throw InputError("row " + row_label(r) + " term targets a missing component");
      if (!(t.homothety > 0.0))
        throw InputError("row " + row_label(r) + " has non-positive homothety");
      if (t.op.order != r.order)
        throw InputError("row " + row_label(r) + " term order differs from the row order");
      if (t.is_local(r.component)) ++local;
    }
    if (local != 1)
      throw InputError("row " + row_label(r) + " must contain exactly one local term");
    sorted[idx] = r;
  }
  p.rows = std::move(sorted);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct CheckItem {
  std::string name;
  bool passed = true;
  std::string detail;
  double margin = 0.0;
};

struct ValidationReport {
  std::vector<CheckItem> items;
  bool passed() const {
    for (const auto& i : items)
      if (!i.passed) return false;
    return true;
  }
  void merge(const ValidationReport& o) { items.insert(items.end(), o.items.begin(), o.items.end()); }
};

inline constexpr double kGeometryMargin = 1e-12;

/// Nonlocal evaluation points must lie strictly inside the target angle.
inline ValidationReport validate_geometry(const ModelProblem& p) {
  ValidationReport rep;
  for (const auto& r : p.rows) {
    for (const auto& t : r.terms) {
      if (t.is_local(r.component)) continue;
      const double theta = p.shifted_angle(r, t);
      const double margin = p.half_angles[t.target] - std::abs(theta);
      CheckItem it;
      it.name = "geometry row " + row_label(r) + " -> component " + std::to_string(t.target + 1);
      it.margin = margin;
      it.passed = margin > kGeometryMargin;
      char buf[160];
      std::snprintf(buf, sizeof buf, "shifted angle %.15g, target half-angle %.15g", theta,
                    p.half_angles[t.target]);
      it.detail = buf;
      rep.items.push_back(it);
    }
  }
  return rep;
}

struct EllipticityResult {
  bool passed = false;
  bool degree_drop = false;
  bool real_root = false;
  std::vector<Cluster> roots;
  int upper = 0, lower = 0;
  std::string detail;
};

inline constexpr double kRootClusterTol = 1e-6;

/// Roots of z -> P(1, z) and the m/m half-plane split.
inline EllipticityResult check_proper_ellipticity(const HomogeneousOperator& op, int order_2m) {
  EllipticityResult res;
  if (op.order != order_2m) {
    res.detail = "operator order differs from 2m";
    return res;
  }
  Poly p(op.coeffs.begin(), op.coeffs.end());
  const int deg = poly_degree(p, 1e-14);
  if (deg < order_2m) {
    res.degree_drop = true;
    res.detail = "P(1,z) has degree " + std::to_string(deg) + " < 2m (root at infinity)";
    if (deg >= 0) p.resize(deg + 1);
  }
  if (deg < 1) {
    res.detail += "; symbol has no finite roots";
    return res;
  }
  p.resize(deg + 1);
  res.roots = cluster_roots(poly_roots(p), kRootClusterTol);
  for (auto& c : res.roots)
    if (c.multiplicity > 1) c.value = refine_multiple_root(p, c.value, c.multiplicity);
  for (const auto& c : res.roots) {
    if (std::abs(c.value.imag()) <= 1e-10 * (1.0 + std::abs(c.value))) {
      res.real_root = true;
      char buf[96];
      std::snprintf(buf, sizeof buf, "real root %.12g", c.value.real());
      res.detail += (res.detail.empty() ? "" : "; ") + std::string(buf);
    } else if (c.value.imag() > 0) {
      res.upper += c.multiplicity;
    } else {
      res.lower += c.multiplicity;
    }
  }
  const int m = order_2m / 2;
  res.passed = !res.degree_drop && !res.real_root && res.upper == m && res.lower == m;
  if (!res.passed && res.detail.empty())
    res.detail = "half-plane root counts " + std::to_string(res.upper) + "/" +
                 std::to_string(res.lower) + " differ from m/m";
  return res;
}

struct LopatinskySide {
  int component = 0;
  int side = 1;
  bool passed = false;
  int rank = 0;
  int deficiency = 0;
};

/// Complementing condition for the local parts on every side, checked for both
/// signs of the tangential frequency.
inline std::vector<LopatinskySide> check_lopatinsky(const ModelProblem& p) {
  std::vector<LopatinskySide> out;
  const int m = p.m();
  for (int j = 0; j < p.N(); ++j) {
    for (int sigma = 1; sigma <= 2; ++sigma) {
      const double th = p.side_angle(j, sigma);
      const double t1 = std::cos(th), t2 = std::sin(th);
      // inward normal: rotate the tangent towards the interior of the angle
      const double n1 = sigma == 2 ? t2 : -t2;
      const double n2 = sigma == 2 ? -t1 : t1;
      LopatinskySide res{j, sigma, true, m, 0};
      for (double xi : {1.0, -1.0}) {
        const Poly pe = p.interior_ops[j].symbol_along(xi * t1, xi * t2, n1, n2);
        Poly trimmed = pe;
        const int d = poly_degree(trimmed, 1e-14);
        trimmed.resize(std::max(d, 0) + 1);
        std::vector<cplx> plus;
        for (auto z : poly_roots(trimmed))
          if (z.imag() > 0) plus.push_back(z);
        CMatrix rem = CMatrix::Zero(m, std::max<int>(int(plus.size()), 1));
        const Poly mplus = poly_from_roots(plus);
        for (int mu = 1; mu <= m; ++mu) {
          const auto& row = p.rows[p.row_index(j, sigma, mu)];
          for (const auto& t : row.terms) {
            if (!t.is_local(j)) continue;
            Poly b = t.op.symbol_along(xi * t1, xi * t2, n1, n2);
            Poly r = plus.empty() ? Poly{} : poly_rem_monic(b, mplus);
            for (int k = 0; k < int(r.size()) && k < rem.cols(); ++k) rem(mu - 1, k) = r[k];
          }
        }
        int rank = 0;
        if (int(plus.size()) == m) {
          Eigen::JacobiSVD<CMatrix> svd(rem);
          const auto& s = svd.singularValues();
          for (int k = 0; k < s.size(); ++k)
            if (s(k) > 1e-8 * std::max(1.0, s(0))) ++rank;
        }
        if (rank < m) {
          res.passed = false;
          res.rank = std::min(res.rank, rank);
        }
      }
      res.deficiency = m - res.rank;
      out.push_back(res);
    }
  }
  return out;
}

/// Full structural validation used before any analysis.
inline ValidationReport validate(const ModelProblem& p) {
  ValidationReport rep = validate_geometry(p);
  bool elliptic = true;
  for (int j = 0; j < p.N(); ++j) {
    const auto e = check_proper_ellipticity(p.interior_ops[j], p.order_2m);
    CheckItem it{"proper ellipticity component " + std::to_string(j + 1), e.passed, e.detail, 0.0};
    rep.items.push_back(it);
    elliptic = elliptic && e.passed;
  }
  if (elliptic) {
    for (const auto& s : check_lopatinsky(p)) {
      CheckItem it;
      it.name = "Lopatinsky side (" + std::to_string(s.component + 1) + "," + std::to_string(s.side) + ")";
      it.passed = s.passed;
      it.detail = s.passed ? "" : "rank deficiency " + std::to_string(s.deficiency);
      rep.items.push_back(it);
    }
  }
  return rep;
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_MODEL_HPP
