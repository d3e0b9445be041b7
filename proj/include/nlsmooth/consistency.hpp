#ifndef NLSMOOTH_CONSISTENCY_HPP
#define NLSMOOTH_CONSISTENCY_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "core.hpp"
#include "model.hpp"
#include "parallel.hpp"

namespace nlsmooth {

inline constexpr double kBetaTol = 1e-10;
inline constexpr double kG0Tol = 1e-10;
inline constexpr double kAdmissibleTol = 1e-9;
inline constexpr double kDecayExponent = 0.05;
inline constexpr double kDecadeChange = 0.01;

// ---------------------------------------------------------------------------
// Bivariate polynomials
// ---------------------------------------------------------------------------

/// sum c * y1^a1 y2^a2, keyed by (a1, a2).
struct Poly2 {
  std::map<std::pair<int, int>, cplx> c;

  static Poly2 monomial(int a1, int a2, cplx v = 1.0) {
    Poly2 p;
    p.c[{a1, a2}] = v;
    return p;
  }

  /// (y1 - s1)^a1 (y2 - s2)^a2 expanded.
  static Poly2 shifted_monomial(int a1, int a2, double s1, double s2) {
    Poly2 p;
    for (int i = 0; i <= a1; ++i)
      for (int j = 0; j <= a2; ++j)
        p.c[{i, j}] += binomial(a1, i) * std::pow(-s1, a1 - i) * binomial(a2, j) * std::pow(-s2, a2 - j);
    return p;
  }

  cplx coeff(int a1, int a2) const {
    const auto it = c.find({a1, a2});
    return it == c.end() ? cplx(0.0) : it->second;
  }

  int degree() const {
    int d = -1;
    for (const auto& [k, v] : c)
      if (v != 0.0) d = std::max(d, k.first + k.second);
    return d;
  }

  Poly2& operator+=(const Poly2& o) {
    for (const auto& [k, v] : o.c) c[k] += v;
    return *this;
  }

  Poly2 operator*(cplx s) const {
    Poly2 p = *this;
    for (auto& [k, v] : p.c) v *= s;
    return p;
  }
};

/// One polynomial per component.
using PolyVector = std::vector<Poly2>;

/// op(D) applied to a polynomial, D = -i d/dy.
inline Poly2 apply_operator(const HomogeneousOperator& op, const Poly2& w) {
  Poly2 out;
  const cplx pref = std::pow(-I, op.order);
  for (int b2 = 0; b2 <= op.order; ++b2) {
    const int b1 = op.order - b2;
    if (op.coeffs[b2] == 0.0) continue;
    for (const auto& [k, v] : w.c) {
      const auto [a1, a2] = k;
      if (a1 < b1 || a2 < b2) continue;
      out.c[{a1 - b1, a2 - b2}] += op.coeffs[b2] * pref * falling(double(a1), b1) * falling(double(a2), b2) * v;
    }
  }
  return out;
}

/// w(scale * r cos psi, scale * r sin psi) as coefficients of r^k.
inline std::vector<cplx> restrict_to_ray(const Poly2& w, double psi, double scale) {
  std::vector<cplx> out(std::max(0, w.degree() + 1), 0.0);
  const double c = std::cos(psi), s = std::sin(psi);
  for (const auto& [k, v] : w.c) {
    const auto [a1, a2] = k;
    if (a1 + a2 >= int(out.size())) continue;
    out[a1 + a2] += v * std::pow(scale, a1 + a2) * std::pow(c, a1) * std::pow(s, a2);
  }
  return out;
}

/// Trace of a boundary row applied to W, as a polynomial in r along the side.
inline std::vector<cplx> row_trace(const ModelProblem& p, const BoundaryRow& row, const PolyVector& W) {
  std::vector<cplx> out;
  for (const auto& t : row.terms) {
    const auto tr = restrict_to_ray(apply_operator(t.op, W[t.target]), p.shifted_angle(row, t), t.homothety);
    if (tr.size() > out.size()) out.resize(tr.size(), 0.0);
    for (std::size_t k = 0; k < tr.size(); ++k) out[k] += tr[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Differentiated system and its dependent rows
// ---------------------------------------------------------------------------

/// Row i holds the order 2m-1 operator obtained by differentiating row i
/// n_i = 2m - m_i - 1 times along its side and replacing every shifted
/// evaluation by a local one. Column k*2m + a is the coefficient of
/// d1^{2m-1-a} d2^a acting on component k (plain partial derivatives).
struct HatSystem {
  int order_2m = 2;
  int N = 1;
  std::vector<int> derivs;
  CMatrix rows;
};

inline HatSystem build_hat_system(const ModelProblem& p) {
  HatSystem h;
  h.order_2m = p.order_2m;
  h.N = p.N();
  const int w = p.order_2m;
  h.rows = CMatrix::Zero(p.row_count(), w * h.N);
  for (int i = 0; i < p.row_count(); ++i) {
    const auto& row = p.rows[i];
    const int n = w - row.order - 1;
    h.derivs.push_back(n);
    for (const auto& t : row.terms) {
      const double psi = p.shifted_angle(row, t);
      const double d1 = std::cos(psi), d2 = std::sin(psi);
      const cplx pref = std::pow(t.homothety, n) * std::pow(-I, row.order);
      for (int a = 0; a <= n; ++a) {
        const double dir = binomial(n, a) * std::pow(d1, n - a) * std::pow(d2, a);
        for (int b = 0; b <= row.order; ++b) h.rows(i, t.target * w + a + b) += pref * dir * t.op.coeffs[b];
      }
    }
  }
  return h;
}

struct BetaDecomposition {
  int rank = 0;
  std::vector<int> independent;
  std::vector<int> dependent;
  CMatrix beta;                  // dependent x independent
  std::vector<double> residual;  // reconstruction residual per dependent row
};

/// Walks the rows in order and keeps each one that is not in the span of the
/// rows kept so far; every other row is expressed through the kept ones.
inline BetaDecomposition beta_decompose(const HatSystem& h) {
  BetaDecomposition b;
  const int n = int(h.rows.rows());
  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, h.rows.row(i).norm());
  std::vector<CVector> coeffs(n);
  for (int i = 0; i < n; ++i) {
    const CVector v = h.rows.row(i).transpose();
    if (b.independent.empty()) {
      if (v.norm() > kBetaTol * scale) {
        b.independent.push_back(i);
      } else {
        b.dependent.push_back(i);
      }
      continue;
    }
    CMatrix S(v.size(), b.independent.size());
    for (std::size_t k = 0; k < b.independent.size(); ++k) S.col(k) = h.rows.row(b.independent[k]).transpose();
    const CVector beta = S.colPivHouseholderQr().solve(v);
    const double res = (S * beta - v).norm();
    if (res > kBetaTol * scale) {
      b.independent.push_back(i);
    } else {
      b.dependent.push_back(i);
      coeffs[i] = beta;
    }
  }
  b.rank = int(b.independent.size());
  b.beta = CMatrix::Zero(b.dependent.size(), b.rank);
  for (std::size_t d = 0; d < b.dependent.size(); ++d) {
    const int i = b.dependent[d];
    for (int k = 0; k < coeffs[i].size(); ++k) b.beta(d, k) = coeffs[i](k);
    CVector rec = CVector::Zero(h.rows.cols());
    for (int k = 0; k < b.rank; ++k) rec += b.beta(d, k) * h.rows.row(b.independent[k]).transpose();
    b.residual.push_back((h.rows.row(i).transpose() - rec).norm());
  }
  return b;
}

// ---------------------------------------------------------------------------
// Boundary traces and the consistency functional
// ---------------------------------------------------------------------------

/// Trace of boundary data along a side: polynomial coefficients in r, or
/// samples on an increasing grid of radii (log-spaced in practice).
struct BoundaryTrace {
  std::vector<cplx> poly;
  std::vector<double> r;
  std::vector<cplx> values;

  static BoundaryTrace polynomial(std::vector<cplx> c) {
    BoundaryTrace t;
    t.poly = std::move(c);
    return t;
  }
  static BoundaryTrace sampled(std::vector<double> r, std::vector<cplx> v) {
    if (r.size() != v.size()) throw InputError("trace grid and values differ in length");
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!(r[i] > 0.0) || (i && !(r[i] > r[i - 1]))) throw InputError("trace radii must be positive and increasing");
      if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag())) throw InputError("trace sample is not finite");
    }
    BoundaryTrace t;
    t.r = std::move(r);
    t.values = std::move(v);
    return t;
  }
  bool is_sampled() const { return !r.empty(); }

  /// n-th derivative of the polynomial form at r.
  cplx poly_derivative(int n, double x) const {
    cplx s = 0.0;
    for (int k = int(poly.size()) - 1; k >= n; --k) s = s * x + poly[k] * falling(double(k), n);
    return s;
  }
};

/// Fornberg's finite-difference weights: w[k][j] for the k-th derivative at z
/// from values at x[j].
inline std::vector<std::vector<double>> fd_weights(double z, const std::vector<double>& x, int m) {
  const int n = int(x.size());
  std::vector<std::vector<double>> c(m + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

/// n-th derivative of sampled data at every grid point.
inline std::vector<cplx> sampled_derivative(const std::vector<double>& r, const std::vector<cplx>& v, int n) {
  const int width = n + 5;
  if (int(r.size()) < width) throw InputError("too few trace samples for the derivative order");
  std::vector<cplx> d(r.size());
  for (int i = 0; i < int(r.size()); ++i) {
    const int lo = std::clamp(i - width / 2, 0, int(r.size()) - width);
    const std::vector<double> x(r.begin() + lo, r.begin() + lo + width);
    const auto w = fd_weights(r[i], x, n);
    cplx s = 0.0;
    for (int j = 0; j < width; ++j) s += w[n][j] * v[lo + j];
    d[i] = s;
  }
  return d;
}

enum class Consistency { Consistent, Inconsistent, Inconclusive };

inline const char* to_string(Consistency c) {
  switch (c) {
    case Consistency::Consistent: return "consistent";
    case Consistency::Inconsistent: return "inconsistent";
    default: return "inconclusive";
  }
}

struct ConsistencyResult {
  int row = 0;                                // the dependent row
  std::vector<std::pair<int, cplx>> weights;  // g = sum w * d^{n_i} Z_i / dr^{n_i}
  bool exact = false;
  cplx g0 = 0.0;  // exact g(0) for polynomial data
  double r_min = 0.0, r_max = 0.0;
  double fitted_exponent = 0.0;
  double last_decade_change = 0.0;  // share of the log-integral of |g|^2 from the last decade
  double integral = 0.0;
  Consistency verdict = Consistency::Inconclusive;
  std::string note;
};

struct ConsistencyReport {
  std::vector<ConsistencyResult> rows;
  Consistency verdict = Consistency::Consistent;
};

namespace detail {

inline void sampled_verdict(ConsistencyResult& res, const std::vector<double>& r, const std::vector<cplx>& g,
                            double scale) {
  res.r_min = r.front();
  res.r_max = r.back();
  double gmax = 0.0;
  for (auto v : g) gmax = std::max(gmax, std::abs(v));
  if (gmax <= 1e-12 * std::max(1.0, scale)) {
    res.verdict = Consistency::Consistent;
    res.note = "g vanishes on the grid";
    return;
  }
  const double top = 10.0 * r.front();
  int in_decade = 0;
  for (double x : r) in_decade += x <= top * (1 + 1e-12);
  if (r.back() < 100.0 * r.front() || in_decade < 8) {
    res.note = "grid too coarse near 0 (need two decades and 8 points in the last one)";
    return;
  }
  // slope of ln|g| against ln r over the last decade
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (std::size_t i = 0; i < r.size() && r[i] <= top * (1 + 1e-12); ++i) {
    if (std::abs(g[i]) == 0.0) continue;
    const double x = std::log(r[i]), y = std::log(std::abs(g[i]));
    sx += x, sy += y, sxx += x * x, sxy += x * y, ++cnt;
  }
  res.fitted_exponent = cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : 0.0;
  double total = 0.0, last = 0.0;
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    const double piece = 0.5 * (std::norm(g[i]) + std::norm(g[i + 1])) * std::log(r[i + 1] / r[i]);
    total += piece;
    if (r[i + 1] <= top * (1 + 1e-12)) last += piece;
  }
  res.integral = total;
  res.last_decade_change = total > 0.0 ? last / total : 0.0;
  const bool decays = res.fitted_exponent >= kDecayExponent;
  const bool settled = res.last_decade_change < kDecadeChange;
  if (decays && settled) {
    res.verdict = Consistency::Consistent;
  } else if (!decays && !settled) {
    res.verdict = Consistency::Inconsistent;
  } else {
    res.note = decays ? "g decays but the integral has not settled on the grid" : "integral settled without decay of g";
  }
}

}  // namespace detail

/// Evaluates g for every dependent row. Polynomial data use the exact rule
/// g(0) = 0; sampled data use finite differences on the shared grid.
inline ConsistencyReport consistency_check(const HatSystem& h, const BetaDecomposition& b,
                                           const std::vector<BoundaryTrace>& traces) {
  if (int(traces.size()) != int(h.rows.rows())) throw InputError("one trace per boundary row is required");
  ConsistencyReport rep;
  for (std::size_t d = 0; d < b.dependent.size(); ++d) {
    ConsistencyResult res;
    res.row = b.dependent[d];
    res.weights.push_back({res.row, 1.0});
    for (int k = 0; k < b.rank; ++k)
      if (b.beta(d, k) != 0.0) res.weights.push_back({b.independent[k], -b.beta(d, k)});
    const std::vector<double>* grid = nullptr;
    for (const auto& [i, w] : res.weights) {
      if (!traces[i].is_sampled()) continue;
      if (grid && *grid != traces[i].r) throw InputError("sampled traces in one combination must share a grid");
      grid = &traces[i].r;
    }
    if (!grid) {
      res.exact = true;
      double scale = 0.0;
      for (const auto& [i, w] : res.weights) {
        const cplx t = w * traces[i].poly_derivative(h.derivs[i], 0.0);
        res.g0 += t;
        scale += std::abs(t);
      }
      res.verdict = std::abs(res.g0) <= kG0Tol * std::max(1.0, scale) ? Consistency::Consistent
                                                                       : Consistency::Inconsistent;
    } else {
      std::vector<cplx> g(grid->size(), 0.0);
      double scale = 0.0;
      for (const auto& [i, w] : res.weights) {
        const auto& t = traces[i];
        std::vector<cplx> der;
        if (t.is_sampled()) {
          der = sampled_derivative(t.r, t.values, h.derivs[i]);
        } else {
          for (double x : *grid) der.push_back(t.poly_derivative(h.derivs[i], x));
        }
        for (std::size_t k = 0; k < g.size(); ++k) {
          g[k] += w * der[k];
          scale = std::max(scale, std::abs(w * der[k]));
        }
      }
      detail::sampled_verdict(res, *grid, g, scale);
    }
    if (res.verdict == Consistency::Inconsistent) {
      rep.verdict = Consistency::Inconsistent;
    } else if (res.verdict == Consistency::Inconclusive && rep.verdict == Consistency::Consistent) {
      rep.verdict = Consistency::Inconclusive;
    }
    rep.rows.push_back(res);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Polynomial vectors of degree 2m-2
// ---------------------------------------------------------------------------

struct MonomialIndex {
  int component = 0;
  int a1 = 0, a2 = 0;
};

/// Basis of polynomial vectors of degree <= 2m-2, ordered by component, degree, a2.
inline std::vector<MonomialIndex> low_degree_basis(const ModelProblem& p) {
  std::vector<MonomialIndex> out;
  for (int k = 0; k < p.N(); ++k)
    for (int d = 0; d <= p.order_2m - 2; ++d)
      for (int a2 = 0; a2 <= d; ++a2) out.push_back({k, d - a2, a2});
  return out;
}

inline std::vector<BoundaryTrace> traces_of(const ModelProblem& p, const PolyVector& W) {
  std::vector<BoundaryTrace> t;
  for (const auto& row : p.rows) t.push_back(BoundaryTrace::polynomial(row_trace(p, row, W)));
  return t;
}

struct PolynomialPartResult {
  bool pass = true;
  double max_g0 = 0.0;
  MonomialIndex witness;  // meaningful when !pass
  int witness_row = -1;
};

/// Exact check that the consistency functional vanishes on every polynomial
/// vector of degree <= 2m-2. Monomials are taken around `shift`.
inline PolynomialPartResult check_polynomial_part(const ModelProblem& p, const HatSystem& h,
                                                       const BetaDecomposition& b, double shift1 = 0.0,
                                                       double shift2 = 0.0) {
  PolynomialPartResult res;
  for (const auto& mi : low_degree_basis(p)) {
    PolyVector W(p.N());
    W[mi.component] = Poly2::shifted_monomial(mi.a1, mi.a2, shift1, shift2);
    const auto rep = consistency_check(h, b, traces_of(p, W));
    for (const auto& r : rep.rows) {
      if (std::abs(r.g0) > res.max_g0) {
        res.max_g0 = std::abs(r.g0);
        res.witness = mi;
        res.witness_row = r.row;
      }
    }
  }
  res.pass = res.max_g0 <= kG0Tol;
  return res;
}

struct AdmissibleResult {
  bool admissible = false;
  double residual = 0.0;
  PolyVector W;                        // particular solution
  std::vector<PolyVector> directions;  // homogeneous solutions; W + span(directions) is the full set
};

/// Finds W of degree <= 2m-2 with d^b/dr^b (Z_i + B_i W)(0) = 0 for b <= 2m - m_i - 2.
inline AdmissibleResult admissible_solve(const ModelProblem& p, const std::vector<BoundaryTrace>& v) {
  if (int(v.size()) != p.row_count()) throw InputError("one trace per boundary row is required");
  for (const auto& t : v)
    if (t.is_sampled()) throw InputError("admissibility needs derivatives at 0; give the traces as polynomials");
  const auto basis = low_degree_basis(p);
  std::vector<std::pair<int, int>> conds;  // (row, power of r)
  for (int i = 0; i < p.row_count(); ++i)
    for (int b = 0; b <= p.order_2m - p.rows[i].order - 2; ++b) conds.push_back({i, b});
  CMatrix A = CMatrix::Zero(conds.size(), basis.size());
  CVector rhs(conds.size());
  auto coef = [](const std::vector<cplx>& c, int k) { return k < int(c.size()) ? c[k] : cplx(0.0); };
  for (std::size_t c = 0; c < basis.size(); ++c) {
    PolyVector W(p.N());
    W[basis[c].component] = Poly2::monomial(basis[c].a1, basis[c].a2);
    std::vector<std::vector<cplx>> tr;
    for (const auto& row : p.rows) tr.push_back(row_trace(p, row, W));
    for (std::size_t q = 0; q < conds.size(); ++q) A(q, c) = coef(tr[conds[q].first], conds[q].second);
  }
  for (std::size_t q = 0; q < conds.size(); ++q) rhs(q) = -coef(v[conds[q].first].poly, conds[q].second);
  AdmissibleResult res;
  CVector x = CVector::Zero(basis.size());
  CMatrix null;
  if (conds.empty()) {
    null = CMatrix::Identity(basis.size(), basis.size());
  } else {
    Eigen::JacobiSVD<CMatrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < s.size(); ++i) rank += s(i) > 1e-10 * std::max(1.0, s(0));
    const CVector t = svd.matrixU().leftCols(rank).adjoint() * rhs;
    for (int i = 0; i < rank; ++i) x += svd.matrixV().col(i) * (t(i) / s(i));
    null = svd.matrixV().rightCols(basis.size() - rank);
    res.residual = (A * x - rhs).norm() / std::max(1.0, rhs.norm());
  }
  res.admissible = res.residual <= kAdmissibleTol;
  auto to_vector = [&](const CVector& coefs) {
    PolyVector W(p.N());
    for (std::size_t c = 0; c < basis.size(); ++c)
      if (std::abs(coefs(c)) > 0.0) W[basis[c].component] += Poly2::monomial(basis[c].a1, basis[c].a2, coefs(c));
    return W;
  };
  res.W = to_vector(x);
  for (int k = 0; k < null.cols(); ++k) res.directions.push_back(to_vector(null.col(k)));
  return res;
}

inline std::vector<BoundaryTrace> add_traces(const std::vector<BoundaryTrace>& a, const std::vector<BoundaryTrace>& b) {
  std::vector<BoundaryTrace> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto c = a[i].poly;
    if (b[i].poly.size() > c.size()) c.resize(b[i].poly.size(), 0.0);
    for (std::size_t k = 0; k < b[i].poly.size(); ++k) c[k] += b[i].poly[k];
    out.push_back(BoundaryTrace::polynomial(c));
  }
  return out;
}

struct ProbeResult {
  bool admissible = false;
  double admissible_residual = 0.0;
  Consistency verdict = Consistency::Inconclusive;
  ConsistencyReport report;  // for the particular W
  int witness_direction = -1;  // -1: particular solution; k: W + directions[k]
};

struct ProbeReport {
  bool pass = true;  // over the probes given, never universal
  std::vector<ProbeResult> probes;
};

/// Runs the consistency functional on Z = v + B W for every probe v and for
/// the particular admissible W as well as W shifted along each homogeneous direction.
inline ProbeReport check_probes(const ModelProblem& p, const HatSystem& h, const BetaDecomposition& b,
                                            const std::vector<std::vector<BoundaryTrace>>& probes) {
  ProbeReport out;
  out.probes = parallel_map<ProbeResult>(int(probes.size()), [&](int i) {
    ProbeResult pr;
    const auto adm = admissible_solve(p, probes[i]);
    pr.admissible = adm.admissible;
    pr.admissible_residual = adm.residual;
    if (!adm.admissible) return pr;
    pr.report = consistency_check(h, b, add_traces(probes[i], traces_of(p, adm.W)));
    pr.verdict = pr.report.verdict;
    for (int k = 0; k < int(adm.directions.size()) && pr.verdict == Consistency::Consistent; ++k) {
      PolyVector W = adm.W;
      for (int c = 0; c < p.N(); ++c) W[c] += adm.directions[k][c];
      const auto rep = consistency_check(h, b, add_traces(probes[i], traces_of(p, W)));
      if (rep.verdict != Consistency::Consistent) {
        pr.verdict = rep.verdict;
        pr.witness_direction = k;
      }
    }
    return pr;
  });
  for (const auto& pr : out.probes) out.pass = out.pass && (!pr.admissible || pr.verdict == Consistency::Consistent);
  return out;
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_CONSISTENCY_HPP
