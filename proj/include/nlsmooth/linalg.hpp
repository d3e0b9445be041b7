#ifndef NLSMOOTH_LINALG_HPP
#define NLSMOOTH_LINALG_HPP

#include <algorithm>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "core.hpp"

namespace nlsmooth {

// ---------------------------------------------------------------------------
// Truncated Taylor series in one complex variable, coefficients c[0..n-1].
// ---------------------------------------------------------------------------
using Series = std::vector<cplx>;

inline Series series_mul(const Series& a, const Series& b) {
  const std::size_t n = std::min(a.size(), b.size());
  Series c(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; i + j < n; ++j) c[i + j] += a[i] * b[j];
  return c;
}

/// exp of a series whose constant term is zero.
inline Series series_exp0(const Series& a) {
  const std::size_t n = a.size();
  Series e(n, 0.0);
  e[0] = 1.0;
  // e' = a' e  =>  k e_k = sum_{j=1}^{k} j a_j e_{k-j}
  for (std::size_t k = 1; k < n; ++k) {
    cplx s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += double(j) * a[j] * e[k - j];
    e[k] = s / double(k);
  }
  return e;
}

/// log(a / a[0]) for a series with nonzero constant term.
inline Series series_log_ratio(const Series& a) {
  const std::size_t n = a.size();
  Series l(n, 0.0);
  // a l' = a'  =>  k a0 l_k = k a_k - sum_{j=1}^{k-1} j l_j a_{k-j}
  for (std::size_t k = 1; k < n; ++k) {
    cplx s = double(k) * a[k];
    for (std::size_t j = 1; j < k; ++j) s -= double(j) * l[j] * a[k - j];
    l[k] = s / (double(k) * a[0]);
  }
  return l;
}

inline Series series_pow_int(const Series& a, int p) {
  Series r(a.size(), 0.0);
  r[0] = 1.0;
  for (int k = 0; k < p; ++k) r = series_mul(r, a);
  return r;
}

// ---------------------------------------------------------------------------
// Dense complex polynomials, coefficient index = power.
// ---------------------------------------------------------------------------
using Poly = std::vector<cplx>;

inline cplx poly_eval(const Poly& p, cplx z) {
  cplx v = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * z + *it;
  return v;
}

inline Poly poly_mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly c(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

inline Poly poly_add(const Poly& a, const Poly& b) {
  Poly c(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) c[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) c[i] += b[i];
  return c;
}

inline Poly poly_derivative(const Poly& p) {
  if (p.size() <= 1) return {0.0};
  Poly d(p.size() - 1);
  for (std::size_t i = 1; i < p.size(); ++i) d[i - 1] = double(i) * p[i];
  return d;
}

/// Degree after discarding coefficients below tol * max|coeff|; -1 for zero.
inline int poly_degree(const Poly& p, double tol = 0.0) {
  double mx = 0.0;
  for (auto c : p) mx = std::max(mx, std::abs(c));
  for (int k = int(p.size()) - 1; k >= 0; --k)
    if (std::abs(p[k]) > tol * mx && std::abs(p[k]) > 0.0) return k;
  return -1;
}

/// Remainder of a modulo a monic polynomial b (deg b >= 1).
inline Poly poly_rem_monic(Poly a, const Poly& b) {
  const int db = int(b.size()) - 1;
  for (int k = int(a.size()) - 1; k >= db; --k) {
    const cplx lead = a[k];
    if (lead == 0.0) continue;
    for (int i = 0; i <= db; ++i) a[k - db + i] -= lead * b[i];
  }
  a.resize(std::max(db, 0), 0.0);
  return a;
}

inline Poly poly_from_roots(const std::vector<cplx>& roots) {
  Poly p{1.0};
  for (auto r : roots) p = poly_mul(p, Poly{-r, 1.0});
  return p;
}

/// Roots by companion-matrix eigenvalues. Leading coefficient must be nonzero.
inline std::vector<cplx> poly_roots(const Poly& p) {
  const int d = int(p.size()) - 1;
  if (d < 1) return {};
  CMatrix comp = CMatrix::Zero(d, d);
  for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < d; ++i) comp(i, d - 1) = -p[i] / p[d];
  Eigen::ComplexEigenSolver<CMatrix> es(comp, false);
  std::vector<cplx> r(es.eigenvalues().data(), es.eigenvalues().data() + d);
  // One Newton polish per root on the original polynomial.
  const Poly dp = poly_derivative(p);
  for (auto& z : r) {
    const cplx f = poly_eval(p, z), fp = poly_eval(dp, z);
    if (std::abs(fp) > 1e-8 * (1.0 + std::abs(f))) {
      const cplx zn = z - f / fp;
      if (std::abs(poly_eval(p, zn)) < std::abs(f)) z = zn;
    }
  }
  return r;
}

struct Cluster {
  cplx value;
  int multiplicity = 1;
};

/// Groups roots closer than tol*(1+|z|); cluster centre is the member mean.
inline std::vector<Cluster> cluster_roots(std::vector<cplx> roots, double tol) {
  std::vector<Cluster> out;
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    cplx sum = roots[i];
    int cnt = 1;
    used[i] = true;
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (!used[j] && std::abs(roots[j] - roots[i]) <= tol * (1.0 + std::abs(roots[i]))) {
        used[j] = true;
        sum += roots[j];
        ++cnt;
      }
    }
    out.push_back({sum / double(cnt), cnt});
  }
  std::sort(out.begin(), out.end(), [tol](const Cluster& a, const Cluster& b) {
    const double scale = tol * (1.0 + std::max(std::abs(a.value), std::abs(b.value)));
    if (std::abs(a.value.real() - b.value.real()) > scale) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
  return out;
}

/// Newton on the (multiplicity-1)-th derivative, where a cluster centre is a simple root.
inline cplx refine_multiple_root(const Poly& p, cplx z, int multiplicity) {
  Poly d = p;
  for (int k = 1; k < multiplicity; ++k) d = poly_derivative(d);
  const Poly dd = poly_derivative(d);
  for (int it = 0; it < 8; ++it) {
    const cplx f = poly_eval(d, z), fp = poly_eval(dd, z);
    if (fp == 0.0) break;
    const cplx step = f / fp;
    z -= step;
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(z))) break;
  }
  return z;
}

// ---------------------------------------------------------------------------
// SVD helpers.
// ---------------------------------------------------------------------------
struct SvdSplit {
  Eigen::VectorXd singular;
  CMatrix right_null;  // columns span the numerical right kernel
  CMatrix left_null;   // columns span the numerical left kernel
  int rank = 0;
};

/// Rank decision sigma_k <= rel_tol * sigma_max. Square or rectangular input.
inline SvdSplit svd_split(const CMatrix& a, double rel_tol) {
  Eigen::BDCSVD<CMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SvdSplit s;
  s.singular = svd.singularValues();
  const double smax = s.singular.size() ? s.singular(0) : 0.0;
  int rank = 0;
  for (int k = 0; k < s.singular.size(); ++k)
    if (s.singular(k) > rel_tol * smax) ++rank;
  s.rank = rank;
  s.right_null = svd.matrixV().rightCols(a.cols() - rank);
  s.left_null = svd.matrixU().rightCols(a.rows() - rank);
  return s;
}

/// Forces a deterministic phase on each column: largest-modulus entry real positive.
inline void normalize_columns(CMatrix& m) {
  for (int c = 0; c < m.cols(); ++c) {
    Eigen::Index idx = 0;
    m.col(c).cwiseAbs().maxCoeff(&idx);
    const cplx piv = m(idx, c);
    if (std::abs(piv) > 0.0) m.col(c) *= std::conj(piv) / std::abs(piv);
    const double n = m.col(c).norm();
    if (n > 0.0) m.col(c) /= n;
  }
}

/// log det with row equilibration; returns log|det| + i arg(det).
inline cplx log_det(CMatrix a) {
  double log_scale = 0.0;
  for (int r = 0; r < a.rows(); ++r) {
    const double mx = a.row(r).cwiseAbs().maxCoeff();
    if (mx > 0.0) {
      a.row(r) /= mx;
      log_scale += std::log(mx);
    } else {
      return cplx(-std::numeric_limits<double>::infinity(), 0.0);
    }
  }
  Eigen::PartialPivLU<CMatrix> lu(a);
  const CMatrix& m = lu.matrixLU();
  double la = log_scale, arg = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    const cplx d = m(i, i);
    if (d == 0.0) return cplx(-std::numeric_limits<double>::infinity(), 0.0);
    la += std::log(std::abs(d));
    arg += std::arg(d);
  }
  // permutation sign
  const auto& perm = lu.permutationP().indices();
  std::vector<int> p(perm.data(), perm.data() + perm.size());
  int sign = 1;
  for (int i = 0; i < int(p.size()); ++i) {
    while (p[i] != i) {
      std::swap(p[i], p[p[i]]);
      sign = -sign;
    }
  }
  if (sign < 0) arg += pi;
  return cplx(la, wrap_angle(arg));
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_LINALG_HPP
