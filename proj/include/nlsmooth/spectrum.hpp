#ifndef NLSMOOTH_SPECTRUM_HPP
#define NLSMOOTH_SPECTRUM_HPP

#include <algorithm>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "pencil.hpp"

namespace nlsmooth {

/// log f for an analytic f: log|f| + i arg f, any branch of arg.
using LogFunction = std::function<cplx(cplx)>;

struct Rect {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  cplx center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
  double diameter() const { return std::hypot(x1 - x0, y1 - y0); }
  bool contains(cplx z, double pad = 0.0) const {
    return z.real() >= x0 - pad && z.real() <= x1 + pad && z.imag() >= y0 - pad && z.imag() <= y1 + pad;
  }
};

struct WindingResult {
  bool ok = false;
  int count = 0;
  double raw = 0.0;        // (1/2 pi i) of the quadrature of f'/f, real part
  double raw_imag = 0.0;   // imaginary part, should vanish
  Rect rect;               // contour actually used (after any perturbation)
  double min_log_abs[4] = {0, 0, 0, 0};  // per edge: bottom, right, top, left
  int perturbations = 0;
};

namespace detail {

struct EdgeResult {
  bool ok = true;
  double dphase = 0.0;
  cplx quad = 0.0;
  double min_log_abs = 1e300;
};

inline cplx log_difference(cplx a, cplx b) { return {b.real() - a.real(), wrap_angle(b.imag() - a.imag())}; }

// Three-point Gauss-Legendre quadrature of (log f)' over [a, b]; derivative by central differences.
inline cplx segment_quadrature(const LogFunction& f, cplx a, cplx b) {
  static const double xg[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double wg[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const cplx half = (b - a) / 2.0, mid = (a + b) / 2.0;
  cplx s = 0.0;
  for (int k = 0; k < 3; ++k) {
    const cplx z = mid + half * xg[k];
    const double h = 1e-6 * std::max(1.0, std::abs(half));
    const cplx d = log_difference(f(z - h * half / std::abs(half)), f(z + h * half / std::abs(half)));
    s += wg[k] * d / (2.0 * h) * std::abs(half);
  }
  return s;
}

/// Adaptive phase tracking of f along a -> b.
inline EdgeResult track_edge(const LogFunction& f, cplx a, cplx b, double piece, double min_len) {
  EdgeResult res;
  const int n = std::max(1, int(std::ceil(std::abs(b - a) / piece)));
  struct Seg {
    cplx za, zb, fa, fb;
  };
  cplx prev_z = a, prev_f = f(a);
  res.min_log_abs = prev_f.real();
  for (int i = 1; i <= n; ++i) {
    const cplx z = a + (b - a) * (double(i) / n);
    const cplx fz = f(z);
    std::vector<Seg> stack{{prev_z, z, prev_f, fz}};
    while (!stack.empty()) {
      Seg s = stack.back();
      stack.pop_back();
      const cplx zm = (s.za + s.zb) / 2.0;
      const cplx fm = f(zm);
      res.min_log_abs = std::min({res.min_log_abs, fm.real(), s.fb.real()});
      const cplx d1 = log_difference(s.fa, fm), d2 = log_difference(fm, s.fb);
      const cplx d = log_difference(s.fa, s.fb);
      const bool smooth = std::abs(d1.imag()) < pi / 3 && std::abs(d2.imag()) < pi / 3 &&
                          std::abs(d.imag()) < pi / 3 && std::abs(d1.real()) < 1.0 &&
                          std::abs(d2.real()) < 1.0;
      if (smooth) {
        res.dphase += d1.imag() + d2.imag();
        res.quad += segment_quadrature(f, s.za, s.zb);
        continue;
      }
      if (std::abs(s.zb - s.za) < min_len) {
        res.ok = false;
        return res;
      }
      // push second half first so the first half is processed first
      stack.push_back({zm, s.zb, fm, s.fb});
      stack.push_back({s.za, zm, s.fa, fm});
    }
    prev_z = z;
    prev_f = fz;
  }
  return res;
}

inline WindingResult winding_once(const LogFunction& f, const Rect& r, double piece) {
  WindingResult w;
  w.rect = r;
  const double scale = std::max({1.0, std::abs(r.x0), std::abs(r.x1), std::abs(r.y0), std::abs(r.y1)});
  const double min_len = 1e-11 * scale;
  const cplx c[4] = {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
  double phase = 0.0;
  cplx quad = 0.0;
  for (int e = 0; e < 4; ++e) {
    const double len = std::abs(c[(e + 1) % 4] - c[e]);
    const double pc = std::min(piece, std::max(len / 4.0, 1e-12));
    const auto er = track_edge(f, c[e], c[(e + 1) % 4], pc, min_len);
    if (!er.ok) return w;
    phase += er.dphase;
    quad += er.quad;
    w.min_log_abs[e] = er.min_log_abs;
  }
  w.count = int(std::lround(phase / (2 * pi)));
  // integral of f'/f dz equals the quadrature of d(log f) along the edges; divide by 2 pi i
  const cplx raw = quad / (2.0 * pi * I);
  w.raw = raw.real();
  w.raw_imag = raw.imag();
  w.ok = std::abs(w.raw - w.count) <= 0.05 && std::abs(phase / (2 * pi) - w.count) < 1e-6;
  return w;
}

}  // namespace detail

/// Number of zeros of f inside the rectangle, by the argument principle.
/// If the contour passes through (or too near) a zero, the rectangle is
/// enlarged slightly and the count retried, up to 5 times.
inline WindingResult count_zeros(const LogFunction& f, Rect r, double piece = 0.05) {
  for (int attempt = 0; attempt <= 5; ++attempt) {
    for (double pc : {piece, piece / 8}) {
      auto w = detail::winding_once(f, r, pc);
      w.perturbations = attempt;
      if (w.ok) return w;
    }
    const double d = 1e-5 * (attempt + 1) * std::max(1.0, r.diameter());
    r = Rect{r.x0 - 0.37 * d, r.x1 + 0.61 * d, r.y0 - 0.53 * d, r.y1 + 0.29 * d};
  }
  WindingResult bad;
  bad.rect = r;
  return bad;
}

// ---------------------------------------------------------------------------
// Zero location.
// ---------------------------------------------------------------------------

struct ZeroEstimate {
  cplx value;
  int multiplicity = 1;
  double spread = 0.0;  // diameter of the resolved cluster
};

namespace detail {

/// Newton for f = exp(log f - ref), with multiplicity factor mu.
inline std::optional<cplx> newton_zero(const LogFunction& lf, cplx z, int mu, const Rect& box) {
  const double ref = lf(box.center()).real();
  auto F = [&](cplx x) { return std::exp(lf(x) - ref); };
  const double pad = box.diameter();
  for (int it = 0; it < 80; ++it) {
    const double h = 1e-7 * (1.0 + std::abs(z));
    const cplx fz = F(z);
    if (fz == 0.0) return z;
    const cplx d = (F(z + h) - F(z - h)) / (2.0 * h);
    if (d == 0.0 || !std::isfinite(std::abs(d))) return std::nullopt;
    const cplx step = double(mu) * fz / d;
    z -= step;
    if (!box.contains(z, pad)) return std::nullopt;
    if (std::abs(step) <= 1e-14 * (1.0 + std::abs(z))) return z;
  }
  return z;
}

/// Zeros inside a tiny cell, from the Taylor polynomial of f on an enclosing circle.
inline std::vector<cplx> local_polynomial_zeros(const LogFunction& lf, cplx c, double rho, int expected) {
  constexpr int K = 32;
  const double ref = lf(c).real();
  std::vector<cplx> vals(K);
  for (int k = 0; k < K; ++k) vals[k] = std::exp(lf(c + rho * std::polar(1.0, 2 * pi * (k + 0.5) / K)) - ref);
  const int D = std::min(K - 4, expected + 8);
  Poly p(D + 1);
  for (int q = 0; q <= D; ++q) {
    cplx s = 0.0;
    for (int k = 0; k < K; ++k) s += vals[k] * std::pow(rho * std::polar(1.0, 2 * pi * (k + 0.5) / K), -q);
    p[q] = s / double(K);
  }
  // work in the unit variable u/rho for conditioning
  for (int q = 0; q <= D; ++q) p[q] *= std::pow(rho, q);
  while (p.size() > 1 && std::abs(p.back()) < 1e-14 * std::abs(p[expected])) p.pop_back();
  auto roots = poly_roots(p);
  std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
  std::vector<cplx> out;
  for (int i = 0; i < expected && i < int(roots.size()); ++i) out.push_back(c + rho * roots[i]);
  return out;
}

struct Cell {
  Rect r;
  int count;
};

inline bool less_by_im_then_re(cplx a, cplx b) {
  const double tol = 1e-9 * (1.0 + std::max(std::abs(a), std::abs(b)));
  if (std::abs(a.imag() - b.imag()) > tol) return a.imag() < b.imag();
  return a.real() < b.real();
}

}  // namespace detail

inline constexpr double kClusterDiameter = 1e-4;

/// All zeros of f in the rectangle (multiplicity resolved), sorted by Im then Re.
/// `used` receives the top-level rectangle actually used.
inline std::vector<ZeroEstimate> find_zeros(const LogFunction& f, const Rect& rect, Rect* used = nullptr) {
  const auto top = count_zeros(f, rect);
  if (!top.ok) throw NumericalError("argument principle failed on the search rectangle");
  if (used) *used = top.rect;
  std::vector<ZeroEstimate> found;
  std::vector<detail::Cell> level{{top.rect, top.count}};
  int depth = 0;
  while (!level.empty()) {
    if (++depth > 200) throw NumericalError("zero subdivision did not terminate");
    struct CellOut {
      std::vector<ZeroEstimate> zeros;
      std::vector<detail::Cell> children;
    };
    auto outs = parallel_map<CellOut>(int(level.size()), [&](int i) {
      CellOut o;
      const auto& cell = level[i];
      if (cell.count == 0) return o;
      if (cell.count == 1) {
        if (auto z = detail::newton_zero(f, cell.r.center(), 1, cell.r); z && cell.r.contains(*z, 1e-12)) {
          o.zeros.push_back({*z, 1, 0.0});
          return o;
        }
      } else if (cell.r.diameter() < kClusterDiameter) {
        const double rho = cell.r.diameter();
        const auto zs = detail::local_polynomial_zeros(f, cell.r.center(), rho, cell.count);
        cplx mean = 0.0;
        double spread = 0.0;
        for (auto z : zs) mean += z;
        mean /= double(zs.size());
        for (auto z : zs)
          for (auto w : zs) spread = std::max(spread, std::abs(z - w));
        o.zeros.push_back({mean, cell.count, spread});
        return o;
      }
      if (cell.r.diameter() < 1e-9)
        throw NumericalError("zero subdivision reached the resolution limit");
      // split the longer side off-centre; children counts must add up
      const bool vertical = (cell.r.x1 - cell.r.x0) >= (cell.r.y1 - cell.r.y0);
      for (double ratio : {0.5123, 0.4871, 0.5377, 0.4613, 0.5631, 0.4369}) {
        Rect a = cell.r, b = cell.r;
        if (vertical) {
          const double xm = cell.r.x0 + ratio * (cell.r.x1 - cell.r.x0);
          a.x1 = xm;
          b.x0 = xm;
        } else {
          const double ym = cell.r.y0 + ratio * (cell.r.y1 - cell.r.y0);
          a.y1 = ym;
          b.y0 = ym;
        }
        const double piece = std::min(0.05, cell.r.diameter() / 8);
        const auto wa = detail::winding_once(f, a, piece);
        if (!wa.ok) continue;
        const auto wb = detail::winding_once(f, b, piece);
        if (!wb.ok || wa.count + wb.count != cell.count) continue;
        o.children = {{a, wa.count}, {b, wb.count}};
        return o;
      }
      throw NumericalError("could not split a cell without hitting a zero");
    });
    std::vector<detail::Cell> next;
    for (auto& o : outs) {
      for (auto& z : o.zeros) found.push_back(z);
      for (auto& c : o.children)
        if (c.count > 0) next.push_back(c);
    }
    level = std::move(next);
  }
  std::sort(found.begin(), found.end(),
            [](const ZeroEstimate& a, const ZeroEstimate& b) { return detail::less_by_im_then_re(a.value, b.value); });
  // deduplicate
  std::vector<ZeroEstimate> out;
  for (const auto& z : found) {
    if (!out.empty() && std::abs(out.back().value - z.value) <= 1e-9 * (1.0 + std::abs(z.value))) {
      out.back().multiplicity += z.multiplicity;
      continue;
    }
    out.push_back(z);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Eigenvalues of the pencil.
// ---------------------------------------------------------------------------

struct StripQuery {
  double c1 = -1.0, c2 = 0.0;  // Im bounds
  double R = 10.0;             // Re half-width
};

struct EigenvalueRecord {
  cplx lambda;
  int alg_mult = 1;
  int geo_mult = 1;
  std::vector<int> partial_multiplicities;
  CMatrix eigenvectors;  // canonical coordinates (initial data at omega = 0), one column each
  double residual = 0.0;
  bool cluster = false;       // multiplicity > 1 resolved from a cluster
  double cluster_spread = 0.0;
  bool confirmed = true;      // collocation matrix rank-deficient there
  double collocation_sigma = 0.0;
  bool structure_consistent = true;  // sum of partial multiplicities = alg
};

struct StripResult {
  StripQuery query;
  double R_used = 10.0;
  bool cap_ok = true;
  double cap_min_abs = 0.0;
  std::vector<std::string> warnings;
  std::vector<EigenvalueRecord> eigenvalues;
  std::vector<cplx> rejected;  // determinant zeros without collocation confirmation
};

inline constexpr double kRankTol = 1e-8;
inline constexpr double kClusterRankTol = 1e-6;
inline constexpr int kDefaultCollocation = 48;

/// Partial multiplicities from the kernel dimensions of the block Toeplitz
/// matrices built from the Taylor coefficients M_0, M_1, ...
inline std::vector<int> partial_multiplicities(const std::vector<CMatrix>& M, int alg, double tol) {
  const int n = int(M[0].rows());
  std::vector<int> dims{0};
  for (int k = 1; k <= alg; ++k) {
    CMatrix T = CMatrix::Zero(k * n, k * n);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j <= i; ++j) T.block(i * n, j * n, n, n) = M[i - j];
    dims.push_back(k * n - svd_split(T, tol).rank);
    if (dims[k] - dims[k - 1] == 0) break;
  }
  // at_least[k] = number of partial multiplicities >= k
  std::vector<int> at_least;
  for (std::size_t k = 1; k < dims.size(); ++k) at_least.push_back(dims[k] - dims[k - 1]);
  at_least.push_back(0);
  std::vector<int> out;
  for (std::size_t k = 0; k + 1 < at_least.size(); ++k)
    for (int c = 0; c < at_least[k] - at_least[k + 1]; ++c) out.push_back(int(k) + 1);
  std::sort(out.rbegin(), out.rend());
  return out;
}

/// Jordan chain x_0..x_{len-1} (canonical coordinates) of length len, if one exists.
inline std::optional<std::vector<CVector>> jordan_chain(const Pencil& pen, cplx lambda0, int len, double tol) {
  const auto M = pen.taylor(lambda0, len);
  const int n = pen.size();
  CMatrix T = CMatrix::Zero(len * n, len * n);
  for (int i = 0; i < len; ++i)
    for (int j = 0; j <= i; ++j) T.block(i * n, j * n, n, n) = M[i - j];
  const auto sp = svd_split(T, tol);
  for (int c = 0; c < sp.right_null.cols(); ++c) {
    const CVector v = sp.right_null.col(c);
    if (v.head(n).norm() > 1e-3 * v.norm()) {
      std::vector<CVector> chain;
      for (int i = 0; i < len; ++i) chain.push_back(v.segment(i * n, n) / v.head(n).norm());
      return chain;
    }
  }
  return std::nullopt;
}

namespace detail {

inline EigenvalueRecord analyse_zero(const Pencil& pen, const Collocation* col, const ZeroEstimate& z) {
  EigenvalueRecord rec;
  rec.lambda = z.value;
  rec.alg_mult = z.multiplicity;
  rec.cluster = z.multiplicity > 1;
  rec.cluster_spread = z.spread;
  const double tol = rec.cluster ? kClusterRankTol : kRankTol;
  const CMatrix M = pen.matrix(z.value);
  const auto sp = svd_split(M, tol);
  rec.geo_mult = std::max(1, int(M.cols()) - sp.rank);
  if (sp.right_null.cols() > 0) {
    rec.eigenvectors = sp.right_null;
  } else {
    rec.eigenvectors = svd_split(M, 1.0).right_null.rightCols(1);
  }
  rec.eigenvectors = rec.eigenvectors.rightCols(rec.geo_mult).eval();
  normalize_columns(rec.eigenvectors);
  rec.residual = (M * rec.eigenvectors).norm() / (std::max(1e-300, sp.singular(0)) * std::sqrt(double(rec.geo_mult)));
  if (rec.alg_mult == rec.geo_mult) {
    rec.partial_multiplicities.assign(rec.geo_mult, 1);
  } else {
    rec.partial_multiplicities = partial_multiplicities(pen.taylor(z.value, rec.alg_mult), rec.alg_mult, tol);
  }
  int sum = 0;
  for (int k : rec.partial_multiplicities) sum += k;
  rec.structure_consistent = sum == rec.alg_mult && int(rec.partial_multiplicities.size()) == rec.geo_mult;
  if (col) {
    const auto cm = col->assemble(z.value);
    rec.collocation_sigma = relative_sigma_min(cm.a);
    rec.confirmed = rec.collocation_sigma <= tol;
  }
  return rec;
}

}  // namespace detail

inline LogFunction pencil_log_det(const Pencil& pen) {
  return [&pen](cplx l) { return pen.log_det(l); };
}

/// Eigenvalues with c1 < Im < c2 and |Re| < R. The caps Re = +-R are checked
/// for small |Delta|; on failure R grows by 1.5 (up to 3 times) with a warning.
inline StripResult find_in_strip(const Pencil& pen, StripQuery q, const Collocation* col = nullptr) {
  StripResult res;
  res.query = q;
  const auto lf = pencil_log_det(pen);
  double R = q.R;
  for (int attempt = 0;; ++attempt) {
    Rect used;
    const Rect box{-R, R, q.c1, q.c2};
    const auto top = count_zeros(lf, box);
    if (!top.ok) throw NumericalError("argument principle failed on the strip contour");
    const double cap = std::min(top.min_log_abs[1], top.min_log_abs[3]);
    res.cap_min_abs = std::exp(cap);
    res.cap_ok = cap > std::log(1e-3);
    res.R_used = R;
    if (!res.cap_ok && attempt < 3) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "|Delta| small on Re = +-%.6g (min %.3e); widening", R, res.cap_min_abs);
      res.warnings.push_back(buf);
      R *= 1.5;
      continue;
    }
    if (!res.cap_ok) res.warnings.push_back("cap diagnostic still failing after widening");
    const auto zeros = find_zeros(lf, box, &used);
    auto recs = parallel_map<EigenvalueRecord>(
        int(zeros.size()), [&](int i) { return detail::analyse_zero(pen, col, zeros[i]); });
    for (auto& r : recs) {
      if (!r.confirmed) {
        res.rejected.push_back(r.lambda);
        continue;
      }
      if (r.lambda.imag() > q.c1 && r.lambda.imag() < q.c2) res.eigenvalues.push_back(std::move(r));
    }
    return res;
  }
}

inline constexpr double kLineBand = 1e-6;
inline constexpr double kLineSnap = 1e-7;

struct LineResult {
  std::vector<EigenvalueRecord> on_line;
  bool straddle = false;  // something in the thin band but not within the snap tolerance
};

inline LineResult line_eigenvalues(const Pencil& pen, double c, double R = 10.0, const Collocation* col = nullptr) {
  LineResult lr;
  const auto s = find_in_strip(pen, {c - kLineBand, c + kLineBand, R}, col);
  for (const auto& e : s.eigenvalues) {
    if (std::abs(e.lambda.imag() - c) <= kLineSnap) {
      lr.on_line.push_back(e);
      lr.on_line.back().lambda = cplx(e.lambda.real(), c);
    } else {
      lr.straddle = true;
    }
  }
  return lr;
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_SPECTRUM_HPP
