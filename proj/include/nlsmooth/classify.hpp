#ifndef NLSMOOTH_CLASSIFY_HPP
#define NLSMOOTH_CLASSIFY_HPP

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/QR>

#include "pencil.hpp"
#include "spectrum.hpp"

namespace nlsmooth {

inline constexpr double kIntegerTol = 1e-7;
inline constexpr double kPolynomialTol = 1e-7;
inline constexpr double kStraddleBand = 1e-5;
inline constexpr int kPolynomialSamples = 48;

/// Equispaced sample angles on [-w, w].
inline std::vector<double> sample_angles(double w, int n = kPolynomialSamples) {
  std::vector<double> a(n);
  for (int i = 0; i < n; ++i) a[i] = -w + 2.0 * w * i / (n - 1);
  return a;
}

/// Least-squares distance of samples from span{e^{i k w}: |k| <= s, k = s mod 2}.
/// r^s phi(w) is a homogeneous polynomial of degree s exactly when phi lies in that span.
/// Returns the absolute residual norm; `norm` receives the sample norm.
inline double fourier_polynomial_distance(const std::vector<double>& omegas, const CVector& vals, int s,
                                          double* norm = nullptr) {
  if (norm) *norm = vals.norm();
  if (s < 0) return vals.norm();
  CMatrix A(omegas.size(), s + 1);
  for (std::size_t i = 0; i < omegas.size(); ++i)
    for (int c = 0; c <= s; ++c) A(i, c) = std::exp(I * (double(2 * c - s) * omegas[i]));
  const CVector coef = A.colPivHouseholderQr().solve(vals);
  return (vals - A * coef).norm();
}

inline double fourier_polynomial_residual(const std::vector<double>& omegas, const CVector& vals, int s) {
  double n = 0.0;
  const double d = fourier_polynomial_distance(omegas, vals, s, &n);
  return n > 0.0 ? d / n : 0.0;
}

/// Relative residual of the profile with canonical coordinates x at lambda
/// against homogeneous polynomials of degree s, over all components jointly.
inline double polynomial_test(const Pencil& pen, cplx lambda, const CVector& x, int s) {
  const auto& p = pen.problem();
  double num = 0.0, den = 0.0;
  for (int k = 0; k < p.N(); ++k) {
    const auto om = sample_angles(p.half_angles[k]);
    const CMatrix prof = pen.profile(lambda, x, k, om, 0);
    double n = 0.0;
    const double d = fourier_polynomial_distance(om, prof.row(0).transpose(), s, &n);
    num += d * d;
    den += n * n;
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

struct PropernessVerdict {
  cplx lambda;
  bool proper = false;
  std::vector<std::string> reasons;
  double integer_gap = 0.0;     // distance of i lambda from the nearest nonnegative integer
  int exponent = -1;            // that integer, or -1
  double polynomial_residual = -1.0;  // worst eigenvector; -1 when not evaluated
};

/// Nearest nonnegative integer s with |i lambda - s| <= kIntegerTol, else -1.
inline int integer_exponent(cplx lambda, double* gap = nullptr) {
  const cplx il = I * lambda;
  const double s = std::max(0.0, std::round(il.real()));
  const double g = std::abs(il - s);
  if (gap) *gap = g;
  return g <= kIntegerTol ? int(s) : -1;
}

inline PropernessVerdict classify_eigenvalue(const Pencil& pen, const EigenvalueRecord& rec) {
  PropernessVerdict v;
  v.lambda = rec.lambda;
  v.exponent = integer_exponent(rec.lambda, &v.integer_gap);
  if (v.exponent < 0) v.reasons.push_back("non-integer exponent");
  if (rec.alg_mult != rec.geo_mult) v.reasons.push_back("associated vector exists");
  if (v.exponent >= 0) {
    const cplx snapped(0.0, -double(v.exponent));
    v.polynomial_residual = 0.0;
    for (int c = 0; c < rec.eigenvectors.cols(); ++c)
      v.polynomial_residual =
          std::max(v.polynomial_residual, polynomial_test(pen, snapped, rec.eigenvectors.col(c), v.exponent));
    if (v.polynomial_residual > kPolynomialTol) v.reasons.push_back("eigenfunction not polynomial");
  }
  v.proper = v.reasons.empty();
  return v;
}

struct ClassifiedEigenvalue {
  EigenvalueRecord record;
  PropernessVerdict verdict;
};

struct AnalysisOptions {
  double re_halfwidth = 10.0;
  int collocation = kDefaultCollocation;
  double strip_margin = 1e-3;
};

struct StripReport {
  int ell = 0;
  int order_2m = 2;
  double line = 0.0;  // Im lambda = 1 - 2m
  double edge = 0.0;  // Im lambda = 1 - ell
  std::vector<ClassifiedEigenvalue> lambda_set;  // strictly inside the strip
  std::vector<ClassifiedEigenvalue> on_line;
  std::vector<ClassifiedEigenvalue> on_edge;
  std::vector<cplx> straddling;
  bool no_line_eigenvalues = false, all_proper = false, single_proper_line = false, improper_present = false;
  bool undetermined = false;
  std::vector<std::string> reasons;
  std::vector<std::string> warnings;
  std::vector<cplx> rejected;
  double R_used = 0.0;
  bool cap_ok = true;
};

/// Eigenvalues near and inside 1 - 2m <= Im lambda <= 1 - ell, sorted into the
/// line, the open strip and its upper edge, and the flags derived from them.
inline StripReport strip_report(const Pencil& pen, const Collocation* col, const AnalysisOptions& opt = {}) {
  const auto& p = pen.problem();
  StripReport rep;
  rep.ell = p.ell;
  rep.order_2m = p.order_2m;
  rep.line = 1.0 - p.order_2m;
  rep.edge = 1.0 - p.ell;
  const auto s = find_in_strip(pen, {rep.line - opt.strip_margin, rep.edge + opt.strip_margin, opt.re_halfwidth}, col);
  rep.warnings = s.warnings;
  rep.rejected = s.rejected;
  rep.R_used = s.R_used;
  rep.cap_ok = s.cap_ok;
  auto verdicts = parallel_map<PropernessVerdict>(int(s.eigenvalues.size()), [&](int i) {
    auto rec = s.eigenvalues[i];
    const double y = rec.lambda.imag();
    if (std::abs(y - rep.line) <= kLineSnap) rec.lambda = cplx(rec.lambda.real(), rep.line);
    if (std::abs(y - rep.edge) <= kLineSnap) rec.lambda = cplx(rec.lambda.real(), rep.edge);
    return classify_eigenvalue(pen, rec);
  });
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    ClassifiedEigenvalue ce{s.eigenvalues[i], verdicts[i]};
    const double y = ce.record.lambda.imag();
    const double dl = std::abs(y - rep.line), de = std::abs(y - rep.edge);
    if (dl <= kLineSnap) {
      ce.record.lambda = cplx(ce.record.lambda.real(), rep.line);
      rep.on_line.push_back(ce);
    } else if (de <= kLineSnap) {
      ce.record.lambda = cplx(ce.record.lambda.real(), rep.edge);
      rep.on_edge.push_back(ce);
    } else if (dl <= kStraddleBand || de <= kStraddleBand) {
      rep.straddling.push_back(ce.record.lambda);
    } else if (y > rep.line && y < rep.edge) {
      rep.lambda_set.push_back(ce);
    }
  }
  rep.no_line_eigenvalues = rep.on_line.empty();
  rep.all_proper = true;
  for (const auto& e : rep.lambda_set) rep.all_proper = rep.all_proper && e.verdict.proper;
  rep.single_proper_line = rep.on_line.size() == 1 && std::abs(rep.on_line[0].record.lambda - cplx(0.0, rep.line)) <= kLineSnap &&
            rep.on_line[0].verdict.proper;
  rep.improper_present = false;
  for (const auto& e : rep.lambda_set) rep.improper_present = rep.improper_present || !e.verdict.proper;
  for (const auto& e : rep.on_line) rep.improper_present = rep.improper_present || !e.verdict.proper;
  if (!rep.straddling.empty()) {
    rep.undetermined = true;
    rep.reasons.push_back("eigenvalue within the straddle band of a strip edge");
  }
  if (!rep.cap_ok) {
    rep.undetermined = true;
    rep.reasons.push_back("determinant small on the truncation caps; eigenvalues may lie outside |Re| < R");
  }
  return rep;
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_CLASSIFY_HPP
