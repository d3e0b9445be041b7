#ifndef NLSMOOTH_POLAR_HPP
#define NLSMOOTH_POLAR_HPP

#include <map>
#include <vector>

#include "core.hpp"
#include "linalg.hpp"
#include "model.hpp"

namespace nlsmooth {

/// sum_{kappa,p} c[kappa,p] e^{i kappa omega} lambda^p, stored densely for
/// |kappa| <= bound and 0 <= p <= bound.
class TrigLambdaPoly {
 public:
  explicit TrigLambdaPoly(int bound = 0) : bound_(bound), c_(2 * bound + 1, bound + 1) {
    c_.setZero();
  }

  int bound() const { return bound_; }

  cplx& at(int kappa, int p) { return c_(kappa + bound_, p); }
  cplx at(int kappa, int p) const {
    if (std::abs(kappa) > bound_ || p < 0 || p > bound_) return 0.0;
    return c_(kappa + bound_, p);
  }

  TrigLambdaPoly widened(int b) const {
    TrigLambdaPoly r(std::max(b, bound_));
    for (int k = -bound_; k <= bound_; ++k)
      for (int p = 0; p <= bound_; ++p) r.at(k, p) = at(k, p);
    return r;
  }

  void add(const TrigLambdaPoly& o, cplx s = 1.0) {
    for (int k = -o.bound_; k <= o.bound_; ++k)
      for (int p = 0; p <= o.bound_; ++p)
        if (o.at(k, p) != 0.0) at(k, p) += s * o.at(k, p);
  }

  /// multiply by cos(omega) (which = 0) or sin(omega) (which = 1); needs bound headroom
  TrigLambdaPoly times_trig(bool sine) const {
    TrigLambdaPoly r(bound_);
    const cplx up = sine ? cplx(0.0, -0.5) : cplx(0.5, 0.0);    // coefficient of e^{+i w}
    const cplx down = sine ? cplx(0.0, 0.5) : cplx(0.5, 0.0);   // coefficient of e^{-i w}
    for (int k = -bound_; k <= bound_; ++k)
      for (int p = 0; p <= bound_; ++p) {
        const cplx v = at(k, p);
        if (v == 0.0) continue;
        r.at(k + 1, p) += up * v;
        r.at(k - 1, p) += down * v;
      }
    return r;
  }

  /// multiply by (i lambda - q)
  TrigLambdaPoly times_shift(double q) const {
    TrigLambdaPoly r(bound_);
    for (int k = -bound_; k <= bound_; ++k)
      for (int p = 0; p <= bound_; ++p) {
        const cplx v = at(k, p);
        if (v == 0.0) continue;
        r.at(k, p + 1) += I * v;
        r.at(k, p) += -q * v;
      }
    return r;
  }

  TrigLambdaPoly d_omega() const {
    TrigLambdaPoly r(bound_);
    for (int k = -bound_; k <= bound_; ++k)
      for (int p = 0; p <= bound_; ++p) r.at(k, p) = I * double(k) * at(k, p);
    return r;
  }

  /// Coefficients in lambda at a fixed angle: result[p] multiplies lambda^p.
  std::vector<cplx> lambda_poly(double omega) const {
    std::vector<cplx> r(bound_ + 1, 0.0);
    for (int k = -bound_; k <= bound_; ++k) {
      const cplx e = std::polar(1.0, k * omega);
      for (int p = 0; p <= bound_; ++p)
        if (at(k, p) != 0.0) r[p] += at(k, p) * e;
    }
    return r;
  }

  cplx eval(double omega, cplx lambda) const { return poly_eval(lambda_poly(omega), lambda); }

  /// Largest |kappa| and p that actually carry a nonzero coefficient.
  std::pair<int, int> support() const {
    int km = 0, pm = 0;
    for (int k = -bound_; k <= bound_; ++k)
      for (int p = 0; p <= bound_; ++p)
        if (at(k, p) != 0.0) {
          km = std::max(km, std::abs(k));
          pm = std::max(pm, p);
        }
    return {km, pm};
  }

 private:
  int bound_;
  CMatrix c_;
};

/// phi -> sum_n a_n(omega, lambda) phi^{(n)}(omega); the Cartesian operator of
/// order k applied to r^{i lambda} phi(omega) equals r^{i lambda - k} times this.
struct PolarOperator {
  int order = 0;
  std::vector<TrigLambdaPoly> a;  // size order+1

  /// a_n(omega, lambda) for n = 0..order
  std::vector<cplx> eval(double omega, cplx lambda) const {
    std::vector<cplx> v(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) v[n] = a[n].eval(omega, lambda);
    return v;
  }

  /// Coefficient tables [n][p] in powers of lambda at fixed omega.
  std::vector<std::vector<cplx>> lambda_polys(double omega) const {
    std::vector<std::vector<cplx>> r;
    r.reserve(a.size());
    for (const auto& t : a) r.push_back(t.lambda_poly(omega));
    return r;
  }
};

namespace detail {

// D1 = -i(cos w d_r - sin w r^{-1} d_w), D2 = -i(sin w d_r + cos w r^{-1} d_w)
// acting on r^{i lambda - q} T(w, lambda) phi^{(n)}(w).
inline std::vector<TrigLambdaPoly> apply_d(const std::vector<TrigLambdaPoly>& a, int q, bool second,
                                           int bound) {
  std::vector<TrigLambdaPoly> out(a.size() + 1, TrigLambdaPoly(bound));
  for (std::size_t n = 0; n < a.size(); ++n) {
    const TrigLambdaPoly& t = a[n];
    const TrigLambdaPoly radial = t.times_shift(q).times_trig(second);
    TrigLambdaPoly ang = t.d_omega().times_trig(!second);
    TrigLambdaPoly lift = t.times_trig(!second);
    const double sgn = second ? 1.0 : -1.0;
    out[n].add(radial, -I);
    out[n].add(ang, -I * sgn);
    out[n + 1].add(lift, -I * sgn);
  }
  return out;
}

inline PolarOperator polar_monomial(int a1, int a2) {
  const int k = a1 + a2;
  const int bound = std::max(k, 1);
  std::vector<TrigLambdaPoly> a(1, TrigLambdaPoly(bound));
  a[0].at(0, 0) = 1.0;
  int q = 0;
  for (int s = 0; s < a2; ++s) a = apply_d(a, q++, true, bound);
  for (int s = 0; s < a1; ++s) a = apply_d(a, q++, false, bound);
  return {k, a};
}

}  // namespace detail

/// Polar form of a homogeneous Cartesian operator.
inline PolarOperator to_polar(const HomogeneousOperator& op) {
  const int k = op.order;
  PolarOperator res{k, std::vector<TrigLambdaPoly>(k + 1, TrigLambdaPoly(std::max(k, 1)))};
  for (int a2 = 0; a2 <= k; ++a2) {
    if (op.coeffs[a2] == 0.0) continue;
    const PolarOperator mono = detail::polar_monomial(k - a2, a2);
    for (int n = 0; n <= k; ++n) res.a[n].add(mono.a[n], op.coeffs[a2]);
  }
  return res;
}

/// Trigonometric polynomial sum_kappa c_kappa e^{i kappa omega}.
struct TrigPoly {
  std::map<int, cplx> c;

  cplx derivative(double omega, int n) const {
    cplx v = 0.0;
    for (const auto& [k, coef] : c) v += coef * std::pow(I * double(k), n) * std::polar(1.0, k * omega);
    return v;
  }
};

namespace detail {

// Term coef * zeta^a * zetabar^b, zeta = y1 + i y2.
struct WirtingerTerm {
  cplx coef, a, b;
};

inline std::vector<WirtingerTerm> apply_cartesian(const std::vector<WirtingerTerm>& in, bool second) {
  // d1 = d_zeta + d_zetabar,  d2 = i (d_zeta - d_zetabar);  D = -i d
  std::vector<WirtingerTerm> out;
  for (const auto& t : in) {
    const cplx fz = second ? cplx(-I * I) : cplx(-I);   // factor on d_zeta
    const cplx fzb = second ? cplx(I * I) : cplx(-I);   // factor on d_zetabar
    if (t.a != 0.0) out.push_back({t.coef * t.a * fz, t.a - 1.0, t.b});
    if (t.b != 0.0) out.push_back({t.coef * t.b * fzb, t.a, t.b - 1.0});
  }
  return out;
}

}  // namespace detail

/// Max difference between the Cartesian operator applied to r^{i lambda} phi
/// (Wirtinger calculus on zeta^a zetabar^b) and the polar form, over the grid.
/// Returns the residual divided by the largest magnitude encountered.
inline double polar_residual(const HomogeneousOperator& op, cplx lambda, const TrigPoly& phi,
                             const std::vector<std::pair<double, double>>& grid) {
  // r^{i lambda} e^{i kappa w} = zeta^{(i lambda + kappa)/2} zetabar^{(i lambda - kappa)/2}
  std::vector<std::vector<detail::WirtingerTerm>> per_mono(op.order + 1);
  for (int a2 = 0; a2 <= op.order; ++a2) {
    if (op.coeffs[a2] == 0.0) continue;
    std::vector<detail::WirtingerTerm> terms;
    for (const auto& [k, coef] : phi.c)
      terms.push_back({coef, (I * lambda + double(k)) / 2.0, (I * lambda - double(k)) / 2.0});
    for (int s = 0; s < a2; ++s) terms = detail::apply_cartesian(terms, true);
    for (int s = 0; s < op.order - a2; ++s) terms = detail::apply_cartesian(terms, false);
    per_mono[a2] = std::move(terms);
  }
  const PolarOperator pol = to_polar(op);
  double worst = 0.0, scale = 0.0;
  for (const auto& [r, w] : grid) {
    const double lr = std::log(r);
    cplx lhs = 0.0;
    for (int a2 = 0; a2 <= op.order; ++a2) {
      for (const auto& t : per_mono[a2]) {
        // zeta^a zetabar^b = r^{a+b} e^{i w (a-b)}
        const cplx v = op.coeffs[a2] * t.coef * std::exp((t.a + t.b) * lr + I * w * (t.a - t.b));
        lhs += v;
        scale = std::max(scale, std::abs(v));
      }
    }
    const auto an = pol.eval(w, lambda);
    cplx rhs = 0.0;
    const cplx pref = std::exp((I * lambda - double(op.order)) * lr);
    for (int n = 0; n <= op.order; ++n) {
      const cplx v = pref * an[n] * phi.derivative(w, n);
      rhs += v;
      scale = std::max(scale, std::abs(v));
    }
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return scale > 0.0 ? worst / scale : worst;
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_POLAR_HPP
