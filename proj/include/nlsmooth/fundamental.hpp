#ifndef NLSMOOTH_FUNDAMENTAL_HPP
#define NLSMOOTH_FUNDAMENTAL_HPP

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/LU>

#include "core.hpp"
#include "linalg.hpp"
#include "model.hpp"

namespace nlsmooth {

struct CharRoot {
  cplx z;
  int multiplicity = 1;
  bool upper = true;
};

/// Roots of P(1, z) with multiplicities, ordered by real then imaginary part.
inline std::vector<CharRoot> char_roots(const HomogeneousOperator& op, int order_2m) {
  const auto e = check_proper_ellipticity(op, order_2m);
  if (e.degree_drop)
    throw InputError("P(1,z) loses degree; the closed-form basis is unavailable (collocation only)");
  if (e.real_root) throw InputError("operator has a real characteristic root: " + e.detail);
  std::vector<CharRoot> out;
  for (const auto& c : e.roots) out.push_back({c.value, c.multiplicity, c.value.imag() > 0});
  return out;
}

inline std::vector<std::vector<CharRoot>> char_roots(const ModelProblem& p) {
  std::vector<std::vector<CharRoot>> r;
  for (const auto& op : p.interior_ops) r.push_back(char_roots(op, p.order_2m));
  return r;
}

/// Which basis function: d^p/dz^p (cos w + z sin w)^{i lambda} at z = root.
struct BasisFunction {
  int root = 0;
  int level = 0;
};

namespace detail {

/// Continuous log of cos w + z sin w, following the path from 0 where the value is 1.
inline cplx continuous_log(cplx z, double omega) {
  const int steps = std::max(1, int(std::ceil(std::abs(omega) / 0.01)));
  double arg = 0.0;
  cplx prev = 1.0;
  for (int s = 1; s <= steps; ++s) {
    const double t = omega * s / steps;
    const cplx w = std::cos(t) + z * std::sin(t);
    arg += std::arg(w / prev);
    prev = w;
  }
  return cplx(std::log(std::abs(prev)), arg);
}

// Per-angle data needed for derivative series in the angular increment h.
struct AngleRootData {
  cplx log_w;       // continuous log w(theta)
  Series log_ratio;  // log(w(theta+h)/w(theta))
};

struct AngleData {
  double theta = 0.0;
  Series sine;  // sin(theta + h)
  std::vector<AngleRootData> roots;
};

inline Series trig_series(double theta, int n, bool sine) {
  Series s(n);
  for (int k = 0; k < n; ++k) {
    // k-th derivative of sin/cos at theta, divided by k!
    const double phase = theta + k * pi / 2;
    s[k] = (sine ? std::sin(phase) : std::cos(phase)) / factorial(k);
  }
  return s;
}

inline AngleData make_angle_data(const std::vector<CharRoot>& roots, double theta, int q_max) {
  AngleData a;
  a.theta = theta;
  const int n = q_max + 1;
  a.sine = trig_series(theta, n, true);
  const Series cs = trig_series(theta, n, false);
  for (const auto& r : roots) {
    Series w(n);
    for (int k = 0; k < n; ++k) w[k] = cs[k] + r.z * a.sine[k];
    a.roots.push_back({continuous_log(r.z, theta), series_log_ratio(w)});
  }
  return a;
}

/// Taylor series in h of the basis function at theta + h.
inline Series basis_series(const AngleData& a, int root, int level, cplx lambda) {
  const cplx al = I * lambda;
  const cplx e = al - double(level);
  const auto& rd = a.roots[root];
  Series arg(rd.log_ratio.size());
  for (std::size_t k = 0; k < arg.size(); ++k) arg[k] = e * rd.log_ratio[k];
  Series s = series_exp0(arg);
  if (level > 0) s = series_mul(s, series_pow_int(a.sine, level));
  const cplx pref = falling(al, level) * std::exp(e * rd.log_w);
  for (auto& v : s) v *= pref;
  return s;
}

}  // namespace detail

/// d^q/dw^q of the basis function (root z, level p) at angle omega.
inline std::vector<cplx> basis_derivatives(cplx z, int level, cplx lambda, double omega, int q_max) {
  const auto a = detail::make_angle_data({CharRoot{z, level + 1, z.imag() > 0}}, omega, q_max);
  const Series s = detail::basis_series(a, 0, level, lambda);
  std::vector<cplx> d(q_max + 1);
  for (int q = 0; q <= q_max; ++q) d[q] = s[q] * factorial(q);
  return d;
}

inline cplx basis_eval(cplx z, int level, cplx lambda, double omega, int q) {
  return basis_derivatives(z, level, lambda, omega, q)[q];
}

/// Fundamental system of one component, evaluated at a fixed set of angles.
///
/// raw():       Y(theta), rows = derivative order 0..q_max, columns = basis functions.
/// canonical(): Phi(theta) = Y(theta) Y(0)^{-1} restricted to the first 2m rows of Y(0),
///              i.e. the solutions with phi^{(q)}(0) = delta; entire in lambda.
class ComponentBasis {
 public:
  ComponentBasis() = default;
  ComponentBasis(std::vector<CharRoot> roots, int order_2m, std::vector<double> angles, int q_max)
      : roots_(std::move(roots)), order_(order_2m), q_max_(std::max(q_max, order_2m - 1)) {
    for (int t = 0; t < int(roots_.size()); ++t)
      for (int p = 0; p < roots_[t].multiplicity; ++p) funcs_.push_back({t, p});
    angles_.push_back(detail::make_angle_data(roots_, 0.0, q_max_));
    for (double th : angles) angles_.push_back(detail::make_angle_data(roots_, th, q_max_));
    near_ = std::make_shared<NearCache>(std::max(0, order_ - 1));
  }

  int order() const { return order_; }
  int q_max() const { return q_max_; }
  int angle_count() const { return int(angles_.size()) - 1; }
  double angle(int i) const { return angles_[i + 1].theta; }
  const std::vector<BasisFunction>& functions() const { return funcs_; }
  const std::vector<CharRoot>& roots() const { return roots_; }

  /// Y at angle index i (-1 means omega = 0).
  CMatrix raw(int i, cplx lambda) const {
    const auto& a = angles_[i + 1];
    CMatrix y(q_max_ + 1, order_);
    for (int c = 0; c < order_; ++c) {
      const Series s = detail::basis_series(a, funcs_[c].root, funcs_[c].level, lambda);
      for (int q = 0; q <= q_max_; ++q) y(q, c) = s[q] * factorial(q);
    }
    return y;
  }

  /// Distance from lambda to the nearest point where the raw basis is dependent.
  double degeneration_distance(cplx lambda) const {
    double d = 1e300;
    for (int s = 0; s <= order_ - 2; ++s) d = std::min(d, std::abs(lambda + I * double(s)));
    return d;
  }

  /// Canonical derivative tables at every registered angle (index 0..angle_count-1).
  std::vector<CMatrix> canonical(cplx lambda) const {
    const double d = degeneration_distance(lambda);
    if (d >= 0.2) {
      bool ok = true;
      auto r = canonical_direct(lambda, &ok);
      if (ok) return r;
      return canonical_taylor(lambda, 1)[0];
    }
    int s_near = 0;
    for (int s = 1; s <= order_ - 2; ++s)
      if (std::abs(lambda + I * double(s)) < std::abs(lambda + I * double(s_near))) s_near = s;
    const cplx u = lambda + I * double(s_near);
    const auto& tab = near_table(s_near);
    std::vector<CMatrix> r = tab.back();
    for (int q = kNearTerms - 2; q >= 0; --q)
      for (std::size_t a = 0; a < r.size(); ++a) r[a] = r[a] * u + tab[q][a];
    return r;
  }

  /// Taylor coefficients in (lambda - lambda0): result[q][angle] for q < nterms.
  std::vector<std::vector<CMatrix>> canonical_taylor(cplx lambda0, int nterms) const {
    return circle_taylor(lambda0, circle_radius(lambda0), nterms, 32);
  }

  double circle_radius(cplx lambda0) const {
    const double d = degeneration_distance(lambda0);
    if (d >= 0.45) return 0.25;
    if (d > 0.3) return d - 0.2;
    return d + 0.2;
  }

 private:
  static constexpr int kNearTerms = 64;

  // Taylor tables around each degeneration point -is, sampled on a circle of
  // radius 0.45; built on first use and shared between copies.
  struct NearCache {
    explicit NearCache(int n) : flags(n), tables(n) {}
    std::vector<std::once_flag> flags;
    std::vector<std::vector<std::vector<CMatrix>>> tables;
  };

  const std::vector<std::vector<CMatrix>>& near_table(int s) const {
    std::call_once(near_->flags[s], [&] {
      near_->tables[s] = circle_taylor(cplx(0.0, -s), 0.45, kNearTerms, kNearTerms);
    });
    return near_->tables[s];
  }

  std::vector<std::vector<CMatrix>> circle_taylor(cplx lambda0, double rho, int nterms, int K) const {
    std::vector<std::vector<CMatrix>> out(nterms);
    for (int k = 0; k < K; ++k) {
      const cplx u = rho * std::polar(1.0, 2.0 * pi * (k + 0.5) / K);
      bool ok = true;
      auto vals = canonical_direct(lambda0 + u, &ok);
      for (int q = 0; q < nterms; ++q) {
        const cplx f = std::pow(u, -q) / double(K);
        if (out[q].empty()) {
          out[q].resize(vals.size());
          for (std::size_t a = 0; a < vals.size(); ++a) out[q][a] = vals[a] * f;
        } else {
          for (std::size_t a = 0; a < vals.size(); ++a) out[q][a] += vals[a] * f;
        }
      }
    }
    return out;
  }

  std::vector<CMatrix> canonical_direct(cplx lambda, bool* ok) const {
    const CMatrix y0 = raw(-1, lambda).topRows(order_);
    Eigen::PartialPivLU<CMatrix> lu(y0);
    if (lu.rcond() < 1e-10) *ok = false;
    const CMatrix inv = lu.inverse();
    std::vector<CMatrix> r;
    r.reserve(angles_.size() - 1);
    for (int i = 0; i + 1 < int(angles_.size()); ++i) r.push_back(raw(i, lambda) * inv);
    return r;
  }

  std::vector<CharRoot> roots_;
  int order_ = 2;
  int q_max_ = 1;
  std::vector<BasisFunction> funcs_;
  std::vector<detail::AngleData> angles_;  // [0] is omega = 0
  std::shared_ptr<NearCache> near_;
};

}  // namespace nlsmooth

#endif  // NLSMOOTH_FUNDAMENTAL_HPP
