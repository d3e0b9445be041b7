#ifndef NLSMOOTH_CERTIFICATE_HPP
#define NLSMOOTH_CERTIFICATE_HPP

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "classify.hpp"
#include "parallel.hpp"
#include "pencil.hpp"
#include "polar.hpp"
#include "spectrum.hpp"

namespace nlsmooth {

/// V(r, w) = r^{i lambda0} sum_l (i ln r)^l / l! phi_l(w), with
/// phi_l = sum_q Phi_q(w) y[l][q], where Phi_q is the q-th Taylor coefficient
/// in lambda of the canonical basis at lambda0. Coordinates live in C^{2mN}.
struct PowerLogFunction {
  cplx lambda0;
  std::vector<std::vector<CVector>> y;

  int log_degree() const { return int(y.size()) - 1; }
  int taylor_terms() const {
    std::size_t n = 1;
    for (const auto& v : y) n = std::max(n, v.size());
    return int(n);
  }
};

namespace detail {

inline cplx ipow(cplx z, int n) {
  cplx r = 1.0;
  for (int i = 0; i < n; ++i) r *= z;
  return r;
}

inline std::vector<cplx> poly_derivative_n(std::vector<cplx> p, int j) {
  for (int i = 0; i < j; ++i) p = poly_derivative(p);
  return p;
}

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(pi * (i + 0.75) / (n + 0.5)), dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

}  // namespace detail

/// Angular profiles phi_l^{(n)} of one component at fixed angles, and the
/// action of homogeneous operators on V there.
class PowerLogSampler {
 public:
  PowerLogSampler(const Pencil& pen, const PowerLogFunction& v, int k, std::vector<double> omegas, int q_max)
      : lambda0_(v.lambda0), omegas_(std::move(omegas)) {
    const int m2 = pen.problem().order_2m;
    const auto tabs = pen.profile_taylor(v.lambda0, k, omegas_, q_max, v.taylor_terms());
    phi_.assign(v.y.size(), std::vector<CVector>(omegas_.size(), CVector::Zero(q_max + 1)));
    for (std::size_t l = 0; l < v.y.size(); ++l)
      for (std::size_t q = 0; q < v.y[l].size(); ++q) {
        const CVector yk = v.y[l][q].segment(k * m2, m2);
        for (std::size_t a = 0; a < omegas_.size(); ++a) phi_[l][a] += tabs[q][a].topRows(q_max + 1) * yk;
      }
  }

  const std::vector<double>& angles() const { return omegas_; }

  /// phi_l^{(n)} at angle index a.
  cplx profile(int l, int a, int n) const { return phi_[l][a](n); }

  /// (op V)(r, w_a); `scale` receives the size of the local jet of V weighted
  /// by the operator coefficients, the reference for relative residuals.
  cplx apply(const PolarOperator& pol, int a, double r, double* scale = nullptr) const {
    const auto lp = pol.lambda_polys(omegas_[a]);
    const double lr = std::log(r);
    const cplx pw = std::exp((I * lambda0_ - double(pol.order)) * lr);
    cplx v = 0.0;
    double sc = 0.0;
    for (std::size_t l = 0; l < phi_.size(); ++l)
      for (int j = 0; j <= int(l); ++j) {
        const cplx lg = detail::ipow(I * lr, int(l) - j) * (binomial(int(l), j) / factorial(int(l)));
        for (std::size_t n = 0; n < lp.size(); ++n) {
          const cplx an = poly_eval(detail::poly_derivative_n(lp[n], j), lambda0_);
          const cplx t = pw * lg * phi_[l][a](n);
          v += t * an;
          sc += std::abs(t) * (1.0 + std::abs(an));
        }
      }
    if (scale) *scale = sc;
    return v;
  }

 private:
  cplx lambda0_;
  std::vector<double> omegas_;
  std::vector<std::vector<CVector>> phi_;  // [l][angle] -> derivatives 0..q_max
};

struct ResidualReport {
  double interior = 0.0;  // max relative residual of P_j V_j
  double boundary = 0.0;  // max relative residual of the nonlocal rows
  double tol = 1e-7;
  bool pass = false;
};

/// Applies the interior operators and boundary rows to V on a polar grid.
/// Expected boundary data are rhs(row) r^{i lambda0 - m_row} (zero if rhs is empty).
inline ResidualReport verify_residual(const Pencil& pen, const PowerLogFunction& v, const CVector& rhs = CVector(),
                                      const std::vector<double>& radii = {0.03, 0.2, 0.6, 1.0},
                                      int n_angles = 9) {
  const auto& p = pen.problem();
  ResidualReport rep;
  // Residuals are measured against the largest local scale at the same radius,
  // so points where V happens to vanish do not inflate them.
  std::vector<double> floor_int(radii.size(), 0.0), floor_bnd(radii.size(), 0.0);
  std::vector<std::vector<double>> vi(radii.size()), vb(radii.size());
  for (int k = 0; k < p.N(); ++k) {
    const PowerLogSampler s(pen, v, k, sample_angles(p.half_angles[k], n_angles), p.order_2m);
    const PolarOperator pol = to_polar(p.interior_ops[k]);
    for (int a = 0; a < n_angles; ++a)
      for (std::size_t i = 0; i < radii.size(); ++i) {
        double sc = 0.0;
        vi[i].push_back(std::abs(s.apply(pol, a, radii[i], &sc)));
        floor_int[i] = std::max(floor_int[i], sc);
      }
  }
  for (int row = 0; row < p.row_count(); ++row) {
    const auto& br = p.rows[row];
    std::vector<PowerLogSampler> samplers;
    std::vector<PolarOperator> pols;
    for (const auto& t : br.terms) {
      samplers.emplace_back(pen, v, t.target, std::vector<double>{p.shifted_angle(br, t)}, t.op.order);
      pols.push_back(to_polar(t.op));
    }
    // The row operator may annihilate V on the side (clamped rows); its size
    // across the sector sets the reference instead.
    for (std::size_t t = 0; t < br.terms.size(); ++t) {
      const auto& term = br.terms[t];
      const PowerLogSampler across(pen, v, term.target, sample_angles(p.half_angles[term.target], n_angles),
                                   term.op.order);
      for (int a = 0; a < n_angles; ++a)
        for (std::size_t i = 0; i < radii.size(); ++i) {
          double sc = 0.0;
          across.apply(pols[t], a, term.homothety * radii[i], &sc);
          floor_bnd[i] = std::max(floor_bnd[i], sc);
        }
    }
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const double r = radii[i];
      cplx val = 0.0;
      double sc = 0.0;
      for (std::size_t t = 0; t < br.terms.size(); ++t) {
        double s1 = 0.0;
        val += samplers[t].apply(pols[t], 0, br.terms[t].homothety * r, &s1);
        sc += s1;
      }
      if (rhs.size() > 0) {
        const cplx want = rhs(row) * std::exp((I * v.lambda0 - double(br.order)) * std::log(r));
        val -= want;
        sc += std::abs(want);
      }
      vb[i].push_back(std::abs(val));
      floor_bnd[i] = std::max(floor_bnd[i], sc);
    }
  }
  for (std::size_t i = 0; i < radii.size(); ++i) {
    for (double x : vi[i])
      if (floor_int[i] > 0.0) rep.interior = std::max(rep.interior, x / floor_int[i]);
    for (double x : vb[i])
      if (floor_bnd[i] > 0.0) rep.boundary = std::max(rep.boundary, x / floor_bnd[i]);
  }
  if (!std::isfinite(rep.interior) || !std::isfinite(rep.boundary)) rep.interior = rep.boundary = 1.0;
  rep.pass = rep.interior <= rep.tol && rep.boundary <= rep.tol;
  return rep;
}

struct BlowupProfile {
  std::vector<int> n;
  std::vector<double> energy;  // annulus 2^{-n-1} < r < 2^{-n}
  std::vector<double> ratios;  // energy[i+1] / energy[i]
  double fitted_ratio = 0.0;
  double expected_ratio = 0.0;
  bool vanishing = false;  // order-2m derivatives cancel to rounding level
  bool pass = false;
  std::string note;
};

/// Energy of the order-2m derivatives of V on dyadic annuli.
inline BlowupProfile blowup_profile(const Pencil& pen, const PowerLogFunction& v, int n_lo = 2, int n_hi = 12,
                                    int nr = 32, int nw = 64) {
  const auto& p = pen.problem();
  const int m2 = p.order_2m;
  BlowupProfile bp;
  bp.expected_ratio = std::pow(2.0, 2.0 * (m2 - 1 + v.lambda0.imag()));
  const auto [gx, gw] = detail::gauss_legendre(nw);
  const auto [rx, rw] = detail::gauss_legendre(nr);
  std::vector<PolarOperator> mono;
  for (int a = 0; a <= m2; ++a) mono.push_back(detail::polar_monomial(m2 - a, a));
  std::vector<PowerLogSampler> samplers;
  std::vector<std::vector<double>> wts;
  for (int k = 0; k < p.N(); ++k) {
    const double w = p.half_angles[k];
    std::vector<double> om(nw), wt(nw);
    for (int i = 0; i < nw; ++i) {
      om[i] = w * gx[i];
      wt[i] = w * gw[i];
    }
    samplers.emplace_back(pen, v, k, om, m2);
    wts.push_back(wt);
  }
  struct Annulus {
    double e = 0.0, s = 0.0;
  };
  const int count = n_hi - n_lo + 1;
  const auto res = parallel_map<Annulus>(count, [&](int idx) {
    const int n = n_lo + idx;
    const double r0 = std::ldexp(1.0, -n - 1), r1 = std::ldexp(1.0, -n);
    Annulus an;
    for (int i = 0; i < nr; ++i) {
      const double r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * rx[i];
      const double wr = 0.5 * (r1 - r0) * rw[i] * r;
      for (int k = 0; k < p.N(); ++k)
        for (int a = 0; a < nw; ++a)
          for (const auto& op : mono) {
            double sc = 0.0;
            const cplx d = samplers[k].apply(op, a, r, &sc);
            an.e += wr * wts[k][a] * std::norm(d);
            an.s += wr * wts[k][a] * sc * sc;
          }
    }
    return an;
  });
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < count; ++i) {
    bp.n.push_back(n_lo + i);
    bp.energy.push_back(res[i].e);
    if (res[i].e <= 1e-20 * res[i].s || res[i].e == 0.0) bp.vanishing = true;
    if (i > 0) bp.ratios.push_back(res[i].e / res[i - 1].e);
  }
  if (bp.vanishing) {
    bp.note = "order-2m derivatives vanish: the function is a polynomial";
    return bp;
  }
  for (int i = 0; i < count; ++i) {
    const double x = n_lo + i, y = std::log2(res[i].e);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  bp.fitted_ratio = std::exp2(slope);
  bp.pass = bp.fitted_ratio >= 1.0 + 1e-3;
  if (!bp.pass) bp.note = "annulus energies do not grow towards the vertex";
  return bp;
}

struct PowerSolution {
  PowerLogFunction function;
  int l0 = 0;
  bool ok = false;
  std::string note;
};

/// Singular solution r^{i lambda0} sum_{l <= l0} (i ln r)^l phi^{(l0 - l)} / l!
/// for an improper eigenvalue, with l0 as small as possible.
inline PowerSolution build_power_solution(const Pencil& pen, const EigenvalueRecord& rec) {
  PowerSolution ps;
  ps.function.lambda0 = rec.lambda;
  const int s = integer_exponent(rec.lambda);
  // l0 = 0 works unless every eigenvector gives a polynomial
  int best = -1;
  double worst = -1.0;
  for (int c = 0; c < rec.eigenvectors.cols(); ++c) {
    const double res = s < 0 ? 1.0 : polynomial_test(pen, cplx(0.0, -double(s)), rec.eigenvectors.col(c), s);
    if (res > worst) {
      worst = res;
      best = c;
    }
  }
  if (best >= 0 && worst > kPolynomialTol) {
    ps.l0 = 0;
    ps.function.y = {{rec.eigenvectors.col(best)}};
    ps.ok = true;
    return ps;
  }
  if (rec.alg_mult > rec.geo_mult) {
    const double tol = rec.cluster ? kClusterRankTol : kRankTol;
    const auto chain = jordan_chain(pen, rec.lambda, 2, tol);
    if (chain) {
      ps.l0 = 1;
      // l = 1 carries phi^{(0)} = Phi_0 x0; l = 0 carries phi^{(1)} = Phi_0 x1 + Phi_1 x0
      ps.function.y = {{(*chain)[1], (*chain)[0]}, {(*chain)[0]}};
      ps.ok = true;
      return ps;
    }
  }
  ps.note = "no non-polynomial power solution found; rerun at higher resolution";
  return ps;
}

struct Certificate {
  PowerSolution solution;
  ResidualReport residual;
  BlowupProfile blowup;
  CVector rhs;  // boundary data coefficients (empty for the homogeneous problem)
  bool valid = false;
};

inline Certificate certify(const Pencil& pen, const PowerLogFunction& f, int l0, const CVector& rhs = CVector()) {
  Certificate c;
  c.solution.function = f;
  c.solution.l0 = l0;
  c.solution.ok = true;
  c.rhs = rhs;
  c.residual = verify_residual(pen, f, rhs);
  c.blowup = blowup_profile(pen, f);
  c.valid = c.residual.pass && c.blowup.pass;
  return c;
}

inline Certificate certify_eigenvalue(const Pencil& pen, const EigenvalueRecord& rec) {
  const auto ps = build_power_solution(pen, rec);
  if (!ps.ok) {
    Certificate c;
    c.solution = ps;
    return c;
  }
  return certify(pen, ps.function, ps.l0);
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_CERTIFICATE_HPP
