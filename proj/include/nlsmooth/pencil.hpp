#ifndef NLSMOOTH_PENCIL_HPP
#define NLSMOOTH_PENCIL_HPP

#include <algorithm>
#include <vector>

#include "core.hpp"
#include "fundamental.hpp"
#include "linalg.hpp"
#include "model.hpp"
#include "polar.hpp"

namespace nlsmooth {

/// chi^{i lambda - m}
inline cplx homothety_factor(double chi, cplx lambda, int m) {
  if (chi == 1.0) return 1.0;
  return std::exp((I * lambda - double(m)) * std::log(chi));
}

/// One boundary functional applied to a raw basis function of component k:
/// sum over terms targeting k of chi^{i lambda - m} (polar op applied) at the shifted angle.
inline cplx boundary_row(const ModelProblem& p, const BoundaryRow& row, cplx lambda, int k,
                         cplx root, int level) {
  cplx v = 0.0;
  for (const auto& t : row.terms) {
    if (t.target != k) continue;
    const double th = p.shifted_angle(row, t);
    const auto a = to_polar(t.op).eval(th, lambda);
    const auto d = basis_derivatives(root, level, lambda, th, t.op.order);
    cplx s = 0.0;
    for (int n = 0; n <= t.op.order; ++n) s += a[n] * d[n];
    v += homothety_factor(t.homothety, lambda, row.order) * s;
  }
  return v;
}

/// Boundary matrix of the pencil over the canonical fundamental system
/// (columns: component k, initial derivative index c). Its determinant is the
/// normalized characteristic determinant.
class Pencil {
 public:
  explicit Pencil(ModelProblem p) : p_(std::move(p)) {
    const int N = p_.N();
    const auto roots = char_roots(p_);
    std::vector<std::vector<double>> angles(N);
    for (const auto& row : p_.rows) {
      std::vector<TermData> td;
      for (const auto& t : row.terms) {
        const double th = p_.shifted_angle(row, t);
        auto& list = angles[t.target];
        auto it = std::find(list.begin(), list.end(), th);
        int idx = int(it - list.begin());
        if (it == list.end()) list.push_back(th);
        td.push_back({t.target, idx, t.homothety, row.order, to_polar(t.op).lambda_polys(th)});
      }
      terms_.push_back(std::move(td));
    }
    for (int k = 0; k < N; ++k)
      bases_.emplace_back(roots[k], p_.order_2m, angles[k], p_.order_2m);
  }

  const ModelProblem& problem() const { return p_; }
  int size() const { return p_.order_2m * p_.N(); }
  const ComponentBasis& basis(int k) const { return bases_[k]; }

  CMatrix matrix(cplx lambda) const {
    const int n = size(), m2 = p_.order_2m;
    std::vector<std::vector<CMatrix>> phi;
    for (const auto& b : bases_) phi.push_back(b.canonical(lambda));
    CMatrix M = CMatrix::Zero(n, n);
    for (int r = 0; r < n; ++r) {
      for (const auto& t : terms_[r]) {
        const CMatrix& tab = phi[t.target][t.angle];
        const cplx f = homothety_factor(t.chi, lambda, t.m);
        for (int d = 0; d <= t.m; ++d) {
          const cplx a = poly_eval(t.a[d], lambda) * f;
          if (a == 0.0) continue;
          for (int c = 0; c < m2; ++c) M(r, t.target * m2 + c) += a * tab(d, c);
        }
      }
    }
    return M;
  }

  cplx log_det(cplx lambda) const { return nlsmooth::log_det(matrix(lambda)); }
  cplx det(cplx lambda) const { return std::exp(log_det(lambda)); }

  /// Radius of the sampling circle used for Taylor coefficients around lambda0.
  double taylor_radius(cplx lambda0) const { return bases_[0].circle_radius(lambda0); }

  /// Taylor coefficients M_q of M(lambda) around lambda0, q < nterms.
  std::vector<CMatrix> taylor(cplx lambda0, int nterms, double rho = 0.0) const {
    if (rho <= 0.0) rho = taylor_radius(lambda0);
    constexpr int K = 32;
    std::vector<CMatrix> out(nterms, CMatrix::Zero(size(), size()));
    for (int k = 0; k < K; ++k) {
      const cplx u = rho * std::polar(1.0, 2.0 * pi * (k + 0.5) / K);
      const CMatrix v = matrix(lambda0 + u);
      for (int q = 0; q < nterms; ++q) out[q] += v * (std::pow(u, -q) / double(K));
    }
    return out;
  }

  /// Derivatives 0..q_max of the profile phi_k = sum_c Phi_{k,c} x_{k,c} at the given angles.
  /// Canonical coordinates are initial data: x_{k,c} = phi_k^{(c)}(0).
  CMatrix profile(cplx lambda, const CVector& x, int k, const std::vector<double>& omegas,
                  int q_max) const {
    const ComponentBasis b(bases_[k].roots(), p_.order_2m, omegas, q_max);
    const auto tabs = b.canonical(lambda);
    CMatrix out(q_max + 1, omegas.size());
    const CVector xk = x.segment(k * p_.order_2m, p_.order_2m);
    for (std::size_t i = 0; i < omegas.size(); ++i) out.col(i) = tabs[i].topRows(q_max + 1) * xk;
    return out;
  }

  /// Taylor coefficients (in lambda - lambda0) of canonical tables for component k at omegas.
  std::vector<std::vector<CMatrix>> profile_taylor(cplx lambda0, int k, const std::vector<double>& omegas,
                                                   int q_max, int nterms) const {
    const ComponentBasis b(bases_[k].roots(), p_.order_2m, omegas, q_max);
    return b.canonical_taylor(lambda0, nterms);
  }

 private:
  struct TermData {
    int target;
    int angle;
    double chi;
    int m;
    std::vector<std::vector<cplx>> a;  // a[n] = polynomial in lambda at the shifted angle
  };

  ModelProblem p_;
  std::vector<ComponentBasis> bases_;
  std::vector<std::vector<TermData>> terms_;
};

// ---------------------------------------------------------------------------
// Spectral collocation. Per component the unknowns are psi = phi^{(2m)} at M
// first-kind Chebyshev nodes and the initial data phi^{(q)}(0), q < 2m; lower
// derivatives are reconstructed by repeated Chebyshev integration from 0.
// ---------------------------------------------------------------------------

struct CollocationMatrix {
  cplx lambda;
  int mc = 0;
  CMatrix a;
  int interior_rows = 0;
  RVector weights;  // quadrature weight of each interior row
};

struct DualVector {
  CVector interior;  // density values at the nodes (row weights removed)
  CVector boundary;  // in C^{2mN}, canonical row order
};

namespace detail {

inline double cheb_t(int k, double x) { return std::cos(k * std::acos(std::clamp(x, -1.0, 1.0))); }

/// Fejer (first rule) weights on [-1,1] for first-kind Chebyshev nodes.
inline RVector fejer_weights(int n) {
  RVector w(n);
  for (int i = 0; i < n; ++i) {
    const double th = (2 * i + 1) * pi / (2 * n);
    double s = 0.0;
    for (int k = 1; k <= n / 2; ++k) s += std::cos(2 * k * th) / (4.0 * k * k - 1.0);
    w(i) = 2.0 / n * (1.0 - 2.0 * s);
  }
  return w;
}

}  // namespace detail

class Collocation {
 public:
  Collocation(ModelProblem p, int mc) : p_(std::move(p)), mc_(mc) {
    if (mc < 2 * p_.order_2m + 4) throw InputError("collocation size must be at least 4m+4");
    const int n = mc_, m2 = p_.order_2m, L = n + m2 + 1;
    x_.resize(n);
    for (int i = 0; i < n; ++i) x_[i] = std::cos((2 * i + 1) * pi / (2 * n));
    // values -> Chebyshev coefficients (length L, padded)
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(L, n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i) C(k, i) = 2.0 / n * detail::cheb_t(k, x_[i]) * (k == 0 ? 0.5 : 1.0);
    // integration with F(0) = 0
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(L, L);
    for (int k = 0; k + 1 < L; ++k) {
      // contribution of a_k T_k
      if (k == 0) {
        J(1, 0) += 1.0;
      } else if (k == 1) {
        J(2, 1) += 0.25;
      } else {
        J(k + 1, k) += 1.0 / (2.0 * (k + 1));
        J(k - 1, k) -= 1.0 / (2.0 * (k - 1));
      }
    }
    for (int c = 0; c < L; ++c) {
      double v0 = 0.0;
      for (int k = 1; k < L; ++k) v0 += J(k, c) * detail::cheb_t(k, 0.0);
      J(0, c) = -v0;
    }
    integ_.resize(m2 + 1);
    integ_[0] = C;
    for (int s = 1; s <= m2; ++s) integ_[s] = J * integ_[s - 1];
    weights_ = detail::fejer_weights(n);

    for (int k = 0; k < p_.N(); ++k) polar_.push_back(to_polar(p_.interior_ops[k]));
    for (const auto& row : p_.rows) {
      std::vector<TermData> td;
      for (const auto& t : row.terms) {
        const double th = p_.shifted_angle(row, t);
        TermData d{t.target, t.homothety, row.order, to_polar(t.op).lambda_polys(th), {}};
        for (int q = 0; q <= row.order; ++q) d.recon.push_back(reconstruction(t.target, th, q));
        td.push_back(std::move(d));
      }
      terms_.push_back(std::move(td));
    }
    for (int k = 0; k < p_.N(); ++k) {
      std::vector<Eigen::RowVectorXd> rows;
      std::vector<std::vector<std::vector<cplx>>> coeffs;
      for (int i = 0; i < n; ++i) {
        const double om = p_.half_angles[k] * x_[i];
        coeffs.push_back(polar_[k].lambda_polys(om));
      }
      interior_coeffs_.push_back(std::move(coeffs));
      std::vector<std::vector<Eigen::RowVectorXd>> rr(n);
      for (int i = 0; i < n; ++i)
        for (int q = 0; q <= m2; ++q) rr[i].push_back(reconstruction(k, p_.half_angles[k] * x_[i], q));
      interior_recon_.push_back(std::move(rr));
    }
  }

  const ModelProblem& problem() const { return p_; }
  int mc() const { return mc_; }
  int block() const { return mc_ + p_.order_2m; }
  int unknowns() const { return p_.N() * block(); }
  double node(int k, int i) const { return p_.half_angles[k] * x_[i]; }

  /// Row vector mapping the unknowns of component k to phi_k^{(q)}(omega).
  Eigen::RowVectorXd reconstruction(int k, double omega, int q) const {
    const int m2 = p_.order_2m, n = mc_, L = n + m2 + 1;
    const double wj = p_.half_angles[k];
    const double x = omega / wj;
    Eigen::RowVectorXd t(L);
    for (int i = 0; i < L; ++i) t(i) = detail::cheb_t(i, x);
    Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(n + m2);
    r.head(n) = std::pow(wj, m2 - q) * (t * integ_[m2 - q]);
    for (int c = q; c < m2; ++c) r(n + c) = std::pow(omega, c - q) / factorial(c - q);
    return r;
  }

  CollocationMatrix assemble(cplx lambda) const {
    const int N = p_.N(), n = mc_, m2 = p_.order_2m, B = block();
    CollocationMatrix cm;
    cm.lambda = lambda;
    cm.mc = n;
    cm.interior_rows = N * n;
    cm.a = CMatrix::Zero(unknowns(), unknowns());
    cm.weights.resize(N * n);
    for (int k = 0; k < N; ++k) {
      for (int i = 0; i < n; ++i) {
        const int r = k * n + i;
        cm.weights(r) = weights_(i) * p_.half_angles[k];
        for (int q = 0; q <= m2; ++q) {
          const cplx a = poly_eval(interior_coeffs_[k][i][q], lambda);
          if (a == 0.0) continue;
          cm.a.row(r).segment(k * B, B) += a * interior_recon_[k][i][q].cast<cplx>();
        }
      }
    }
    for (int r = 0; r < int(terms_.size()); ++r) {
      const int rr = N * n + r;
      for (const auto& t : terms_[r]) {
        const cplx f = homothety_factor(t.chi, lambda, t.m);
        for (int q = 0; q <= t.m; ++q) {
          const cplx a = poly_eval(t.a[q], lambda) * f;
          if (a == 0.0) continue;
          cm.a.row(rr).segment(t.target * B, B) += a * t.recon[q].cast<cplx>();
        }
      }
    }
    return cm;
  }

  /// phi_k^{(q)}(omega) from a solution vector.
  cplx evaluate(const CVector& sol, int k, double omega, int q) const {
    const Eigen::RowVectorXd r = reconstruction(k, omega, q);
    return (r.cast<cplx>() * sol.segment(k * block(), block()))(0);
  }

  /// Initial data phi_k^{(c)}(0) of every component: the canonical coordinates.
  CVector initial_data(const CVector& sol) const {
    const int m2 = p_.order_2m;
    CVector x(m2 * p_.N());
    for (int k = 0; k < p_.N(); ++k) x.segment(k * m2, m2) = sol.segment(k * block() + mc_, m2);
    return x;
  }

 private:
  struct TermData {
    int target;
    double chi;
    int m;
    std::vector<std::vector<cplx>> a;
    std::vector<Eigen::RowVectorXd> recon;
  };

  ModelProblem p_;
  int mc_;
  std::vector<double> x_;
  std::vector<Eigen::MatrixXd> integ_;
  RVector weights_;
  std::vector<PolarOperator> polar_;
  std::vector<std::vector<TermData>> terms_;
  std::vector<std::vector<std::vector<std::vector<cplx>>>> interior_coeffs_;
  std::vector<std::vector<std::vector<Eigen::RowVectorXd>>> interior_recon_;
};

inline CollocationMatrix collocation_matrix(const ModelProblem& p, cplx lambda, int mc) {
  return Collocation(p, mc).assemble(lambda);
}

inline constexpr double kCollocationRankTol = 1e-8;

/// Smallest singular value relative to the largest.
inline double relative_sigma_min(const CMatrix& a) {
  Eigen::BDCSVD<CMatrix> svd(a);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) / s(0);
}

/// Numerical left kernel of the collocation matrix, split into interior and
/// boundary parts.
inline std::vector<DualVector> adjoint_kernel(const CollocationMatrix& c, double rel_tol = kCollocationRankTol) {
  const auto sp = svd_split(c.a, rel_tol);
  CMatrix y = sp.left_null;
  normalize_columns(y);
  std::vector<DualVector> out;
  for (int j = 0; j < y.cols(); ++j) {
    DualVector d;
    d.interior = y.col(j).head(c.interior_rows);
    for (int i = 0; i < c.interior_rows; ++i) d.interior(i) /= c.weights(i);
    d.boundary = y.col(j).tail(c.a.rows() - c.interior_rows);
    out.push_back(d);
  }
  return out;
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_PENCIL_HPP
