#ifndef NLSMOOTH_CONDITIONS_HPP
#define NLSMOOTH_CONDITIONS_HPP

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "certificate.hpp"
#include "classify.hpp"
#include "parallel.hpp"
#include "pencil.hpp"

namespace nlsmooth {

inline constexpr double kPairingTol = 1e-8;
inline constexpr double kMonomialPolyTol = 1e-6;

enum class Tri { Pass, Fail, Undetermined };

inline const char* to_string(Tri t) {
  return t == Tri::Pass ? "pass" : t == Tri::Fail ? "fail" : "undetermined";
}

/// Tolerance test that refuses to decide within a factor 10 of the threshold.
inline Tri threshold_verdict(double value, double tol) {
  if (value <= tol / 10) return Tri::Pass;
  if (value > tol * 10) return Tri::Fail;
  return Tri::Undetermined;
}

/// Rows (0-based canonical indices) with s <= m_row - 1.
inline std::vector<int> index_set_J(const ModelProblem& p, int s) {
  std::vector<int> j;
  for (int r = 0; r < p.row_count(); ++r)
    if (s <= p.rows[r].order - 1) j.push_back(r);
  return j;
}

/// The discretized equation L(-is) phi = {0, c} for one exponent s.
class MonomialSystem {
 public:
  MonomialSystem(const Collocation& col, int s) : col_(&col), s_(s) {
    cm_ = col.assemble(cplx(0.0, -double(s)));
    svd_.compute(cm_.a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd_.singularValues();
    rank_ = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > kCollocationRankTol * sv(0)) ++rank_;
    const auto& p = col.problem();
    for (int k = 0; k < p.N(); ++k) angles_.push_back(sample_angles(p.half_angles[k]));
    const int n = int(cm_.a.cols());
    for (int c = rank_; c < n; ++c) kernel_samples_.push_back(samples(svd_.matrixV().col(c)));
  }

  int s() const { return s_; }
  int kernel_dim() const { return int(cm_.a.cols()) - rank_; }

  /// Norm of the projection of the boundary unit vector e_row onto the left kernel.
  double pairing(int row) const {
    const int at = cm_.interior_rows + row;
    double q = 0.0;
    for (int c = rank_; c < cm_.a.rows(); ++c) q += std::norm(svd_.matrixU()(at, c));
    return std::sqrt(q);
  }

  /// |<{0, c}, psi>| maximized over unit psi in the left kernel, relative to |c|.
  double pairing(const CVector& c) const {
    if (c.norm() == 0.0) return 0.0;
    const int nb = int(cm_.a.rows()) - cm_.interior_rows;
    double q = 0.0;
    for (int k = rank_; k < cm_.a.rows(); ++k) q += std::norm(svd_.matrixU().col(k).tail(nb).dot(c));
    return std::sqrt(q) / c.norm();
  }

  /// Minimum-norm solution of the collocation system with right-hand side {0, c}.
  CVector solve(const CVector& c) const {
    CVector rhs = CVector::Zero(cm_.a.rows());
    rhs.tail(c.size()) = c;
    const CVector t = svd_.matrixU().leftCols(rank_).adjoint() * rhs;
    CVector z(rank_);
    for (int i = 0; i < rank_; ++i) z(i) = t(i) / svd_.singularValues()(i);
    return svd_.matrixV().leftCols(rank_) * z;
  }

  /// Distance of the solution's profile from (degree-s polynomials) + kernel, relative.
  double polynomial_residual(const CVector& sol) const {
    const auto& p = col_->problem();
    const CVector v = samples(sol);
    const double vn = v.norm();
    if (vn == 0.0) return 0.0;
    const int ns = int(angles_[0].size());
    const int cols = p.N() * (s_ + 1) + int(kernel_samples_.size());
    CMatrix A = CMatrix::Zero(v.size(), cols);
    for (int k = 0; k < p.N(); ++k)
      for (int i = 0; i < ns; ++i)
        for (int c = 0; c <= s_; ++c) A(k * ns + i, k * (s_ + 1) + c) = std::exp(I * (double(2 * c - s_) * angles_[k][i]));
    for (std::size_t j = 0; j < kernel_samples_.size(); ++j) A.col(p.N() * (s_ + 1) + j) = kernel_samples_[j];
    const CVector coef = A.colPivHouseholderQr().solve(v);
    return (v - A * coef).norm() / vn;
  }

  CVector samples(const CVector& sol) const {
    const auto& p = col_->problem();
    const int ns = int(angles_[0].size());
    CVector v(p.N() * ns);
    for (int k = 0; k < p.N(); ++k)
      for (int i = 0; i < ns; ++i) v(k * ns + i) = col_->evaluate(sol, k, angles_[k][i], 0);
    return v;
  }

 private:
  const Collocation* col_;
  int s_;
  CollocationMatrix cm_;
  Eigen::BDCSVD<CMatrix> svd_;
  int rank_ = 0;
  std::vector<std::vector<double>> angles_;
  std::vector<CVector> kernel_samples_;
};

struct MonomialSolve {
  int row = -1;  // unit vector e_row, or -1 for a general c
  double pairing = 0.0;
  Tri orthogonal = Tri::Pass;
  double polynomial_residual = -1.0;  // -1 when no solution was attempted
  Tri polynomial = Tri::Pass;
  Tri verdict = Tri::Pass;
};

/// Checks one right-hand side: solvability (if -is is an eigenvalue) and
/// polynomiality of some solution.
inline MonomialSolve solve_monomial(const MonomialSystem& sys, const CVector& c, bool eigenvalue) {
  MonomialSolve m;
  if (eigenvalue) {
    m.pairing = sys.pairing(c);
    m.orthogonal = threshold_verdict(m.pairing, kPairingTol);
  }
  if (m.orthogonal != Tri::Fail) {
    m.polynomial_residual = sys.polynomial_residual(sys.solve(c));
    m.polynomial = threshold_verdict(m.polynomial_residual, kMonomialPolyTol);
  } else {
    m.polynomial = Tri::Fail;
  }
  if (m.orthogonal == Tri::Fail || m.polynomial == Tri::Fail)
    m.verdict = Tri::Fail;
  else if (m.orthogonal == Tri::Undetermined || m.polynomial == Tri::Undetermined)
    m.verdict = Tri::Undetermined;
  return m;
}

/// V = r^s phi_c + r^s (i ln r) sum c_n phi^{(n)} solving P V = 0, B V = c r^{s - m}.
struct LogWitness {
  int s = 0;
  CVector c;
  CVector cn;  // empty when -is is not an eigenvalue
  PowerLogFunction V;
  Certificate certificate;
  double pairing_rcond = 0.0;
  bool ok = false;
  std::string note;
};

inline LogWitness witness_log_solution(const Pencil& pen, int s, const CVector& c) {
  LogWitness w;
  w.s = s;
  w.c = c;
  const cplx ls(0.0, -double(s));
  const auto M = pen.taylor(ls, 2);
  const auto sp = svd_split(M[0], kRankTol);
  const int J = int(sp.right_null.cols());
  CVector y0 = CVector::Zero(pen.size());
  if (J > 0) {
    const CMatrix G = sp.left_null.adjoint() * M[1] * sp.right_null;
    Eigen::JacobiSVD<CMatrix> gs(G);
    w.pairing_rcond = gs.singularValues()(J - 1) / gs.singularValues()(0);
    if (w.pairing_rcond < 1e-10) {
      w.note = "pairing matrix with the derivative of the pencil is degenerate; rerun at higher resolution";
      return w;
    }
    w.cn = G.fullPivLu().solve(sp.left_null.adjoint() * c);
    y0 = sp.right_null * w.cn;
  }
  Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(M[0]);
  cod.setThreshold(kRankTol);
  const CVector wv = cod.solve(c - M[1] * y0);
  w.V.lambda0 = ls;
  w.V.y = J > 0 ? std::vector<std::vector<CVector>>{{wv, y0}, {y0}} : std::vector<std::vector<CVector>>{{wv}};
  w.certificate = certify(pen, w.V, J > 0 ? 1 : 0, c);
  w.ok = w.certificate.valid;
  if (!w.ok) w.note = "witness failed its residual or blow-up check";
  return w;
}

struct LevelReport {
  int s = 0;
  bool eigenvalue = false;  // s in i Lambda
  int expected_kernel = 0;
  int kernel_dim = 0;
  std::vector<int> J;
  bool part1 = true;  // only meaningful when eigenvalue
  Tri part2 = Tri::Pass;
  Tri part3 = Tri::Pass;
  Tri verdict = Tri::Pass;
  std::vector<MonomialSolve> units;  // one per row outside J
  int witness_row = -1;
  std::string note;
};

struct ConditionReport {
  bool applicable = false;  // ell <= 2m - 2
  Tri verdict = Tri::Pass;
  std::vector<LevelReport> levels;
  std::vector<LogWitness> witnesses;  // for failing levels
};

inline Tri combine(Tri a, Tri b) {
  if (a == Tri::Fail || b == Tri::Fail) return Tri::Fail;
  if (a == Tri::Undetermined || b == Tri::Undetermined) return Tri::Undetermined;
  return Tri::Pass;
}

/// One exponent s: routes to the eigenvalue case or the regular case.
inline LevelReport check_level(const Collocation& col, int s, int expected_kernel) {
  const auto& p = col.problem();
  LevelReport lv;
  lv.s = s;
  lv.eigenvalue = expected_kernel > 0;
  lv.expected_kernel = expected_kernel;
  lv.J = index_set_J(p, s);
  lv.part1 = !lv.J.empty();
  const MonomialSystem sys(col, s);
  lv.kernel_dim = sys.kernel_dim();
  if (lv.kernel_dim != expected_kernel) {
    lv.verdict = Tri::Undetermined;
    lv.note = "collocation kernel dimension " + std::to_string(lv.kernel_dim) + " differs from the spectral count " +
              std::to_string(expected_kernel);
    return lv;
  }
  double worst = -1.0;
  for (int r = 0; r < p.row_count(); ++r) {
    if (std::find(lv.J.begin(), lv.J.end(), r) != lv.J.end()) continue;
    CVector c = CVector::Zero(p.row_count());
    c(r) = 1.0;
    auto m = solve_monomial(sys, c, lv.eigenvalue);
    m.row = r;
    lv.part2 = combine(lv.part2, m.orthogonal);
    if (m.orthogonal != Tri::Fail) lv.part3 = combine(lv.part3, m.polynomial);
    const double badness = m.orthogonal == Tri::Fail ? 10.0 + m.pairing : m.polynomial_residual;
    if (m.verdict == Tri::Fail && badness > worst) {
      worst = badness;
      lv.witness_row = r;
    }
    lv.units.push_back(m);
  }
  lv.verdict = lv.eigenvalue ? combine(combine(lv.part1 ? Tri::Pass : Tri::Fail, lv.part2), lv.part3) : lv.part3;
  return lv;
}

/// Monomial-data conditions for every s in ell..2m-2, with log witnesses for failures.
inline ConditionReport check_monomial_conditions(const Pencil& pen, const Collocation& col, const StripReport& strip) {
  const auto& p = pen.problem();
  ConditionReport rep;
  rep.applicable = p.ell <= p.order_2m - 2;
  if (!rep.applicable) return rep;
  std::vector<int> levels;
  for (int s = p.ell; s <= p.order_2m - 2; ++s) levels.push_back(s);
  rep.levels = parallel_map<LevelReport>(int(levels.size()), [&](int i) {
    const int s = levels[i];
    int geo = 0;
    for (const auto& e : strip.lambda_set)
      if (std::abs(e.record.lambda - cplx(0.0, -double(s))) <= kIntegerTol) geo = e.record.geo_mult;
    return check_level(col, s, geo);
  });
  for (const auto& lv : rep.levels) {
    rep.verdict = combine(rep.verdict, lv.verdict);
    if (lv.verdict == Tri::Fail && lv.witness_row >= 0) {
      CVector c = CVector::Zero(p.row_count());
      c(lv.witness_row) = 1.0;
      rep.witnesses.push_back(witness_log_solution(pen, lv.s, c));
    }
  }
  return rep;
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_CONDITIONS_HPP
