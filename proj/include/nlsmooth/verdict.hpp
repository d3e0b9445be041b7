#ifndef NLSMOOTH_VERDICT_HPP
#define NLSMOOTH_VERDICT_HPP

#include <algorithm>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "certificate.hpp"
#include "classify.hpp"
#include "conditions.hpp"
#include "consistency.hpp"

namespace nlsmooth {

enum class VerdictKind { Smooth, ConditionallySmooth, Violated, Undetermined };

inline const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::Smooth: return "Smooth";
    case VerdictKind::ConditionallySmooth: return "ConditionallySmooth";
    case VerdictKind::Violated: return "Violated";
    default: return "Undetermined";
  }
}

/// Optional boundary data for the conditionally smooth case.
struct TraceData {
  std::vector<BoundaryTrace> traces;                  // one per row, or empty
  std::vector<std::vector<BoundaryTrace>> probes;     // probe traces for admissible data
};

struct Verdict {
  VerdictKind kind = VerdictKind::Undetermined;
  std::string trigger;  // which rule decided
  std::vector<std::string> reasons;
  std::vector<std::string> notes;
  StripReport strip;
  ConditionReport conditions;
  std::optional<ClassifiedEigenvalue> certified_eigenvalue;
  std::optional<Certificate> certificate;
  std::optional<LogWitness> witness;
  // conditionally smooth case
  std::optional<HatSystem> hat;
  std::optional<BetaDecomposition> beta;
  std::optional<PolynomialPartResult> polynomial_part;
  std::optional<ConsistencyReport> consistency;
  std::optional<ProbeReport> probes;
};

namespace detail {

/// Fixed decimals with negative zero folded to zero.
inline std::string fixed(double x, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, x);
  std::string s = buf;
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

inline std::string fmt_cplx(cplx z, int prec = 6) {
  const std::string im = fixed(z.imag(), prec);
  return fixed(z.real(), prec) + (im[0] == '-' ? "" : "+") + im + "i";
}

}  // namespace detail

inline Verdict analyze(const ModelProblem& p, const AnalysisOptions& opt = {}, const TraceData& data = {}) {
  Verdict v;
  const Pencil pen(p);
  const Collocation col(p, opt.collocation);
  v.strip = strip_report(pen, &col, opt);
  for (const auto& e : v.strip.on_edge)
    v.notes.push_back("eigenvalue " + detail::fmt_cplx(e.record.lambda) +
                      " on the upper edge of the strip; it does not enter the strip");
  for (const auto& w : v.strip.warnings) v.notes.push_back(w);
  if (v.strip.undetermined) {
    v.reasons = v.strip.reasons;
    v.trigger = "spectral search inconclusive";
    return v;
  }

  // improper eigenvalue on the line or inside the strip, least regular first
  std::vector<ClassifiedEigenvalue> improper;
  for (const auto* set : {&v.strip.lambda_set, &v.strip.on_line})
    for (const auto& e : *set)
      if (!e.verdict.proper) improper.push_back(e);
  std::stable_sort(improper.begin(), improper.end(), [](const auto& a, const auto& b) {
    return a.record.lambda.imag() > b.record.lambda.imag();
  });
  if (!improper.empty()) {
    for (const auto& e : improper) {
      auto cert = certify_eigenvalue(pen, e.record);
      if (cert.valid) {
        v.kind = VerdictKind::Violated;
        v.trigger = "improper eigenvalue in the strip";
        v.certified_eigenvalue = e;
        v.certificate = std::move(cert);
        return v;
      }
      v.reasons.push_back("certificate for " + detail::fmt_cplx(e.record.lambda) + " failed: " +
                          (cert.solution.note.empty() ? "residual or blow-up check" : cert.solution.note));
    }
    v.trigger = "improper eigenvalue without a verified certificate";
    return v;
  }

  v.conditions = check_monomial_conditions(pen, col, v.strip);
  if (v.conditions.applicable && v.conditions.verdict != Tri::Pass) {
    if (v.conditions.verdict == Tri::Fail) {
      for (const auto& w : v.conditions.witnesses)
        if (w.ok) {
          v.kind = VerdictKind::Violated;
          v.trigger = "monomial boundary data condition fails at s = " + std::to_string(w.s);
          v.witness = w;
          return v;
        }
      v.reasons.push_back("a monomial data condition fails but no witness solution verified");
    } else {
      v.reasons.push_back("a monomial data condition is too close to its threshold");
    }
    for (const auto& lv : v.conditions.levels)
      if (!lv.note.empty()) v.reasons.push_back("s = " + std::to_string(lv.s) + ": " + lv.note);
    v.trigger = "monomial data conditions inconclusive";
    return v;
  }

  if (v.strip.no_line_eigenvalues) {
    v.kind = VerdictKind::Smooth;
    v.trigger = "no eigenvalues on the critical line";
    return v;
  }

  if (v.strip.single_proper_line) {
    v.hat = build_hat_system(p);
    v.beta = beta_decompose(*v.hat);
    if (v.beta->dependent.empty()) {
      v.trigger = "differentiated boundary system has full rank although the line eigenvalue is proper";
      v.reasons.push_back(v.trigger);
      return v;
    }
    v.kind = VerdictKind::ConditionallySmooth;
    v.trigger = "single proper eigenvalue on the critical line";
    v.polynomial_part = check_polynomial_part(p, *v.hat, *v.beta);
    if (!data.traces.empty()) v.consistency = consistency_check(*v.hat, *v.beta, data.traces);
    if (!data.probes.empty()) v.probes = check_probes(p, *v.hat, *v.beta, data.probes);
    return v;
  }

  v.trigger = "critical line configuration not covered";
  for (const auto& e : v.strip.on_line)
    v.reasons.push_back("proper eigenvalue " + detail::fmt_cplx(e.record.lambda) + " on the critical line");
  return v;
}

// ---------------------------------------------------------------------------
// Plain-text rendering
// ---------------------------------------------------------------------------

namespace detail {

inline std::string row_name(const ModelProblem& p, int i) { return row_label(p.rows[i]); }

inline std::string derivative_name(const ModelProblem& p, int i, int n) {
  std::string z = "Z" + row_name(p, i);
  if (n == 0) return z;
  if (n <= 3) return z + std::string(n, '\'');
  return "d^" + std::to_string(n) + "/dr^" + std::to_string(n) + " " + z;
}

inline void append(std::string& s, const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  s += buf;
}

}  // namespace detail

inline std::string explain(const ModelProblem& p, const Verdict& v) {
  std::string s;
  using detail::append;
  append(s, "verdict: %s\n", to_string(v.kind));
  append(s, "rule: %s\n", v.trigger.c_str());
  for (const auto& r : v.reasons) append(s, "  reason: %s\n", r.c_str());
  for (const auto& n : v.notes) append(s, "  note: %s\n", n.c_str());
  const auto& st = v.strip;
  append(s, "\nstrip %g <= Im lambda < %g (2m = %d, ell = %d), |Re lambda| <= %g\n", st.line, st.edge, st.order_2m,
         st.ell, st.R_used);
  auto table = [&](const char* title, const std::vector<ClassifiedEigenvalue>& list) {
    append(s, "  %s: %s\n", title, list.empty() ? "none" : "");
    for (const auto& e : list) {
      std::string why;
      for (const auto& r : e.verdict.reasons) why += (why.empty() ? "" : "; ") + r;
      append(s, "    %s  alg %d geo %d  %s%s%s\n", detail::fmt_cplx(e.record.lambda).c_str(), e.record.alg_mult,
             e.record.geo_mult, e.verdict.proper ? "proper" : "improper", why.empty() ? "" : " (",
             why.empty() ? "" : (why + ")").c_str());
    }
  };
  table("critical line", st.on_line);
  table("inside", st.lambda_set);
  table("upper edge", st.on_edge);
  append(s, "  flags: no line eigenvalues %s, all proper %s, single proper line eigenvalue %s, improper present %s\n",
         st.no_line_eigenvalues ? "yes" : "no", st.all_proper ? "yes" : "no", st.single_proper_line ? "yes" : "no", st.improper_present ? "yes" : "no");

  if (v.conditions.applicable) {
    append(s, "\nmonomial data conditions: %s\n", to_string(v.conditions.verdict));
    for (const auto& lv : v.conditions.levels) {
      append(s, "  s = %d  %s  J = {", lv.s, lv.eigenvalue ? "eigenvalue" : "regular");
      for (std::size_t k = 0; k < lv.J.size(); ++k) append(s, "%s%s", k ? "," : "", detail::row_name(p, lv.J[k]).c_str());
      append(s, "}  kernel %d/%d", lv.kernel_dim, lv.expected_kernel);
      if (lv.eigenvalue) append(s, "  part1 %s part2 %s", lv.part1 ? "pass" : "fail", to_string(lv.part2));
      append(s, "  polynomial %s -> %s\n", to_string(lv.part3), to_string(lv.verdict));
    }
  }

  if (v.certificate) {
    const auto& c = *v.certificate;
    append(s, "\ncertificate: eigenvalue %s, log degree %d\n", detail::fmt_cplx(c.solution.function.lambda0).c_str(),
           c.solution.l0);
    append(s, "  residual interior %.3e boundary %.3e (tol %.0e)\n", c.residual.interior, c.residual.boundary,
           c.residual.tol);
    append(s, "  annulus energy ratio %.6f, expected %.6f\n", c.blowup.fitted_ratio, c.blowup.expected_ratio);
  }
  if (v.witness) {
    const auto& w = *v.witness;
    append(s, "\nwitness: s = %d, log terms %s\n", w.s, w.cn.size() ? "present" : "absent");
    append(s, "  residual interior %.3e boundary %.3e\n", w.certificate.residual.interior,
           w.certificate.residual.boundary);
    append(s, "  annulus energy ratio %.6f, expected %.6f\n", w.certificate.blowup.fitted_ratio,
           w.certificate.blowup.expected_ratio);
  }

  if (v.beta) {
    const auto& b = *v.beta;
    append(s, "\ndifferentiated boundary system: rank %d of %d\n", b.rank, int(v.hat->rows.rows()));
    for (std::size_t d = 0; d < b.dependent.size(); ++d) {
      const int row = b.dependent[d];
      std::string g = detail::derivative_name(p, row, v.hat->derivs[row]);
      for (int k = 0; k < b.rank; ++k) {
        const cplx beta = b.beta(d, k);
        if (std::abs(beta) <= 1e-14) continue;
        const int j = b.independent[k];
        g += " - (" + detail::fmt_cplx(beta, 6) + ") " + detail::derivative_name(p, j, v.hat->derivs[j]);
      }
      append(s, "  consistency: int_0^eps r^-1 |%s|^2 dr < inf\n", g.c_str());
    }
    if (v.polynomial_part)
      append(s, "  polynomial part (degree <= 2m-2): %s, max |g(0)| = %.3e\n",
             v.polynomial_part->pass ? "pass" : "fail", v.polynomial_part->max_g0);
    if (v.consistency) {
      append(s, "  supplied traces: %s\n", to_string(v.consistency->verdict));
      for (const auto& r : v.consistency->rows) {
        if (r.exact)
          append(s, "    row %s: g(0) = %s\n", detail::row_name(p, r.row).c_str(), detail::fmt_cplx(r.g0).c_str());
        else
          append(s, "    row %s: exponent %.4f, last decade share %.3e on [%.3g, %.3g] %s\n",
                 detail::row_name(p, r.row).c_str(), r.fitted_exponent, r.last_decade_change, r.r_min, r.r_max,
                 r.note.c_str());
      }
    } else {
      s += "  obligation: supply boundary traces to evaluate the consistency integral\n";
    }
    if (v.probes) {
      append(s, "  probes (checked on the given probes only): %s\n", v.probes->pass ? "pass" : "fail");
      for (std::size_t i = 0; i < v.probes->probes.size(); ++i) {
        const auto& pr = v.probes->probes[i];
        if (!pr.admissible)
          append(s, "    probe %d: not admissible (residual %.3e)\n", int(i + 1), pr.admissible_residual);
        else
          append(s, "    probe %d: %s\n", int(i + 1), to_string(pr.verdict));
      }
    } else {
      s += "  obligation: the condition on admissible data can only be checked on supplied probes\n";
    }
  }
  return s;
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_VERDICT_HPP
