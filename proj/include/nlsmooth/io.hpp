#ifndef NLSMOOTH_IO_HPP
#define NLSMOOTH_IO_HPP

#include <cstdio>
#include <regex>
#include <string>
#include <vector>

#include "json.hpp"
#include "verdict.hpp"

namespace nlsmooth {

using nlohmann::json;

inline constexpr const char* kSchema = "nlsmooth/1";

// ---------------------------------------------------------------------------
// Problem documents
// ---------------------------------------------------------------------------

namespace detail {

[[noreturn]] inline void bad(const std::string& where, const std::string& what) {
  throw InputError(where + ": " + what);
}

/// Decimal string, plain number, or a multiple of pi such as "pi/2", "-0.8*pi", "3*pi/4".
inline double parse_real(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) bad(where, "expected a number or a decimal string");
  const std::string s = j.get<std::string>();
  static const std::regex pi_form(R"(^\s*([+-]?)\s*(?:(\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*\*\s*)?pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$)");
  std::smatch m;
  if (std::regex_match(s, m, pi_form)) {
    double v = pi;
    if (m[2].matched) v *= std::stod(m[2].str());
    if (m[3].matched) v /= std::stod(m[3].str());
    return m[1].str() == "-" ? -v : v;
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    bad(where, "cannot read '" + s + "' as a number");
  }
  if (used != s.size()) bad(where, "trailing characters in '" + s + "'");
  return v;
}

inline const json& need(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) bad(where, std::string("missing field '") + key + "'");
  return j.at(key);
}

inline int need_int(const json& j, const char* key, const std::string& where) {
  const auto& v = need(j, key, where);
  if (!v.is_number_integer()) bad(where + "." + key, "expected an integer");
  return v.get<int>();
}

inline cplx parse_cplx(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_array() && j.size() == 2) return {parse_real(j[0], where), parse_real(j[1], where)};
  bad(where, "expected a number or [re, im]");
}

inline HomogeneousOperator parse_op(const json& j, const std::string& where) {
  const int order = need_int(j, "order", where);
  if (order < 0) bad(where + ".order", "must be nonnegative");
  std::vector<cplx> c(order + 1, 0.0);
  const auto& list = need(j, "coeffs", where);
  if (!list.is_array()) bad(where + ".coeffs", "expected an array of [a1, a2, re, im]");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string w = where + ".coeffs[" + std::to_string(i) + "]";
    const auto& e = list[i];
    if (!e.is_array() || (e.size() != 3 && e.size() != 4)) bad(w, "expected [a1, a2, re] or [a1, a2, re, im]");
    if (!e[0].is_number_integer() || !e[1].is_number_integer()) bad(w, "powers must be integers");
    const int a1 = e[0].get<int>(), a2 = e[1].get<int>();
    if (a1 < 0 || a2 < 0 || a1 + a2 != order) bad(w, "powers must be nonnegative and sum to the order");
    c[a2] += cplx(parse_real(e[2], w), e.size() == 4 ? parse_real(e[3], w) : 0.0);
  }
  return {order, c};
}

inline std::string real_string(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline json op_json(const HomogeneousOperator& op) {
  json c = json::array();
  for (int a2 = 0; a2 <= op.order; ++a2)
    if (op.coeffs[a2] != 0.0)
      c.push_back({op.order - a2, a2, op.coeffs[a2].real() + 0.0, op.coeffs[a2].imag() + 0.0});
  return {{"order", op.order}, {"coeffs", c}};
}

inline BoundaryTrace parse_trace(const json& j, const std::string& where) {
  if (j.contains("poly")) {
    std::vector<cplx> c;
    const auto& a = j.at("poly");
    if (!a.is_array()) bad(where + ".poly", "expected an array of coefficients");
    for (std::size_t i = 0; i < a.size(); ++i) c.push_back(parse_cplx(a[i], where + ".poly"));
    return BoundaryTrace::polynomial(c);
  }
  if (j.contains("r")) {
    const auto& r = j.at("r");
    const auto& v = need(j, "values", where);
    if (!r.is_array() || !v.is_array()) bad(where, "r and values must be arrays");
    std::vector<double> rr;
    std::vector<cplx> vv;
    for (const auto& x : r) rr.push_back(parse_real(x, where + ".r"));
    for (const auto& x : v) vv.push_back(parse_cplx(x, where + ".values"));
    try {
      return BoundaryTrace::sampled(rr, vv);
    } catch (const InputError& e) {
      bad(where, e.what());
    }
  }
  bad(where, "a trace needs either 'poly' or 'r' and 'values'");
}

inline std::vector<BoundaryTrace> parse_trace_set(const json& j, int rows, const std::string& where) {
  if (!j.is_array()) bad(where, "expected an array of traces");
  std::vector<BoundaryTrace> out(rows, BoundaryTrace::polynomial({}));
  std::vector<bool> seen(rows, false);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    const int row = need_int(j[i], "row", w);
    if (row < 1 || row > rows) bad(w + ".row", "row index out of range (1-based)");
    if (seen[row - 1]) bad(w + ".row", "duplicate trace for row " + std::to_string(row));
    seen[row - 1] = true;
    out[row - 1] = parse_trace(j[i], w);
  }
  return out;
}

inline json trace_json(const BoundaryTrace& t, int row) {
  json j{{"row", row + 1}};
  auto cj = [](cplx z) { return json::array({z.real(), z.imag()}); };
  if (t.is_sampled()) {
    j["r"] = t.r;
    json v = json::array();
    for (auto z : t.values) v.push_back(cj(z));
    j["values"] = v;
  } else {
    json v = json::array();
    for (auto z : t.poly) v.push_back(cj(z));
    j["poly"] = v;
  }
  return j;
}

}  // namespace detail

struct ProblemDocument {
  ModelProblem problem;
  TraceData data;
};

/// Parses and validates a problem document. Field paths appear in error messages.
inline ProblemDocument parse_problem(const json& j) {
  using namespace detail;
  if (!j.is_object()) bad("document", "expected a JSON object");
  if (j.contains("schema") && j.at("schema") != kSchema)
    bad("schema", std::string("unsupported schema, expected ") + kSchema);
  ProblemDocument doc;
  auto& p = doc.problem;
  p.order_2m = need_int(j, "order_2m", "document");
  p.ell = need_int(j, "ell", "document");
  const auto& comps = need(j, "components", "document");
  if (!comps.is_array() || comps.empty()) bad("components", "expected a non-empty array");
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const std::string w = "components[" + std::to_string(k) + "]";
    p.half_angles.push_back(parse_real(need(comps[k], "half_angle", w), w + ".half_angle"));
    p.interior_ops.push_back(parse_op(need(comps[k], "interior_op", w), w + ".interior_op"));
  }
  const auto& rows = need(j, "rows", "document");
  if (!rows.is_array()) bad("rows", "expected an array");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string w = "rows[" + std::to_string(i) + "]";
    BoundaryRow r;
    r.component = need_int(rows[i], "component", w) - 1;
    r.side = need_int(rows[i], "side", w);
    r.mu = need_int(rows[i], "mu", w);
    r.order = need_int(rows[i], "order", w);
    const auto& terms = need(rows[i], "terms", w);
    if (!terms.is_array()) bad(w + ".terms", "expected an array");
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const std::string wt = w + ".terms[" + std::to_string(t) + "]";
      NonlocalTerm term;
      term.target = need_int(terms[t], "target", wt) - 1;
      term.rotation = terms[t].contains("rotation") ? parse_real(terms[t].at("rotation"), wt + ".rotation") : 0.0;
      term.homothety = terms[t].contains("homothety") ? parse_real(terms[t].at("homothety"), wt + ".homothety") : 1.0;
      term.op = parse_op(need(terms[t], "op", wt), wt + ".op");
      r.terms.push_back(term);
    }
    p.rows.push_back(r);
  }
  check_structure(p);
  if (j.contains("traces")) doc.data.traces = parse_trace_set(j.at("traces"), p.row_count(), "traces");
  if (j.contains("probes")) {
    const auto& pr = j.at("probes");
    if (!pr.is_array()) bad("probes", "expected an array of trace sets");
    for (std::size_t i = 0; i < pr.size(); ++i)
      doc.data.probes.push_back(parse_trace_set(pr[i], p.row_count(), "probes[" + std::to_string(i) + "]"));
  }
  return doc;
}

inline ProblemDocument parse_problem_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  return parse_problem(j);
}

inline json serialize_problem(const ProblemDocument& doc) {
  using namespace detail;
  const auto& p = doc.problem;
  json j{{"schema", kSchema}, {"order_2m", p.order_2m}, {"ell", p.ell}};
  json comps = json::array();
  for (int k = 0; k < p.N(); ++k)
    comps.push_back({{"half_angle", real_string(p.half_angles[k])}, {"interior_op", op_json(p.interior_ops[k])}});
  j["components"] = comps;
  json rows = json::array();
  for (const auto& r : p.rows) {
    json terms = json::array();
    for (const auto& t : r.terms)
      terms.push_back({{"target", t.target + 1},
                       {"rotation", real_string(t.rotation)},
                       {"homothety", real_string(t.homothety)},
                       {"op", op_json(t.op)}});
    rows.push_back({{"component", r.component + 1}, {"side", r.side}, {"mu", r.mu}, {"order", r.order}, {"terms", terms}});
  }
  j["rows"] = rows;
  if (!doc.data.traces.empty()) {
    json t = json::array();
    for (std::size_t i = 0; i < doc.data.traces.size(); ++i) t.push_back(trace_json(doc.data.traces[i], int(i)));
    j["traces"] = t;
  }
  if (!doc.data.probes.empty()) {
    json pr = json::array();
    for (const auto& set : doc.data.probes) {
      json t = json::array();
      for (std::size_t i = 0; i < set.size(); ++i) t.push_back(trace_json(set[i], int(i)));
      pr.push_back(t);
    }
    j["probes"] = pr;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace detail {

inline json cj(cplx z) { return json::array({z.real() + 0.0, z.imag() + 0.0}); }

inline json eigen_json(const ClassifiedEigenvalue& e, const char* region) {
  return {{"lambda", cj(e.record.lambda)},
          {"region", region},
          {"alg_mult", e.record.alg_mult},
          {"geo_mult", e.record.geo_mult},
          {"proper", e.verdict.proper},
          {"reasons", e.verdict.reasons},
          {"integer_gap", e.verdict.integer_gap},
          {"polynomial_residual", e.verdict.polynomial_residual},
          {"residual", e.record.residual}};
}

inline json certificate_json(const Certificate& c) {
  return {{"lambda", cj(c.solution.function.lambda0)},
          {"log_degree", c.solution.l0},
          {"valid", c.valid},
          {"residual", {{"interior", c.residual.interior}, {"boundary", c.residual.boundary}, {"tol", c.residual.tol}}},
          {"blowup",
           {{"annuli", c.blowup.n},
            {"energy", c.blowup.energy},
            {"ratios", c.blowup.ratios},
            {"fitted_ratio", c.blowup.fitted_ratio},
            {"expected_ratio", c.blowup.expected_ratio},
            {"vanishing", c.blowup.vanishing},
            {"pass", c.blowup.pass}}}};
}

inline json consistency_json(const ModelProblem& p, const ConsistencyReport& r) {
  json rows = json::array();
  for (const auto& x : r.rows) {
    json w = json::array();
    for (const auto& [i, c] : x.weights) w.push_back({{"row", row_label(p.rows[i])}, {"weight", cj(c)}});
    json o{{"row", row_label(p.rows[x.row])}, {"weights", w}, {"verdict", to_string(x.verdict)}, {"exact", x.exact}};
    if (x.exact) {
      o["g0"] = cj(x.g0);
    } else {
      o["r_min"] = x.r_min;
      o["r_max"] = x.r_max;
      o["fitted_exponent"] = x.fitted_exponent;
      o["last_decade_share"] = x.last_decade_change;
      o["integral"] = x.integral;
    }
    if (!x.note.empty()) o["note"] = x.note;
    rows.push_back(o);
  }
  return {{"verdict", to_string(r.verdict)}, {"rows", rows}};
}

inline json beta_json(const ModelProblem& p, const HatSystem& h, const BetaDecomposition& b) {
  json hat = json::array();
  for (int i = 0; i < h.rows.rows(); ++i) {
    json row = json::array();
    for (int c = 0; c < h.rows.cols(); ++c) row.push_back(cj(h.rows(i, c)));
    hat.push_back({{"row", row_label(p.rows[i])}, {"derivatives", h.derivs[i]}, {"coefficients", row}});
  }
  json ind = json::array(), dep = json::array();
  for (int i : b.independent) ind.push_back(row_label(p.rows[i]));
  for (std::size_t d = 0; d < b.dependent.size(); ++d) {
    json beta = json::array();
    for (int k = 0; k < b.rank; ++k) beta.push_back({{"row", row_label(p.rows[b.independent[k]])}, {"beta", cj(b.beta(d, k))}});
    dep.push_back({{"row", row_label(p.rows[b.dependent[d]])}, {"beta", beta}, {"residual", b.residual[d]}});
  }
  return {{"hat_system", hat}, {"rank", b.rank}, {"independent", ind}, {"dependent", dep}};
}

}  // namespace detail

inline json report_json(const ModelProblem& p, const Verdict& v) {
  using namespace detail;
  json j{{"schema", kSchema}, {"verdict", to_string(v.kind)}, {"rule", v.trigger}, {"reasons", v.reasons}, {"notes", v.notes}};
  const auto& s = v.strip;
  json eig = json::array();
  for (const auto& e : s.on_line) eig.push_back(eigen_json(e, "line"));
  for (const auto& e : s.lambda_set) eig.push_back(eigen_json(e, "inside"));
  for (const auto& e : s.on_edge) eig.push_back(eigen_json(e, "edge"));
  json straddle = json::array();
  for (auto z : s.straddling) straddle.push_back(cj(z));
  j["strip"] = {{"order_2m", s.order_2m},
                {"ell", s.ell},
                {"line", s.line},
                {"edge", s.edge},
                {"re_halfwidth", s.R_used},
                {"cap_ok", s.cap_ok},
                {"eigenvalues", eig},
                {"straddling", straddle},
                {"flags", {{"no_line_eigenvalues", s.no_line_eigenvalues}, {"all_proper", s.all_proper}, {"single_proper_line", s.single_proper_line},
                           {"improper_present", s.improper_present}}}};
  if (v.conditions.applicable) {
    json levels = json::array();
    for (const auto& lv : v.conditions.levels) {
      json J = json::array();
      for (int r : lv.J) J.push_back(row_label(p.rows[r]));
      json units = json::array();
      for (const auto& u : lv.units)
        units.push_back({{"row", row_label(p.rows[u.row])},
                         {"pairing", u.pairing},
                         {"orthogonal", to_string(u.orthogonal)},
                         {"polynomial_residual", u.polynomial_residual},
                         {"polynomial", to_string(u.polynomial)},
                         {"verdict", to_string(u.verdict)}});
      json o{{"s", lv.s},      {"eigenvalue", lv.eigenvalue}, {"J", J},
             {"kernel_dim", lv.kernel_dim}, {"expected_kernel", lv.expected_kernel}, {"part1", lv.part1},
             {"part2", to_string(lv.part2)}, {"part3", to_string(lv.part3)}, {"verdict", to_string(lv.verdict)},
             {"units", units}};
      if (!lv.note.empty()) o["note"] = lv.note;
      levels.push_back(o);
    }
    j["conditions"] = {{"verdict", to_string(v.conditions.verdict)}, {"levels", levels}};
  }
  if (v.certificate) j["certificate"] = certificate_json(*v.certificate);
  if (v.witness) {
    json c = json::array(), cn = json::array();
    for (int i = 0; i < v.witness->c.size(); ++i) c.push_back(cj(v.witness->c(i)));
    for (int i = 0; i < v.witness->cn.size(); ++i) cn.push_back(cj(v.witness->cn(i)));
    j["witness"] = {{"s", v.witness->s}, {"data", c}, {"log_coefficients", cn},
                    {"certificate", certificate_json(v.witness->certificate)}};
  }
  if (v.beta) {
    j["differentiated_system"] = beta_json(p, *v.hat, *v.beta);
    if (v.polynomial_part)
      j["polynomial_part"] = {{"pass", v.polynomial_part->pass}, {"max_g0", v.polynomial_part->max_g0}};
    if (v.consistency) j["consistency"] = consistency_json(p, *v.consistency);
    if (v.probes) {
      json pr = json::array();
      for (const auto& x : v.probes->probes) {
        json o{{"admissible", x.admissible}, {"admissible_residual", x.admissible_residual}};
        if (x.admissible) o["verdict"] = to_string(x.verdict);
        pr.push_back(o);
      }
      j["probes"] = {{"pass", v.probes->pass}, {"scope", "given probes only"}, {"results", pr}};
    }
  }
  return j;
}

inline int exit_code(VerdictKind k) {
  switch (k) {
    case VerdictKind::Smooth: return 0;
    case VerdictKind::ConditionallySmooth: return 10;
    case VerdictKind::Violated: return 20;
    default: return 30;
  }
}

// ---------------------------------------------------------------------------
// Eigenvalue table and plot
// ---------------------------------------------------------------------------

inline std::string eigen_csv(const std::vector<ClassifiedEigenvalue>& list) {
  std::string s = "re,im,alg_mult,geo_mult,proper\n";
  for (const auto& e : list)
    s += detail::fixed(e.record.lambda.real()) + "," + detail::fixed(e.record.lambda.imag()) + "," +
         std::to_string(e.record.alg_mult) + "," + std::to_string(e.record.geo_mult) + "," +
         (e.verdict.proper ? "proper" : "improper") + "\n";
  return s;
}

/// Eigenvalues in the plane with the lines Im = 1 - 2m and Im = 1 - ell.
inline std::string strip_svg(const std::vector<ClassifiedEigenvalue>& list, double im_lo, double im_hi, double line,
                             double edge) {
  double re = 1.0;
  for (const auto& e : list) re = std::max(re, std::abs(e.record.lambda.real()));
  re *= 1.15;
  const double lo = std::min({im_lo, line, edge}) - 0.25, hi = std::max({im_hi, line, edge}) + 0.25;
  const double W = 640, H = 480, M = 48;
  auto X = [&](double x) { return M + (x + re) / (2 * re) * (W - 2 * M); };
  auto Y = [&](double y) { return H - M - (y - lo) / (hi - lo) * (H - 2 * M); };
  std::string s;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" font-family=\"sans-serif\" "
                "font-size=\"12\">\n<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n",
                W, H);
  s += buf;
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%.2f\" width=\"%g\" height=\"%.2f\" fill=\"#eef3fb\"/>\n", M,
                Y(edge), W - 2 * M, Y(line) - Y(edge));
  s += buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%.2f\" y1=\"%g\" x2=\"%.2f\" y2=\"%g\" stroke=\"#999\"/>\n", X(0), M, X(0),
                H - M);
  s += buf;
  auto hline = [&](double y, const char* color, const char* label) {
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%.2f\" x2=\"%g\" y2=\"%.2f\" stroke=\"%s\" stroke-dasharray=\"6 4\"/>\n"
                  "<text x=\"%g\" y=\"%.2f\" fill=\"%s\">%s = %g</text>\n",
                  M, Y(y), W - M, Y(y), color, W - M - 150, Y(y) - 4, color, label, y);
    s += buf;
  };
  hline(line, "#c0392b", "Im 1-2m");
  hline(edge, "#2471a3", "Im 1-ell");
  for (const auto& e : list) {
    const bool pr = e.verdict.proper;
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"5\" stroke=\"black\" fill=\"%s\"/>\n",
                  X(e.record.lambda.real()), Y(e.record.lambda.imag()), pr ? "black" : "white");
    s += buf;
  }
  std::snprintf(buf, sizeof buf,
                "<text x=\"%g\" y=\"%g\">Re lambda in [%s, %s]; filled = proper, open = improper</text>\n</svg>\n", M,
                H - 12.0, detail::fixed(-re, 2).c_str(), detail::fixed(re, 2).c_str());
  s += buf;
  return s;
}

}  // namespace nlsmooth

#endif  // NLSMOOTH_IO_HPP
