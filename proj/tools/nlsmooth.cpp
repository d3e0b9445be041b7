// nlsmooth: smoothness analysis of nonlocal elliptic model problems in plane angles.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nlsmooth/nlsmooth.hpp"

using namespace nlsmooth;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string path;
  double re_halfwidth = 10.0;
  int colloc = kDefaultCollocation;
  std::string tol_group = "default";
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("problem", c.path, "problem document (JSON)")->required();
  cmd->add_option("--re-halfwidth", c.re_halfwidth, "half-width of the Re lambda search window")->check(CLI::PositiveNumber);
  cmd->add_option("--colloc-size", c.colloc, "collocation points per component")->check(CLI::Range(8, 512));
  cmd->add_option("--tol-group", c.tol_group, "default or strict")->check(CLI::IsMember({"default", "strict"}));
  cmd->add_option("--out", c.out, "directory for report files");
}

AnalysisOptions options(const Common& c) {
  AnalysisOptions o;
  o.re_halfwidth = c.re_halfwidth;
  o.collocation = c.colloc;
  if (c.tol_group == "strict") {
    o.re_halfwidth *= 2.0;
    o.collocation = std::max(o.collocation, 64);
  }
  return o;
}

ProblemDocument load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_text(ss.str());
}

void write_file(const std::string& dir, const std::string& name, const std::string& text) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  std::ofstream f(fs::path(dir) / name);
  if (!f) throw InputError("cannot write " + (fs::path(dir) / name).string());
  f << text;
}

std::pair<double, double> parse_pair(const std::string& s, const char* what) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw InputError(std::string(what) + " expects two numbers separated by a comma");
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw InputError(std::string("cannot read ") + what + " '" + s + "'");
  }
}

int cmd_analyze(const Common& c) {
  const auto doc = load(c.path);
  const auto v = analyze(doc.problem, options(c), doc.data);
  const auto text = explain(doc.problem, v);
  std::cout << text;
  write_file(c.out, "report.txt", text);
  write_file(c.out, "report.json", report_json(doc.problem, v).dump(2) + "\n");
  return exit_code(v.kind);
}

int cmd_spectrum(const Common& c, const std::string& strip) {
  const auto doc = load(c.path);
  const auto& p = doc.problem;
  const auto opt = options(c);
  double lo = 1.0 - p.order_2m - opt.strip_margin, hi = 1.0 - p.ell + opt.strip_margin;
  if (!strip.empty()) std::tie(lo, hi) = parse_pair(strip, "--strip");
  if (!(lo < hi)) throw InputError("--strip needs a < b");
  const Pencil pen(p);
  const Collocation col(p, opt.collocation);
  const auto res = find_in_strip(pen, {lo, hi, opt.re_halfwidth}, &col);
  const auto verdicts = parallel_map<PropernessVerdict>(int(res.eigenvalues.size()), [&](int i) {
    return classify_eigenvalue(pen, res.eigenvalues[i]);
  });
  std::vector<ClassifiedEigenvalue> list;
  for (std::size_t i = 0; i < res.eigenvalues.size(); ++i) list.push_back({res.eigenvalues[i], verdicts[i]});
  const auto csv = eigen_csv(list);
  std::cout << csv;
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  write_file(c.out, "eigenvalues.csv", csv);
  write_file(c.out, "strip.svg", strip_svg(list, lo, hi, 1.0 - p.order_2m, 1.0 - p.ell));
  return 0;
}

int cmd_certificate(const Common& c, const std::string& selector) {
  const auto doc = load(c.path);
  const auto& p = doc.problem;
  const auto opt = options(c);
  const Pencil pen(p);
  const Collocation col(p, opt.collocation);
  const auto strip = strip_report(pen, &col, opt);
  std::vector<ClassifiedEigenvalue> all = strip.lambda_set;
  all.insert(all.end(), strip.on_line.begin(), strip.on_line.end());
  const ClassifiedEigenvalue* pick = nullptr;
  if (selector.empty()) {
    for (const auto& e : all)
      if (!e.verdict.proper && (!pick || e.record.lambda.imag() > pick->record.lambda.imag())) pick = &e;
    if (!pick) throw InputError("no improper eigenvalue in the strip");
  } else {
    const auto [re, im] = parse_pair(selector, "--eigenvalue");
    double best = 1e-3;
    for (const auto& e : all) {
      const double d = std::abs(e.record.lambda - cplx(re, im));
      if (d < best) best = d, pick = &e;
    }
    if (!pick) throw InputError("no eigenvalue of the strip near " + selector);
    if (pick->verdict.proper) throw InputError("eigenvalue " + selector + " is proper; there is nothing to certify");
  }
  const auto cert = certify_eigenvalue(pen, pick->record);
  json bundle = detail::certificate_json(cert);
  json prof = json::array();
  if (cert.solution.ok) {
    const auto& f = cert.solution.function;
    for (int k = 0; k < p.N(); ++k) {
      const auto om = sample_angles(p.half_angles[k], 33);
      const PowerLogSampler s(pen, f, k, om, 0);
      for (int l = 0; l <= f.log_degree(); ++l)
        for (std::size_t a = 0; a < om.size(); ++a) {
          const cplx v = s.profile(l, int(a), 0);
          prof.push_back({{"component", k + 1}, {"omega", om[a]}, {"log_power", l}, {"value", detail::cj(v)}});
        }
    }
  }
  bundle["profile"] = prof;
  std::string text;
  detail::append(text, "eigenvalue %s, log degree %d, %s\n", detail::fmt_cplx(pick->record.lambda).c_str(),
                 cert.solution.l0, cert.valid ? "certificate valid" : "certificate NOT valid");
  detail::append(text, "residual interior %.3e boundary %.3e (tol %.0e)\n", cert.residual.interior,
                 cert.residual.boundary, cert.residual.tol);
  text += "annulus  energy        ratio\n";
  for (std::size_t i = 0; i < cert.blowup.n.size(); ++i)
    detail::append(text, "%7d  %.6e  %s\n", cert.blowup.n[i], cert.blowup.energy[i],
                   i ? detail::fixed(cert.blowup.ratios[i - 1]).c_str() : "");
  detail::append(text, "fitted ratio %.6f, expected %.6f\n", cert.blowup.fitted_ratio, cert.blowup.expected_ratio);
  if (!cert.solution.note.empty()) text += "note: " + cert.solution.note + "\n";
  std::cout << text;
  write_file(c.out, "certificate.txt", text);
  write_file(c.out, "certificate.json", bundle.dump(2) + "\n");
  return cert.valid ? 0 : 30;
}

int cmd_consistency(const Common& c) {
  const auto doc = load(c.path);
  const auto& p = doc.problem;
  if (doc.data.traces.empty()) throw InputError("the document has no 'traces' section");
  const auto h = build_hat_system(p);
  const auto b = beta_decompose(h);
  const auto rep = consistency_check(h, b, doc.data.traces);
  std::string text;
  detail::append(text, "differentiated boundary system: rank %d of %d\n", b.rank, p.row_count());
  if (b.dependent.empty()) text += "no dependent rows; no consistency condition arises\n";
  for (const auto& r : rep.rows) {
    text += "row " + row_label(p.rows[r.row]) + ": g =";
    for (const auto& [i, w] : r.weights)
      text += " + (" + detail::fmt_cplx(w) + ") " + detail::derivative_name(p, i, h.derivs[i]);
    text += "\n";
    if (r.exact)
      detail::append(text, "  g(0) = %s -> %s\n", detail::fmt_cplx(r.g0).c_str(), to_string(r.verdict));
    else
      detail::append(text, "  exponent %.4f, last decade share %.3e on [%.3g, %.3g] -> %s%s%s\n", r.fitted_exponent,
                     r.last_decade_change, r.r_min, r.r_max, to_string(r.verdict), r.note.empty() ? "" : "; ",
                     r.note.c_str());
  }
  detail::append(text, "overall: %s\n", to_string(rep.verdict));
  std::cout << text;
  json j = detail::consistency_json(p, rep);
  j["differentiated_system"] = detail::beta_json(p, h, b);
  write_file(c.out, "consistency.txt", text);
  write_file(c.out, "consistency.json", j.dump(2) + "\n");
  switch (rep.verdict) {
    case Consistency::Consistent: return 0;
    case Consistency::Inconsistent: return 20;
    default: return 30;
  }
}

int cmd_fixture(const std::string& name, const std::vector<double>& params) {
  ProblemDocument doc;
  doc.problem = fixture(name, params).problem;
  std::cout << serialize_problem(doc).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Smoothness of generalized solutions for nonlocal elliptic model problems in plane angles"};
  app.require_subcommand(1);
  Common common;
  std::string strip, selector, fix_name;
  std::vector<double> fix_params;
  auto* a = app.add_subcommand("analyze", "full decision procedure and report");
  add_common(a, common);
  auto* s = app.add_subcommand("spectrum", "eigenvalue table (CSV) and strip plot (SVG)");
  add_common(s, common);
  s->add_option("--strip", strip, "Im lambda range a,b");
  auto* c = app.add_subcommand("certificate", "singular power solution for an improper eigenvalue");
  add_common(c, common);
  c->add_option("--eigenvalue", selector, "re,im of the eigenvalue to certify");
  auto* k = app.add_subcommand("consistency", "consistency functional on supplied boundary traces");
  add_common(k, common);
  auto* f = app.add_subcommand("fixture", "print a built-in test problem as a document");
  f->add_option("name", fix_name, "FIX-LOC, FIX-BS, FIX-HOM or FIX-B4")->required();
  f->add_option("params", fix_params, "numeric parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (*a) return cmd_analyze(common);
    if (*s) return cmd_spectrum(common, strip);
    if (*c) return cmd_certificate(common, selector);
    if (*k) return cmd_consistency(common);
    if (*f) return cmd_fixture(fix_name, fix_params);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 30;
  }
  return 2;
}
