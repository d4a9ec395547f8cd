// bessel_sl command-line driver: one config, one command, CSV + JSON + manifest out.

#include "config.hpp"

#include "CLI11.hpp"

#include <boost/version.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace bessel_sl;
using namespace bessel_sl::cli;

namespace {

constexpr const char* kToolVersion = "1.0.0";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json cjson(Complex z) { return json::array({z.real(), z.imag()}); }

json mjson(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(cjson(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

json fit_json(const FitReport& r) {
  json j{{"label", r.label}, {"x", r.x}, {"deviation", r.deviation}, {"exact", r.exact}};
  if (!r.exact) j["slope"] = r.fit.slope, j["intercept"] = r.fit.intercept, j["residual"] = r.fit.residual;
  return j;
}

Complex complex_param(const json& t, const char* key, Complex def) {
  if (!t.contains(key)) return def;
  const auto& v = t.at(key);
  if (v.is_number()) return v.get<double>();
  if (!v.is_array() || v.size() != 2) throw ParseError(std::string("task field '") + key + "' must be [re, im]");
  return {v[0].get<double>(), v[1].get<double>()};
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { row(header); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
    text_ += "\n";
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct Output {
  Csv csv;
  json data = json::object();
};

struct Context {
  ProblemConfig cfg;
  std::string command;
  int jobs = 1;
  json task = json::object();

  const BoundaryProblem& bp() const { return cfg.problem; }
  const Equation& eq() const { return cfg.problem.eq; }
  SpectralOptions spectral() const {
    auto s = cfg.solver.spectral;
    s.jobs = jobs;
    return s;
  }
  StokesOptions stokes() const {
    StokesOptions s;
    s.tol = cfg.solver.stokes_tol;
    s.birkhoff = cfg.solver.birkhoff;
    s.fss = cfg.solver.fss;
    return s;
  }
};

std::vector<std::string> weight_header(int m) {
  std::vector<std::string> h{"n", "q", "re_rho", "im_rho", "multiplicity"};
  for (int r = 1; r <= m; ++r)
    for (int c = 1; c <= m; ++c) {
      h.push_back("re_w" + std::to_string(r) + std::to_string(c));
      h.push_back("im_w" + std::to_string(r) + std::to_string(c));
    }
  return h;
}

// ---- commands ----

Output cmd_fss(const Context& ctx) {
  const auto& eq = ctx.eq();
  const Complex lambda = complex_param(ctx.task, "lambda", 1.0);
  std::vector<double> xs;
  if (ctx.task.contains("x")) {
    xs = ctx.task.at("x").get<std::vector<double>>();
  } else {
    for (int i = 1; i <= 10; ++i) xs.push_back(eq.T * i / 10.0);
  }
  for (double x : xs)
    if (!(x > 0.0 && x <= eq.T)) throw DomainError("fss abscissas must lie in (0, T]");
  std::sort(xs.begin(), xs.end());
  const auto families = ctx.task.value("families", std::vector<std::string>{"S1", "S2"});
  Output out{Csv({"family", "x", "row", "col", "re_value", "im_value", "re_deriv", "im_deriv"})};
  out.data["lambda"] = cjson(lambda);
  out.data["families"] = json::object();
  const int m = eq.order.dim();
  for (const auto& f : families) {
    FssEvaluation ev;
    json info;
    if (f == "S1" || f == "S2" || f == "S1*" || f == "S2*" || f == "phi") {
      const int j = f[1] == '2' ? 2 : 1;
      const auto& o = ctx.cfg.solver.fss;
      const auto sol = f == "phi" ? phi(ctx.bp(), lambda, o) : f.size() == 3 ? solve_S_star(eq, j, lambda, o) : solve_S(eq, j, lambda, o);
      ev = sol.evaluate(xs, f);
      info = {{"picard_iterations", sol.report().total_iterations},
              {"max_panel_iterations", sol.report().max_panel_iterations},
              {"panel_splits", sol.report().panel_splits},
              {"contraction", sol.report().contraction}};
    } else if (f == "Y1" || f == "Y2") {
      const auto y = solve_Y(eq, f[1] - '0', rho_of(lambda), xs, ctx.cfg.solver.birkhoff);
      ev = y.Y;
      info = {{"contraction_bound", y.contraction_bound}, {"iterations", y.deltas.size()}, {"deltas", y.deltas}};
    } else {
      throw ParseError("task field 'fss.families' has unknown family '" + f + "'");
    }
    out.data["families"][f] = info;
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
          const Complex v = ev.values[i](r, c), d = ev.derivatives[i](r, c);
          out.csv.row({f, num(xs[i]), std::to_string(r + 1), std::to_string(c + 1), num(v.real()), num(v.imag()),
                       num(d.real()), num(d.imag())});
        }
  }
  return out;
}

Output cmd_stokes(const Context& ctx) {
  const auto& eq = ctx.eq();
  const auto thetas = ctx.task.value("theta", std::vector<double>{0.2, -0.2});
  const double ratio = ctx.task.value("ratio", 2.0);
  const int count = ctx.task.value("count", 6);
  const int m = eq.order.dim();
  Output out{Csv({"re_rho", "im_rho", "k", "j", "row", "col", "re_B", "im_B", "deviation"})};
  out.data["beta_exponent"] = eq.order.beta_exp();
  out.data["rays"] = json::array();
  for (double theta : thetas) {
    const double r0 = ctx.task.contains("rho_start") ? ctx.task.at("rho_start").get<double>()
                                                     : find_rho_star(eq, theta, 1.0, ctx.cfg.solver.birkhoff);
    const auto radii = geometric_ladder(r0, ratio, count);
    json ray{{"theta", theta}, {"rho_start", r0}, {"samples", json::array()}};
    std::vector<FitReport> reps(4);
    for (int k = 1; k <= 2; ++k)
      for (int j = 1; j <= 2; ++j) reps[(k - 1) * 2 + j - 1].label = "B" + std::to_string(k) + std::to_string(j);
    for (double r : radii) {
      const Complex rho = std::polar(r, theta);
      const auto s = compute_B(eq, rho, ctx.stokes());
      ray["samples"].push_back({{"rho", cjson(rho)},
                                {"contraction_bound", s.bound},
                                {"abscissa_mismatch", s.abscissa_mismatch},
                                {"reconstruction", s.reconstruction}});
      for (int k = 1; k <= 2; ++k)
        for (int j = 1; j <= 2; ++j) {
          const double dev = stokes_deviation(eq.order, s, k, j);
          auto& rep = reps[(k - 1) * 2 + j - 1];
          rep.x.push_back(r);
          rep.deviation.push_back(dev);
          const Mat& B = s.B[k - 1][j - 1];
          for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
              out.csv.row({num(rho.real()), num(rho.imag()), std::to_string(k), std::to_string(j), std::to_string(a + 1),
                           std::to_string(b + 1), num(B(a, b).real()), num(B(a, b).imag()), num(dev)});
        }
    }
    ray["fits"] = json::array();
    for (auto& rep : reps) {
      rep.finish();
      ray["fits"].push_back(fit_json(rep));
    }
    out.data["rays"].push_back(ray);
  }
  return out;
}

json contour_json(const ContourResult& c) {
  json roots = json::array();
  for (const auto& e : c.eigen)
    roots.push_back({{"rho", cjson(e.rho)}, {"multiplicity", e.multiplicity}, {"polished", e.polished}});
  json j{{"n", c.n},
         {"class", c.cls},
         {"group", c.group},
         {"center", c.center.real()},
         {"radius", c.radius},
         {"count", c.count},
         {"count_residual", c.count_residual},
         {"winding", c.winding},
         {"floor_ratio", c.floor_ratio},
         {"radius_retries", c.radius_retries},
         {"nodes", c.nodes},
         {"roots", roots}};
  if (c.has_weight) {
    j["group_weight"] = mjson(c.group_weight);
    j["weight_doubling"] = c.weight_doubling;
  }
  return j;
}

Output spectrum(const Context& ctx, bool with_weights) {
  const auto& bp = ctx.bp();
  const int m = bp.dim();
  const int n_min = ctx.task.value("n_min", 1), n_max = ctx.task.value("n_max", 30);
  const int fit_from = ctx.task.value("fit_from", n_max >= 13 ? 10 : n_min);
  const bool low = ctx.task.value("low", true);
  const auto opt = ctx.spectral();
  SpectrumTable tab;
  if (low) {
    tab = locate_eigenvalues(bp, n_min, n_max, with_weights, opt);
  } else {
    tab.n0 = n_min;
    tab.contours = locate_contours(bp, n_min, n_max, with_weights, opt);
  }
  Output out{Csv(with_weights ? weight_header(m) : std::vector<std::string>{"n", "q", "re_rho", "im_rho", "multiplicity"})};
  const auto cls = channel_classes(bp.eq.order);
  const auto k = asymptotic_constants(bp);
  out.data["classes"] = json::array();
  for (int c = 0; c < cls.size(); ++c) out.data["classes"].push_back({{"frac", cls.frac[c]}, {"channels", cls.members[c]}});
  out.data["beta_exponent"] = bp.eq.order.beta_exp();
  out.data["P"] = k.P;
  out.data["low_disk_radius"] = tab.low_radius;
  out.data["low"] = json::array();
  int serial = 0;
  for (const auto& d : tab.low) {
    out.data["low"].push_back({{"lambda", cjson(d.lambda)}, {"rho", cjson(d.rho)}, {"multiplicity", d.multiplicity}});
    std::vector<std::string> row{std::to_string(serial), "0", num(d.rho.real()), num(d.rho.imag()),
                                 std::to_string(d.multiplicity)};
    if (with_weights) {
      const Mat w = residue_richardson(bp, d.lambda, 1e-3 * std::max(1.0, std::abs(d.lambda)), opt.fss);
      out.data["low"].back()["weight"] = mjson(w);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          row.push_back(num(w(a, b).real()));
          row.push_back(num(w(a, b).imag()));
        }
    }
    out.csv.row(row);
    ++serial;
  }
  out.data["contours"] = json::array();
  for (const auto& c : tab.contours) {
    out.data["contours"].push_back(contour_json(c));
    for (const auto& e : c.eigen) {
      std::vector<std::string> row{std::to_string(c.n), std::to_string(c.group.front() + 1), num(e.rho.real()),
                                   num(e.rho.imag()), std::to_string(e.multiplicity)};
      if (with_weights)
        for (int a = 0; a < m; ++a)
          for (int b = 0; b < m; ++b) {
            row.push_back(num(c.group_weight(a, b).real()));
            row.push_back(num(c.group_weight(a, b).imag()));
          }
      out.csv.row(row);
    }
  }
  std::vector<ContourResult> tail;
  for (const auto& c : tab.contours)
    if (c.n >= fit_from) tail.push_back(c);
  auto enough = [&] {
    for (int c = 0; c < cls.size(); ++c)
      if (std::count_if(tail.begin(), tail.end(), [&](const auto& r) { return r.cls == c; }) < 3) return false;
    return true;
  };
  if (enough()) {
    out.data["fit_from"] = fit_from;
    out.data["eigenvalue_fits"] = json::array();
    for (const auto& r : verify_eigenvalue_asymptotics(bp, tail)) out.data["eigenvalue_fits"].push_back(fit_json(r));
    if (with_weights) {
      const auto wa = verify_weight_asymptotics(bp, tail);
      out.data["weight_fits"] = json::array();
      for (std::size_t c = 0; c < wa.deviation.size(); ++c)
        out.data["weight_fits"].push_back({{"fit", fit_json(wa.deviation[c])},
                                           {"A", mjson(k.A[c])},
                                           {"limit", mjson(wa.limit[c])},
                                           {"off_support_ratio", wa.off_support[c]}});
    }
  }
  if (with_weights) {
    json th = json::array();
    for (int q = 0; q < m; ++q) th.push_back(cjson(k.theta(q)));
    out.data["theta"] = th;
  }
  return out;
}

Output cmd_recover_nu(const Context& ctx) {
  const auto& bp = ctx.bp();
  const auto ladder = ctx.task.value("ladder", std::vector<int>{10, 13, 16, 20, 25, 32, 40});
  std::vector<ContourResult> cs;
  for (int n : ladder) {
    auto r = locate_contours(bp, n, n, true, ctx.spectral());
    cs.insert(cs.end(), r.begin(), r.end());
  }
  Output out{Csv({"q", "nu", "nu_estimate", "slope", "raw_slope", "residual"})};
  out.data["ladder"] = ladder;
  out.data["estimates"] = json::array();
  std::vector<NuEstimate> all;
  for (int c = 0; c < channel_classes(bp.eq.order).size(); ++c)
    for (const auto& e : recover_nu(cs, c)) all.push_back(e);
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.channel < b.channel; });
  for (const auto& e : all) {
    out.csv.row({std::to_string(e.channel + 1), num(bp.eq.order.nu(e.channel)), num(e.nu), num(e.slope), num(e.raw_slope), num(e.residual)});
    out.data["estimates"].push_back({{"q", e.channel + 1}, {"nu_estimate", e.nu}, {"slope", e.slope}, {"raw_slope", e.raw_slope}, {"residual", e.residual}});
  }
  return out;
}

Output cmd_oracle_diff(const Context& ctx) {
  const auto& eq = ctx.eq();
  std::vector<Complex> lambdas{2.5, Complex(30.0, 5.0)};
  if (ctx.task.contains("lambda")) {
    lambdas.clear();
    for (const auto& v : ctx.task.at("lambda")) lambdas.push_back(complex_param(json{{"v", v}}, "v", 0.0));
  }
  const double x0 = ctx.task.value("x0", eq.T / 100.0);
  const int points = ctx.task.value("points", 21);
  std::vector<double> grid;
  for (int i = 0; i < points; ++i) grid.push_back(x0 + (eq.T - x0) * i / (points - 1));
  Output out{Csv({"kind", "re_lambda", "im_lambda", "family", "max_rel_deviation"})};
  out.data["x0"] = x0;
  out.data["comparisons"] = json::array();
  for (const Complex l : lambdas)
    for (int j = 1; j <= 2; ++j) {
      const auto pic = solve_S(eq, j, l, ctx.cfg.solver.fss).evaluate(grid, "S");
      const auto ora = oracle::direct_integrate(eq, j, l, grid, x0);
      double worst = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i)
        worst = std::max(worst, max_norm(pic.values[i] - ora.result.values[i]) / max_norm(ora.result.values[i]));
      const std::string fam = "S" + std::to_string(j);
      out.csv.row({"fss", num(l.real()), num(l.imag()), fam, num(worst)});
      out.data["comparisons"].push_back({{"lambda", cjson(l)}, {"family", fam}, {"max_rel_deviation", worst}});
    }
  const auto shooting = ctx.task.value("shooting_n", std::vector<int>{});
  for (int n : shooting)
    for (const auto& c : locate_contours(ctx.bp(), n, n, false, ctx.spectral()))
      for (const auto& e : c.eigen) {
        const Complex s = oracle::shooting_eigenvalue(ctx.bp(), e.rho + 1e-3);
        const double d = std::abs(s - e.rho);
        out.csv.row({"eigenvalue", num((e.rho * e.rho).real()), num((e.rho * e.rho).imag()), "rho", num(d)});
        out.data["comparisons"].push_back({{"n", n}, {"rho_contour", cjson(e.rho)}, {"rho_shooting", cjson(s)}, {"deviation", d}});
      }
  return out;
}

Output cmd_verify(const Context& ctx) {
  const auto& eq = ctx.eq();
  const int m = eq.order.dim();
  const double tol = ctx.task.value("tol", 1e-8) * ctx.cfg.solver.tol_scale;
  Output out{Csv({"check", "value", "tolerance", "pass"})};
  out.data["checks"] = json::array();
  bool all = true;
  auto record = [&](const std::string& name, double v, double t) {
    const bool ok = v <= t;
    all = all && ok;
    out.csv.row({name, num(v), num(t), ok ? "1" : "0"});
    out.data["checks"].push_back({{"check", name}, {"value", v}, {"tolerance", t}, {"pass", ok}});
  };
  double c12 = 0.0, e12 = 0.0, detb = 0.0, rel = 0.0;
  for (int q = 0; q < m; ++q) {
    const auto& ch = eq.order.channel(q);
    for (const Complex rho : {Complex(0.8, 0.0), Complex(6.0, 1.5), Complex(25.0, -4.0)}) {
      const std::vector<double> xs{0.05 * eq.T, 0.5 * eq.T, eq.T};
      const auto a = ch.c_scaled(1, xs, rho), b = ch.c_scaled(2, xs, rho);
      // relative to the size of the cancelling products
      for (std::size_t i = 0; i < xs.size(); ++i)
        c12 = std::max(c12, std::abs(scalar_wronskian(a[i].first, a[i].second, b[i].first, b[i].second) - 1.0) /
                                std::max(1.0, std::abs(a[i].first * b[i].second) + std::abs(a[i].second * b[i].first)));
    }
    for (double theta : {0.0, 0.7, -0.7}) {
      const auto e = ch.e_ray(theta, {0.3, 3.0, 30.0});
      for (std::size_t i = 0; i < e[0].size(); ++i)
        e12 = std::max(e12, std::abs(scalar_wronskian(e[0][i].first, e[0][i].second, e[1][i].first, e[1][i].second) +
                                     2.0 * kI));
    }
    detb = std::max(detb, std::abs(ch.beta().beta.determinant() + 2.0 * kI));
    for (int j = 1; j <= 2; ++j)
      rel = std::max(rel, std::abs(ch.beta(2, j) - std::exp(kI * kPi * eq.order.mu(j, q)) * ch.beta(1, j)) /
                              std::abs(ch.beta(1, j)));
  }
  record("wronskian_c1_c2", c12, tol);
  record("wronskian_e1_e2", e12, tol);
  record("det_beta", detb, tol);
  record("beta_2j_relation", rel, tol);
  const Complex lambda = complex_param(ctx.task, "lambda", Complex(5.0, 1.0));
  const Mat I = Mat::Identity(m, m), Z = Mat::Zero(m, m);
  const auto s1 = solve_S(eq, 1, lambda, ctx.cfg.solver.fss), s2 = solve_S(eq, 2, lambda, ctx.cfg.solver.fss);
  const auto t1 = solve_S_star(eq, 1, lambda, ctx.cfg.solver.fss), t2 = solve_S_star(eq, 2, lambda, ctx.cfg.solver.fss);
  double ws = 0.0;
  for (double x : {0.25 * eq.T, 0.75 * eq.T}) {
    const auto a1 = s1.eval(x), a2 = s2.eval(x), b1 = t1.eval(x), b2 = t2.eval(x);
    ws = std::max({ws, max_norm(wronskian(b1, a2) - I), max_norm(wronskian(b2, a1) + I), max_norm(wronskian(b1, a1)),
                   max_norm(wronskian(b2, a2))});
  }
  record("wronskian_S_star_S", ws, tol);
  double sig = 0.0;
  for (int k = 1; k <= 2; ++k) {
    const auto& s = k == 1 ? s1 : s2;
    const auto f = sigma_forms(eq, [&](double x) { return s.eval(x); }, lambda, 0.3 * eq.T, 0.8 * eq.T, 1.0,
                               ctx.cfg.solver.fss);
    sig = std::max({sig, f.x_dependence, max_norm(f.sigma1 - (k == 1 ? I : Z)), max_norm(f.sigma2 - (k == 2 ? I : Z))});
  }
  record("sigma_j_S_k", sig, tol);
  std::vector<double> xs;
  for (int i = 1; i <= 8; ++i) xs.push_back(eq.T * i / 8.0);
  record("volterra_residual_S1", volterra_residual(s1, eq, xs), tol);
  const double r0 = find_rho_star(eq, 0.3, 1.0, ctx.cfg.solver.birkhoff);
  const auto st = compute_B(eq, std::polar(2.0 * r0, 0.3), ctx.stokes());
  record("birkhoff_bound_below_half", std::max(st.bound[0], st.bound[1]), 0.5);
  record("stokes_abscissa_mismatch", st.abscissa_mismatch, tol);
  record("stokes_reconstruction", st.reconstruction, tol);
  const auto ora = oracle::direct_integrate(eq, 1, lambda, {eq.T / 2.0, eq.T}, eq.T / 100.0);
  record("oracle_S1", max_norm(s1.eval(eq.T).value - ora.result.values[1]) / max_norm(ora.result.values[1]), tol);
  out.data["all_pass"] = all;
  if (!all) out.data["note"] = "at least one invariant exceeded its tolerance";
  return out;
}

// ---- driver ----

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Parse: return 2;
    case ErrorKind::Domain: return 3;
    case ErrorKind::Accuracy: return 4;
    case ErrorKind::Regime:
    case ErrorKind::RhoTooSmall: return 5;
    case ErrorKind::Localization: return 6;
  }
  return 1;
}

const char* kind_name(int code) {
  switch (code) {
    case 2: return "parse";
    case 3: return "domain";
    case 4: return "accuracy";
    case 5: return "regime";
    case 6: return "localization";
  }
  return "internal";
}

int fail(int code, const std::string& command, const std::string& what) {
  std::cerr << json{{"error", kind_name(code)}, {"command", command}, {"message", what}, {"exit_code", code}}.dump()
            << std::endl;
  return code;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

json tolerances(const SolverConfig& s) {
  return {{"picard_tol", s.fss.picard_tol},
          {"max_iterations", s.fss.max_iterations},
          {"near_radius", s.fss.mesh.near_radius},
          {"max_panel_width", s.fss.mesh.max_width},
          {"birkhoff_tol", s.birkhoff.picard_tol},
          {"birkhoff_accept_bound", s.birkhoff.accept_bound},
          {"contour_samples", s.spectral.samples},
          {"safety_floor", s.spectral.safety_floor},
          {"newton_tol", s.spectral.newton_tol},
          {"newton_max", s.spectral.newton_max},
          {"doubling_tol", s.spectral.doubling_tol},
          {"stokes_tol", s.stokes_tol},
          {"tol_scale", s.tol_scale}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bessel-type matrix Sturm-Liouville solver"};
  app.require_subcommand(1, 1);
  std::string config, out_dir;
  int jobs = 1;
  double tol_scale = 1.0;
  app.add_option("--config", config, "problem configuration (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (default: next to the config)");
  app.add_option("--jobs", jobs, "worker threads for contour evaluation")->check(CLI::PositiveNumber);
  app.add_option("--tol-scale", tol_scale, "multiplier for every solver tolerance")->check(CLI::PositiveNumber);
  const std::vector<std::pair<std::string, std::string>> commands{
      {"fss", "solve and dump S, S*, phi, Y families"},
      {"stokes", "Stokes multiplier tables and large-rho fits"},
      {"eigs", "eigenvalue table and asymptotic fits"},
      {"weights", "group weights and asymptotic fits"},
      {"recover-nu", "estimate nu from the diagonal weight growth"},
      {"verify", "invariant suite for the configured problem"},
      {"oracle-diff", "Picard solutions and eigenvalues against the direct ODE oracle"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail(2, "", e.what());
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    Context ctx{load_config(config, tol_scale), command, jobs, json::object()};
    const std::string key = command == "recover-nu" ? "recover_nu" : command == "oracle-diff" ? "oracle_diff" : command;
    if (ctx.cfg.tasks.contains(key)) ctx.task = ctx.cfg.tasks.at(key);
    Output out = command == "fss"           ? cmd_fss(ctx)
                 : command == "stokes"      ? cmd_stokes(ctx)
                 : command == "eigs"        ? spectrum(ctx, false)
                 : command == "weights"     ? spectrum(ctx, true)
                 : command == "recover-nu"  ? cmd_recover_nu(ctx)
                 : command == "verify"      ? cmd_verify(ctx)
                                            : cmd_oracle_diff(ctx);
    const fs::path dir = out_dir.empty() ? fs::absolute(config).parent_path() : fs::path(out_dir);
    fs::create_directories(dir);
    const std::string stem = fs::path(config).stem().string() + "." + command;
    out.data["command"] = command;
    out.data["config"] = ctx.cfg.source;
    write(dir / (stem + ".csv"), out.csv.text());
    write(dir / (stem + ".json"), out.data.dump(2) + "\n");
    const json manifest{{"tool", "bessel_sl"},
                        {"tool_version", kToolVersion},
                        {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                              "." + std::to_string(EIGEN_MINOR_VERSION)},
                        {"boost_version", BOOST_LIB_VERSION},
                        {"command", command},
                        {"config", fs::path(config).filename().string()},
                        {"jobs", jobs},
                        {"tolerances", tolerances(ctx.cfg.solver)},
                        {"outputs", {stem + ".csv", stem + ".json"}}};
    write(dir / (stem + ".manifest.json"), manifest.dump(2) + "\n");
    std::cout << (dir / (stem + ".csv")).string() << "\n";
    if (command == "verify" && !out.data.value("all_pass", true)) return 4;
    return 0;
  } catch (const Error& e) {
    return fail(exit_code(e.kind()), command, e.what());
  } catch (const json::exception& e) {
    return fail(2, command, e.what());
  } catch (const std::exception& e) {
    return fail(1, command, e.what());
  }
}
