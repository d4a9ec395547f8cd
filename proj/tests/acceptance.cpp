// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "bessel_sl/bessel_sl.hpp"

#include <chrono>
#include <cstdio>
#include <iostream>
#include <thread>

using namespace bessel_sl;

namespace {

// pinned tolerances
constexpr double kClosedRhoTol = 1e-10;
constexpr double kClosedWeightTol = 1e-8;
constexpr double kClosedSeconds = 60.0;
constexpr double kWronskianTol = 1e-8;
constexpr double kStokesSlopeMargin = 0.1;
constexpr double kSpectralSlopeMargin = 0.15;
constexpr double kOffSupportRatio = 1e-3;
constexpr double kNuTolFree = 0.02;
constexpr double kNuTolPerturbed = 0.05;
constexpr double kNuSpread = 0.05;
constexpr double kOracleTol = 1e-8;
constexpr double kShootingTol = 1e-7;
constexpr double kBirkhoffBound = 0.5;
constexpr double kSectorTol = 1e-8;

const int kJobs = std::max(1u, std::thread::hardware_concurrency());

Mat mat2(double a, double b, double c, double d) {
  Mat m(2, 2);
  m << a, b, c, d;
  return m;
}

BoundaryProblem closed_form() {
  return {Equation(SingularOrder({0.5}), Potential::zero(1), kPi), Mat::Zero(1, 1), Mat::Zero(1, 1)};
}

BoundaryProblem scalar_linear() {
  return {Equation(SingularOrder({0.3}), Potential::polynomial({Mat::Zero(1, 1), Mat::Constant(1, 1, 0.1)}), 1.0),
          Mat::Constant(1, 1, 0.2), Mat::Constant(1, 1, -0.1)};
}

BoundaryProblem coupled(const Mat& h, const Mat& H, bool with_q = true) {
  const Potential q = with_q ? Potential::polynomial({mat2(0.3, 0.1, 0.2, -0.4), mat2(0.05, 0.2, -0.1, 0.1)})
                             : Potential::zero(2);
  return {Equation(SingularOrder({0.7, 0.3}), q, kPi), h, H};
}

const Mat kH1 = mat2(0.2, 0.1, 0.0, -0.3), kBigH1 = mat2(0.1, 0.0, 0.2, 0.4);
const Mat kH2 = mat2(-0.4, 0.0, 0.3, 0.5), kBigH2 = mat2(0.0, -0.2, 0.0, 0.3);

BoundaryProblem coupled_perturbed() { return coupled(kH1, kBigH1); }
BoundaryProblem coupled_no_h() { return coupled(Mat::Zero(2, 2), kBigH1); }

BoundaryProblem wide_orders() {
  return {Equation(SingularOrder({1.6, 0.3}), Potential::polynomial({Mat::Zero(2, 2), Mat::Zero(2, 2),
                                                                      mat2(0.4, -0.2, 0.1, 0.3)}),
                   2.0),
          mat2(0.1, 0.0, 0.0, 0.2), Mat::Zero(2, 2)};
}

BoundaryProblem node_potential() {
  std::vector<double> xs;
  std::vector<Mat> vs;
  for (int i = 0; i <= 12; ++i) {
    const double x = 0.05 + 1.45 * i / 12.0;
    xs.push_back(x);
    vs.push_back(Mat::Constant(1, 1, std::cos(2.0 * x) + 0.5 * x));
  }
  return {Equation(SingularOrder({0.7}), Potential::nodes(xs, vs), 1.5), Mat::Zero(1, 1), Mat::Constant(1, 1, 0.3)};
}

std::vector<std::pair<std::string, BoundaryProblem>> suite() {
  return {{"closed-form", closed_form()},     {"scalar-linear", scalar_linear()}, {"coupled", coupled_perturbed()},
          {"wide-orders", wide_orders()},      {"node-potential", node_potential()}};
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const std::vector<int> kLadder{10, 13, 16, 20, 25, 32, 40};

// contour results over n = 10..40 with weights, shared by criteria 4, 5 and 7
const std::vector<ContourResult>& ladder_contours(bool with_h) {
  static std::map<bool, std::vector<ContourResult>> cache;
  auto it = cache.find(with_h);
  if (it != cache.end()) return it->second;
  SpectralOptions opt;
  opt.jobs = kJobs;
  return cache[with_h] = locate_contours(with_h ? coupled_perturbed() : coupled_no_h(), 10, 40, true, opt);
}

std::vector<ContourResult> on_ladder(const std::vector<ContourResult>& all) {
  std::vector<ContourResult> out;
  for (const auto& c : all)
    if (std::find(kLadder.begin(), kLadder.end(), c.n) != kLadder.end()) out.push_back(c);
  return out;
}

std::vector<ContourResult> ladder_for(const BoundaryProblem& bp, const std::vector<int>& ladder) {
  SpectralOptions opt;
  opt.jobs = kJobs;
  std::vector<ContourResult> out;
  for (int n : ladder) {
    auto r = locate_contours(bp, n, n, true, opt);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

// ---- 1 ----
Verdict closed_form_spectrum() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto bp = closed_form();
  SpectralOptions opt;
  opt.jobs = kJobs;
  const auto tab = locate_eigenvalues(bp, 1, 30, true, opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double rho_err = 0.0, w_err = 0.0;
  bool counts = tab.low.size() == 1 && std::abs(tab.low[0].lambda) < kClosedRhoTol;
  for (const auto& c : tab.contours) {
    counts = counts && c.count == 1 && c.eigen.size() == 1;
    if (c.eigen.empty()) continue;
    rho_err = std::max(rho_err, std::abs(c.eigen[0].rho - double(c.n)));
    w_err = std::max(w_err, std::abs(c.group_weight(0, 0) - 2.0 / kPi));
  }
  const Complex theta = asymptotic_constants(bp).theta(0);
  const double theta_err = std::abs(theta - 2.0 / kPi);
  const bool pass = counts && rho_err <= kClosedRhoTol && w_err <= kClosedWeightTol && theta_err <= kClosedWeightTol &&
                    secs < kClosedSeconds;
  return {pass, "max|rho_n - n| = " + fmt("%.2e", rho_err) + ", max|alpha_n - 2/pi| = " + fmt("%.2e", w_err) +
                    ", |theta - 2/pi| = " + fmt("%.2e", theta_err) + ", n = 0..30, " + fmt("%.1f s", secs)};
}

// ---- 2 ----
Verdict wronskian_suite() {
  double scalar = 0.0, matrix = 0.0, sigma = 0.0, literal = 0.0;
  int problems = 0;
  for (const auto& [name, bp] : suite()) {
    if (name == "closed-form") continue;
    ++problems;
    const auto& eq = bp.eq;
    for (int q = 0; q < eq.order.dim(); ++q) {
      const auto& ch = eq.order.channel(q);
      for (const Complex rho : {Complex(0.8, 0.0), Complex(6.0, 1.5), Complex(25.0, -4.0)}) {
        const std::vector<double> xs{0.05, 0.4, 1.0};
        const auto c1 = ch.c_scaled(1, xs, rho), c2 = ch.c_scaled(2, xs, rho);
        for (std::size_t i = 0; i < xs.size(); ++i)
          scalar = std::max(scalar, std::abs(scalar_wronskian(c1[i].first, c1[i].second, c2[i].first, c2[i].second) - 1.0));
      }
      for (const double theta : {0.0, 0.6, -1.2}) {
        const auto e = ch.e_ray(theta, {0.2, 1.0, 7.0, 40.0});
        for (std::size_t i = 0; i < e[0].size(); ++i)
          scalar = std::max(scalar, std::abs(scalar_wronskian(e[0][i].first, e[0][i].second, e[1][i].first,
                                                              e[1][i].second) + 2.0 * kI));
      }
      const auto& b = ch.beta().beta;
      scalar = std::max(scalar, std::abs(b.determinant() + 2.0 * kI));
      for (int j = 1; j <= 2; ++j)
        scalar = std::max(scalar, std::abs(ch.beta(2, j) - std::exp(kI * kPi * eq.order.mu(j, q)) * ch.beta(1, j)) /
                                      std::abs(ch.beta(1, j)));
    }
    const int m = eq.order.dim();
    const Mat I = Mat::Identity(m, m), Z = Mat::Zero(m, m);
    for (const Complex l : {Complex(3.0, 0.0), Complex(40.0, 12.0), Complex(-6.0, 1.0)}) {
      const auto s1 = solve_S(eq, 1, l), s2 = solve_S(eq, 2, l);
      const auto t1 = solve_S_star(eq, 1, l), t2 = solve_S_star(eq, 2, l);
      for (const double x : {0.3 * eq.T, 0.8 * eq.T}) {
        const auto a1 = s1.eval(x), a2 = s2.eval(x), b1 = t1.eval(x), b2 = t2.eval(x);
        matrix = std::max({matrix, max_norm(wronskian(b1, a2) - I), max_norm(wronskian(b2, a1) + I),
                           max_norm(wronskian(b1, a1)), max_norm(wronskian(b2, a2))});
        literal = std::max({literal, max_norm(wronskian(b1, a1) - I), max_norm(wronskian(b2, a2) + I)});
      }
      for (int k = 1; k <= 2; ++k) {
        const auto& s = k == 1 ? s1 : s2;
        const auto f = sigma_forms(eq, [&](double x) { return s.eval(x); }, l, 0.3 * eq.T, 0.8 * eq.T, 1.0);
        sigma = std::max({sigma, f.x_dependence, max_norm(f.sigma1 - (k == 1 ? I : Z)),
                          max_norm(f.sigma2 - (k == 2 ? I : Z))});
      }
    }
  }
  const bool pass = problems >= 3 && std::max({scalar, matrix, sigma}) <= kWronskianTol;
  return {pass, std::to_string(problems) + " problems; scalar " + fmt("%.1e", scalar) + ", <S*,S> " +
                    fmt("%.1e", matrix) + ", sigma_j(S_k) " + fmt("%.1e", sigma) +
                    " (diagonal-delta form of <S*,S> misses by " + fmt("%.2f", literal) + ", see README)"};
}

// ---- 3 ----
Verdict stokes_asymptotics() {
  std::string detail;
  bool pass = true;
  for (const auto& bp : {coupled_perturbed(), scalar_linear()}) {
    const auto& eq = bp.eq;
    const double bound = -eq.order.beta_exp() + kStokesSlopeMargin;
    for (const double theta : {0.2, -0.2}) {
      const double r0 = find_rho_star(eq, theta);
      const auto reps = verify_stokes_asymptotics(eq, geometric_ladder(r0, 2.0, 6), theta);
      detail += "m=" + std::to_string(eq.order.dim()) + (theta > 0 ? " upper:" : " lower:");
      for (const auto& r : reps) {
        const bool ok = r.exact || r.fit.slope <= bound;
        pass = pass && ok;
        detail += " " + r.label + (r.exact ? " exact" : " " + fmt("%.2f", r.fit.slope));
      }
      detail += " (bound " + fmt("%.2f", bound) + "); ";
    }
  }
  return {pass, detail};
}

// ---- 4 ----
Verdict eigenvalue_asymptotics() {
  std::string detail;
  bool pass = true;
  for (const bool with_h : {false, true}) {
    const auto bp = with_h ? coupled_perturbed() : coupled_no_h();
    const auto& cs = ladder_contours(with_h);
    const auto cls = channel_classes(bp.eq.order);
    bool counts = true;
    for (const auto& c : cs) counts = counts && c.count == static_cast<int>(cls.members[c.cls].size());
    const double need = bp.eq.order.beta_exp() - kSpectralSlopeMargin;
    detail += with_h ? "h != 0:" : "h = 0:";
    for (const auto& r : verify_eigenvalue_asymptotics(bp, cs)) {
      const double exponent = -r.fit.slope;
      pass = pass && exponent >= need;
      detail += " " + r.label + " " + fmt("%.2f", exponent);
    }
    pass = pass && counts;
    detail += std::string(counts ? ", counts = |J_q|" : ", COUNT MISMATCH") + " (need >= " + fmt("%.2f", need) + "); ";
  }
  return {pass, detail};
}

// ---- 5 ----
Verdict weight_asymptotics() {
  std::string detail;
  bool pass = true;
  for (const bool with_h : {false, true}) {
    const auto bp = with_h ? coupled_perturbed() : coupled_no_h();
    const auto wa = verify_weight_asymptotics(bp, ladder_contours(with_h));
    const double need = bp.eq.order.beta_exp() - kSpectralSlopeMargin;
    detail += with_h ? "h != 0:" : "h = 0:";
    for (std::size_t c = 0; c < wa.deviation.size(); ++c) {
      const double exponent = -wa.deviation[c].fit.slope;
      pass = pass && exponent >= need && wa.off_support[c] <= kOffSupportRatio;
      detail += " class" + std::to_string(c) + " " + fmt("%.2f", exponent) + " off " + fmt("%.1e", wa.off_support[c]);
    }
    detail += " (need >= " + fmt("%.2f", need) + "); ";
  }
  return {pass, detail};
}

// ---- 6 ----
Verdict spectrum_shift() {
  const auto bp = coupled_perturbed();
  const auto free = coupled(Mat::Zero(2, 2), Mat::Zero(2, 2), false);
  std::string detail;
  bool pass = true;
  for (const int n : {6, 10, 14}) {
    const double e = low_edge(bp, n);
    const int a = count_in_disk(bp, e * e), b = count_in_disk(free, e * e);
    pass = pass && a == b;
    detail += "R = " + fmt("%.1f", e * e) + ": " + std::to_string(a) + " vs " + std::to_string(b) + "; ";
  }
  return {pass, detail};
}

// ---- 7 ----
Verdict nu_recovery() {
  std::string detail;
  bool pass = true;
  auto check = [&](const std::vector<ContourResult>& cs, const SingularOrder& order, double tol, const std::string& tag,
                   std::map<int, double>* store) {
    const int nc = channel_classes(order).size();
    for (int c = 0; c < nc; ++c)
      for (const auto& e : recover_nu(cs, c)) {
        const double err = std::abs(e.nu - order.nu(e.channel));
        pass = pass && err <= tol;
        detail += tag + " nu" + std::to_string(e.channel + 1) + " " + fmt("%.4f", e.nu) + ";";
        if (store) (*store)[e.channel] = e.nu;
      }
  };
  const BoundaryProblem single{Equation(SingularOrder({0.3}), Potential::zero(1), 1.0), Mat::Zero(1, 1),
                               Mat::Zero(1, 1)};
  check(ladder_for(single, {10, 15, 22, 33, 50}), single.eq.order, kNuTolFree, " Q=0 m=1", nullptr);
  const auto free = coupled(Mat::Zero(2, 2), Mat::Zero(2, 2), false);
  check(ladder_for(free, kLadder), free.eq.order, kNuTolFree, " Q=0 m=2", nullptr);
  std::vector<std::map<int, double>> variants(3);
  const auto order = coupled_perturbed().eq.order;
  check(on_ladder(ladder_contours(true)), order, kNuTolPerturbed, " (h1,H1)", &variants[0]);
  check(on_ladder(ladder_contours(false)), order, kNuTolPerturbed, " (0,H1)", &variants[1]);
  check(ladder_for(coupled(kH2, kBigH2), kLadder), order, kNuTolPerturbed, " (h2,H2)", &variants[2]);
  double spread = 0.0;
  for (int q = 0; q < 2; ++q) {
    double lo = 1e9, hi = -1e9;
    for (auto& v : variants) {
      lo = std::min(lo, v.at(q));
      hi = std::max(hi, v.at(q));
    }
    spread = std::max(spread, hi - lo);
  }
  pass = pass && spread <= kNuSpread;
  return {pass, detail + " spread over (h,H) " + fmt("%.4f", spread)};
}

// ---- 8 ----
Verdict oracle_equivalence() {
  double worst = 0.0;
  for (const auto& [name, bp] : suite()) {
    const auto& eq = bp.eq;
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(eq.T / 100.0 + (eq.T - eq.T / 100.0) * i / 20.0);
    for (const Complex l : {Complex(2.5, 0.0), Complex(30.0, 5.0), Complex(-4.0, 0.0)})
      for (int j = 1; j <= 2; ++j) {
        const auto pic = solve_S(eq, j, l).evaluate(grid, "S");
        const auto ora = oracle::direct_integrate(eq, j, l, grid, eq.T / 100.0);
        for (std::size_t i = 0; i < grid.size(); ++i)
          worst = std::max(worst, max_norm(pic.values[i] - ora.result.values[i]) / max_norm(ora.result.values[i]));
      }
  }
  double shoot = 0.0;
  const auto bp = coupled_perturbed();
  for (const int n : {3, 10, 20}) {
    for (const auto& c : locate_contours(bp, n, n, false))
      for (const auto& e : c.eigen)
        shoot = std::max(shoot, std::abs(oracle::shooting_eigenvalue(bp, e.rho + 1e-3) - e.rho));
  }
  const auto low = locate_in_disk(bp, std::pow(low_edge(bp, 2), 2));
  for (const auto& e : low)
    if (std::abs(e.rho) > 0.5)
      shoot = std::max(shoot, std::abs(oracle::shooting_eigenvalue(bp, e.rho + 1e-3) - e.rho));
  const bool pass = worst <= kOracleTol && shoot <= kShootingTol;
  return {pass, "Picard vs ODE " + fmt("%.1e", worst) + " over 5 problems; shooting vs contour " + fmt("%.1e", shoot)};
}

// ---- 9 ----
Verdict birkhoff_contraction() {
  double bound = 0.0, decay_excess = 0.0, continuity = 0.0, cross = 0.0;
  int accepted = 0;
  for (const auto& bp : {coupled_perturbed(), scalar_linear(), wide_orders()}) {
    const auto& eq = bp.eq;
    for (const double theta : {0.4, 0.0, -0.4}) {
      const double r0 = find_rho_star(eq, theta);
      for (const double r : {r0, 2 * r0, 8 * r0})
        for (int k = 1; k <= 2; ++k) {
          const auto y = solve_Y(eq, k, std::polar(r, theta), {0.5 * eq.T, eq.T});
          ++accepted;
          bound = std::max(bound, y.contraction_bound);
          for (std::size_t i = 0; i + 1 < y.deltas.size(); ++i)
            if (y.deltas[i] > 1e-13)
              decay_excess = std::max(decay_excess, y.deltas[i + 1] / (y.contraction_bound * y.deltas[i]) - 1.0);
        }
    }
    const double r = 2.0 * find_rho_star(eq, 0.0);
    const double x = 0.6 * eq.T;
    for (int k = 1; k <= 2; ++k) {
      Mat on_axis[2];
      for (const auto sec : {Sector::Upper, Sector::Lower}) {
        BirkhoffOptions opt;
        opt.sector = sec;
        const double eps = sec == Sector::Upper ? 1e-10 : -1e-10;
        const auto a = solve_Y(eq, k, r, {x}, opt);
        const auto b = solve_Y(eq, k, std::polar(r, eps), {x}, opt);
        continuity = std::max(continuity, max_norm(a.Y.values[0] - b.Y.values[0]) / max_norm(a.Y.values[0]));
        on_axis[sec == Sector::Upper ? 0 : 1] = a.Y.values[0];
      }
      cross = std::max(cross, max_norm(on_axis[0] - on_axis[1]) / max_norm(on_axis[0]));
    }
  }
  const bool pass = bound < kBirkhoffBound && decay_excess <= 1e-6 && continuity <= kSectorTol;
  return {pass, std::to_string(accepted) + " accepted solves, max bound " + fmt("%.3f", bound) +
                    ", iterate ratio / bound - 1 <= " + fmt("%.1e", decay_excess) + ", sector continuity " +
                    fmt("%.1e", continuity) + " (cross-construction difference " + fmt("%.1e", cross) + ")"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, Verdict (*)()>> criteria{
      {"closed-form spectrum", closed_form_spectrum}, {"Wronskian suite", wronskian_suite},
      {"Stokes asymptotics", stokes_asymptotics},     {"eigenvalue asymptotics", eigenvalue_asymptotics},
      {"weight asymptotics", weight_asymptotics},     {"spectrum shift", spectrum_shift},
      {"nu recovery", nu_recovery},                   {"oracle equivalence", oracle_equivalence},
      {"Birkhoff contraction", birkhoff_contraction}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << v.detail << " ["
              << fmt("%.1f s", secs) << "]" << std::endl;
  }
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
