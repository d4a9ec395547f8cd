#pragma once

// Independent reference solutions: closed forms for Q = 0 and direct ODE
// integration from a Frobenius seed near x = 0.

#include "matrix_fss.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <functional>
#include <map>

namespace bessel_sl::oracle {

/// Closed forms: "half_c1", "half_c2", "half_e1", "half_e2" (nu = 1/2, c10 = c20 = 1),
/// "bessel_c1:<nu>", "bessel_c2:<nu>" (real rho x, c10 = 1), "hankel_e1:<nu>", "hankel_e2:<nu>".
inline Complex closed_form_reference(const std::string& id, double x, Complex rho) {
  const Complex z = rho * x;
  if (id == "half_c1") return std::cos(z);
  if (id == "half_c2") return std::sin(z) / rho;
  if (id == "half_e1") return std::exp(kI * z);
  if (id == "half_e2") return std::exp(-kI * z);
  const auto colon = id.find(':');
  if (colon == std::string::npos) throw DomainError("unknown closed-form case: " + id);
  const std::string kind = id.substr(0, colon);
  const double nu = std::stod(id.substr(colon + 1));
  if (rho.imag() != 0.0 || rho.real() <= 0.0) throw DomainError("Bessel closed forms need real positive rho");
  const double r = rho.real(), t = r * x;
  if (kind == "bessel_c1")
    return std::pow(r, nu - 0.5) * std::sqrt(t) * boost::math::cyl_bessel_j(-nu, t) * std::tgamma(1.0 - nu) /
           std::pow(2.0, nu);
  if (kind == "bessel_c2")
    return std::pow(r, -nu - 0.5) * std::sqrt(t) * boost::math::cyl_bessel_j(nu, t) * std::tgamma(1.0 + nu) *
           std::pow(2.0, nu) / (2.0 * nu);
  if (kind == "hankel_e1" || kind == "hankel_e2") {
    const Complex h{boost::math::cyl_bessel_j(nu, t), boost::math::cyl_neumann(nu, t)};
    const Complex e1 = std::sqrt(kPi * t / 2.0) * std::exp(kI * (nu * kPi / 2.0 + kPi / 4.0)) * h;
    return kind == "hankel_e1" ? e1 : std::conj(e1);
  }
  throw DomainError("unknown closed-form case: " + id);
}

/// Matrix polynomial coefficients of Q near 0 (zero, polynomial, or constant below the first node).
inline std::vector<Mat> local_polynomial(const Equation& eq, double x0) {
  const int m = eq.order.dim();
  const auto& rep = eq.q.representation();
  if (std::holds_alternative<ZeroPotential>(rep)) return {Mat::Zero(m, m)};
  if (auto* p = std::get_if<PolynomialPotential>(&rep)) return p->coeffs;
  const auto& n = std::get<NodePotential>(rep);
  if (x0 > n.nodes.front()) throw DomainError("oracle seed abscissa lies beyond the first potential node");
  return {n.values.front()};
}

/// Frobenius series of S_j at x0 (value and derivative), column q: x^{mu_jq} sum_n a_n x^n,
/// a_n = [lambda a_{n-2} - sum_l Q_l a_{n-2-l}] / (omega_r - alpha(alpha - 1)).
inline ValueDeriv frobenius_seed(const Equation& eq, int j, Complex lambda, double x0) {
  const int m = eq.order.dim();
  const auto Ql = local_polynomial(eq, x0);
  ValueDeriv out{Mat::Zero(m, m), Mat::Zero(m, m)};
  for (int q = 0; q < m; ++q) {
    const double a0 = eq.order.mu(j, q);
    const auto& ch = eq.order.channel(q);
    std::vector<CVec> a;
    a.push_back(CVec::Zero(m));
    a[0](q) = j == 1 ? ch.c10() : ch.c20();
    CVec val = CVec::Zero(m), der = CVec::Zero(m);
    double peak = 0.0;
    int small = 0;
    for (int n = 0; n < 2000; ++n) {
      if (n > 0) {
        CVec next = CVec::Zero(m);
        if (n >= 2) {
          CVec rhs = lambda * a[n - 2];
          for (std::size_t l = 0; l < Ql.size() && int(l) <= n - 2; ++l) rhs -= Ql[l] * a[n - 2 - l];
          for (int r = 0; r < m; ++r) {
            const double alpha = a0 + n;
            const double den = eq.order.omega(r) - alpha * (alpha - 1.0);
            if (std::abs(den) < 1e-12) {
              if (std::abs(rhs(r)) > 1e-300) throw DomainError("resonant Frobenius exponent with logarithmic term");
              next(r) = 0.0;
            } else {
              next(r) = rhs(r) / den;
            }
          }
        }
        a.push_back(next);
      }
      const double alpha = a0 + n;
      const double xp = std::pow(x0, alpha);
      val += a[n] * xp;
      der += a[n] * (alpha * xp / x0);
      const double mag = a[n].cwiseAbs().maxCoeff() * std::pow(x0, n);
      peak = std::max(peak, mag);
      small = (n > 2 && mag < 1e-18 * peak) ? small + 1 : 0;
      if (small >= 4) break;
    }
    out.value.col(q) = val;
    out.deriv.col(q) = der;
  }
  return out;
}

struct OracleRun {
  std::string method = "direct-ode";
  double abs_tol = 1e-15;
  double rel_tol = 1e-14;
  double x0 = 0.0;
  FssEvaluation result;
};

/// Integrates Y'' = (omega/x^2 + Q - lambda) Y from x0 with the given initial data,
/// reporting values at the (ascending, >= x0) grid.
inline FssEvaluation integrate_from(const Equation& eq, const ValueDeriv& seed, Complex lambda, double x0,
                                    const std::vector<double>& grid, double abs_tol = 1e-15, double rel_tol = 1e-14) {
  using State = std::vector<double>;
  const int m = eq.order.dim();
  const int cols = static_cast<int>(seed.value.cols());
  const int block = m * cols;
  auto pack = [&](const Mat& y, const Mat& dy, State& s) {
    s.resize(4 * block);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < m; ++r) {
        const int i = c * m + r;
        s[2 * i] = y(r, c).real();
        s[2 * i + 1] = y(r, c).imag();
        s[2 * block + 2 * i] = dy(r, c).real();
        s[2 * block + 2 * i + 1] = dy(r, c).imag();
      }
  };
  auto unpack = [&](const State& s, Mat& y, Mat& dy) {
    y.resize(m, cols);
    dy.resize(m, cols);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < m; ++r) {
        const int i = c * m + r;
        y(r, c) = {s[2 * i], s[2 * i + 1]};
        dy(r, c) = {s[2 * block + 2 * i], s[2 * block + 2 * i + 1]};
      }
  };
  CVec om(m);
  for (int q = 0; q < m; ++q) om(q) = eq.order.omega(q);
  auto rhs = [&](const State& s, State& ds, double x) {
    Mat y, dy;
    unpack(s, y, dy);
    Mat P = eq.q(x);
    for (int q = 0; q < m; ++q) P(q, q) += om(q) / (x * x) - lambda;
    pack(dy, P * y, ds);
  };
  State s;
  pack(seed.value, seed.deriv, s);
  for (double x : grid)
    if (x < x0) throw DomainError("oracle grid must lie in [x0, T]");
  // stop at the potential's knots too: steps straddling them lose the high-order error estimate
  std::vector<double> times{x0};
  times.insert(times.end(), grid.begin(), grid.end());
  for (double b : eq.q.breakpoints(eq.T))
    if (b > x0 && b < grid.back()) times.push_back(b);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::map<double, std::pair<Mat, Mat>> samples;
  samples[x0] = {seed.value, seed.deriv};
  namespace ode = boost::numeric::odeint;
  auto stepper = ode::make_controlled(abs_tol, rel_tol, ode::runge_kutta_fehlberg78<State>());
  const double dt0 = std::min(1e-3, 0.01 * x0);
  ode::integrate_times(stepper, rhs, s, times.begin(), times.end(), dt0, [&](const State& st, double x) {
    Mat y, dy;
    unpack(st, y, dy);
    samples[x] = {y, dy};
  });
  FssEvaluation out{"oracle", lambda, grid, {}, {}, {}};
  for (double x : grid) {
    const auto& v = samples.at(x);
    out.values.push_back(v.first);
    out.derivatives.push_back(v.second);
  }
  return out;
}

/// Default seed abscissa: min(T/100, 1/|rho|).
inline double default_seed(const Equation& eq, Complex lambda) {
  const double r = std::abs(rho_of(lambda));
  return r > 0.0 ? std::min(eq.T / 100.0, 1.0 / r) : eq.T / 100.0;
}

/// S_j by direct integration from the Frobenius seed at x0.
inline OracleRun direct_integrate(const Equation& eq, int j, Complex lambda, const std::vector<double>& grid,
                                  double x0 = 0.0, double abs_tol = 1e-15, double rel_tol = 1e-14) {
  if (x0 <= 0.0) x0 = default_seed(eq, lambda);
  if (std::abs(rho_of(lambda)) * x0 > 2.0) throw DomainError("oracle seed abscissa outside the series regime");
  const auto seed = frobenius_seed(eq, j, lambda, x0);
  OracleRun run{"direct-ode", abs_tol, rel_tol, x0, integrate_from(eq, seed, lambda, x0, grid, abs_tol, rel_tol)};
  run.result.family = "S" + std::to_string(j);
  return run;
}

/// Characteristic determinant det(phi'(T) + H phi(T)) with phi = S_1 + S_2 h from the oracle.
inline Complex shooting_det(const BoundaryProblem& bp, Complex lambda) {
  const auto& eq = bp.eq;
  const double x0 = default_seed(eq, lambda);
  const auto s1 = frobenius_seed(eq, 1, lambda, x0);
  const auto s2 = frobenius_seed(eq, 2, lambda, x0);
  const ValueDeriv seed{s1.value + s2.value * bp.h, s1.deriv + s2.deriv * bp.h};
  const auto r = integrate_from(eq, seed, lambda, x0, {eq.T});
  return (r.derivatives[0] + bp.H * r.values[0]).determinant();
}

/// Secant iteration on f(rho) = shooting_det(rho^2) from an initial guess.
inline Complex shooting_eigenvalue(const BoundaryProblem& bp, Complex rho_guess, double tol = 1e-12, int max_iter = 60) {
  auto f = [&](Complex r) { return shooting_det(bp, r * r); };
  Complex r0 = rho_guess, r1 = rho_guess + 1e-4 * std::max(1.0, std::abs(rho_guess));
  Complex f0 = f(r0), f1 = f(r1);
  for (int it = 0; it < max_iter; ++it) {
    if (f1 == f0) break;
    const Complex r2 = r1 - f1 * (r1 - r0) / (f1 - f0);
    r0 = r1;
    f0 = f1;
    r1 = r2;
    f1 = f(r1);
    if (std::abs(r1 - r0) < tol * std::max(1.0, std::abs(r1))) return r1;
  }
  throw AccuracyError("shooting secant iteration did not converge");
}

}  // namespace bessel_sl::oracle
