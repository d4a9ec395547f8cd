#pragma once

// Stokes multipliers Y_k = S_1 B_k1 + S_2 B_k2 and their large-rho behaviour.

#include "birkhoff.hpp"
#include "fit.hpp"

#include <array>

namespace bessel_sl {

/// Boundary forms sigma_1(Y) = -<S_2*, Y>, sigma_2(Y) = <S_1*, Y>.
inline std::pair<Mat, Mat> sigma_at(const ValueDeriv& s1_star, const ValueDeriv& s2_star, const ValueDeriv& y) {
  return {-wronskian(s2_star, y), wronskian(s1_star, y)};
}

/// B0_kj = diag(beta_kj,q).
inline Mat beta_diag(const SingularOrder& order, int k, int j) {
  const int m = order.dim();
  Mat b = Mat::Zero(m, m);
  for (int q = 0; q < m; ++q) b(q, q) = order.channel(q).beta(k, j);
  return b;
}

struct StokesSet {
  Complex rho{};
  std::array<std::array<Mat, 2>, 2> B;  // B[k-1][j-1]
  std::array<double, 2> bound{};         // Birkhoff contraction bounds for k = 1, 2
  double abscissa_mismatch = 0.0;        // B from the two abscissas, max-entry relative
  double reconstruction = 0.0;           // max relative ||Y_k - S_1 B_k1 - S_2 B_k2|| on the checks
};

struct StokesOptions {
  double x_first = 0.5;   // fractions of T, capped by 1/(1 + |Im rho|)
  double x_second = 0.8;
  double tol = 1e-8;
  BirkhoffOptions birkhoff{};
  FssOptions fss{};
};

inline StokesSet compute_B(const Equation& eq, Complex rho, const StokesOptions& opt = {}) {
  // Wronskians of exp(+-i rho x)-size solutions cancel like exp(2 |Im rho| x): stay where that is O(1).
  const double cap = 1.0 / (1.0 + std::abs(rho.imag()));
  const double xa = std::min(opt.x_first * eq.T, cap);
  const double xb = std::min(opt.x_second * eq.T, 1.6 * xa);
  const Complex lambda = rho * rho;
  const auto s1 = solve_S(eq, 1, lambda, opt.fss), s2 = solve_S(eq, 2, lambda, opt.fss);
  const auto t1 = solve_S_star(eq, 1, lambda, opt.fss), t2 = solve_S_star(eq, 2, lambda, opt.fss);
  StokesSet out;
  out.rho = rho;
  for (int k = 1; k <= 2; ++k) {
    const auto y = solve_Y(eq, k, rho, {xa, xb}, opt.birkhoff);
    out.bound[k - 1] = y.contraction_bound;
    const auto [b1, b2] = sigma_at(t1.eval(xa), t2.eval(xa), y.Y.at(0));
    const auto [c1, c2] = sigma_at(t1.eval(xb), t2.eval(xb), y.Y.at(1));
    const double scale = std::max(max_norm(b1), max_norm(b2));
    out.abscissa_mismatch = std::max(out.abscissa_mismatch, std::max(max_norm(b1 - c1), max_norm(b2 - c2)) / scale);
    out.B[k - 1] = {b1, b2};
    for (std::size_t i = 0; i < 2; ++i) {
      const double x = i == 0 ? xa : xb;
      const Mat rec = s1.eval(x).value * b1 + s2.eval(x).value * b2;
      out.reconstruction =
          std::max(out.reconstruction, max_norm(y.Y.values[i] - rec) / std::max(max_norm(y.Y.values[i]), 1e-300));
    }
  }
  if (out.abscissa_mismatch > opt.tol) {
    std::ostringstream msg;
    msg << "Stokes multipliers depend on the abscissa: " << out.abscissa_mismatch;
    throw AccuracyError(msg.str());
  }
  return out;
}

/// ||(D_j(rho) B0_kj)^{-1} B_kj(rho) - I||.
inline double stokes_deviation(const SingularOrder& order, const StokesSet& s, int k, int j) {
  const CVec d = order.rho_power(j, s.rho);
  const Mat ref = d.asDiagonal() * beta_diag(order, k, j);
  return max_norm(ref.inverse() * s.B[k - 1][j - 1] - Mat::Identity(order.dim(), order.dim()));
}

/// Smallest |rho| = r0 * 2^i on the ray arg = theta where every Birkhoff solve is accepted.
inline double find_rho_star(const Equation& eq, double theta, double r0 = 1.0, const BirkhoffOptions& opt = {}) {
  for (double r = r0; r < 1e5; r *= 2.0) {
    try {
      const Complex rho = std::polar(r, theta);
      solve_Y(eq, 1, rho, {eq.T}, opt);
      solve_Y(eq, 2, rho, {eq.T}, opt);
      return r;
    } catch (const RhoTooSmallError&) {
    }
  }
  throw RegimeError("no rho with an accepted Birkhoff contraction bound below |rho| = 1e5");
}

struct FitReport {
  std::string label;
  std::vector<double> x;
  std::vector<double> deviation;
  LogLogFit fit;
  bool exact = false;  // every deviation at rounding level: the relation holds identically

  void finish(double floor = 1e-13) {
    exact = std::all_of(deviation.begin(), deviation.end(), [&](double d) { return d < floor; });
    if (exact) {
      fit.slope = -std::numeric_limits<double>::infinity();
    } else {
      fit = loglog_fit(x, deviation);
    }
  }
};

inline std::vector<double> geometric_ladder(double start, double ratio, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(start * std::pow(ratio, i));
  return out;
}

/// Stokes deviations for all four (k, j) along |rho| in radii on the ray arg = theta.
inline std::vector<FitReport> verify_stokes_asymptotics(const Equation& eq, const std::vector<double>& radii,
                                                        double theta, const StokesOptions& opt = {}) {
  std::vector<FitReport> out(4);
  for (int k = 1; k <= 2; ++k)
    for (int j = 1; j <= 2; ++j) out[(k - 1) * 2 + j - 1].label = "B" + std::to_string(k) + std::to_string(j);
  for (double r : radii) {
    const auto s = compute_B(eq, std::polar(r, theta), opt);
    for (int k = 1; k <= 2; ++k)
      for (int j = 1; j <= 2; ++j) {
        auto& rep = out[(k - 1) * 2 + j - 1];
        rep.x.push_back(r);
        rep.deviation.push_back(stokes_deviation(eq.order, s, k, j));
      }
  }
  for (auto& rep : out) rep.finish();
  return out;
}

/// Leading large-rho form of S_j (derivative = 0) or S_j' (derivative = 1) from the Jost connection.
inline Mat S_asymptotic(const SingularOrder& order, int j, double x, Complex rho, int derivative) {
  const Complex ep = std::exp(kI * rho * x), em = std::exp(-kI * rho * x);
  const Complex fp = derivative ? kI * rho * ep : ep, fm = derivative ? -kI * rho * em : em;
  const Mat a = j == 1 ? Mat(fp * beta_diag(order, 2, 2) - fm * beta_diag(order, 1, 2))
                       : Mat(-fp * beta_diag(order, 2, 1) + fm * beta_diag(order, 1, 1));
  const CVec dinv = order.rho_power(j, rho).cwiseInverse();
  return (0.5 * kI) * a * dinv.asDiagonal();
}

/// Relative deviation of S_j (and S_j') from the leading form along the ladder, at abscissa x.
inline std::vector<FitReport> verify_S_asymptotics(const Equation& eq, double x, const std::vector<double>& radii,
                                                   double theta, const FssOptions& opt = {}) {
  std::vector<FitReport> out;
  for (int j = 1; j <= 2; ++j)
    for (int d = 0; d <= 1; ++d) out.push_back({"S" + std::to_string(j) + (d ? "'" : ""), {}, {}, {}, false});
  for (double r : radii) {
    const Complex rho = std::polar(r, theta);
    for (int j = 1; j <= 2; ++j) {
      const auto v = solve_S(eq, j, rho * rho, opt).eval(x);
      for (int d = 0; d <= 1; ++d) {
        const CVec D = eq.order.rho_power(j, rho);
        const Mat ref = S_asymptotic(eq.order, j, x, rho, d) * D.asDiagonal();
        const Mat got = (d ? v.deriv : v.value) * D.asDiagonal();
        auto& rep = out[(j - 1) * 2 + d];
        rep.x.push_back(r);
        rep.deviation.push_back(max_norm(got - ref) / max_norm(ref));
      }
    }
  }
  for (auto& rep : out) rep.finish();
  return out;
}

}  // namespace bessel_sl
