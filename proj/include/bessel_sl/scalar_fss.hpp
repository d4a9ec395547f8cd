#pragma once

// Scalar building blocks for -y'' + (nu^2 - 1/4)/x^2 y = lambda y:
// Frobenius series solutions c_j, Jost solutions e_k and the connection
// matrix beta between them.

#include "core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <sstream>
#include <utility>

namespace bessel_sl {

struct ScalarOrder {
  double nu = 0.5;
  double omega = 0.0;
  double mu1 = 0.0;
  double mu2 = 1.0;

  static ScalarOrder from_nu(double nu) {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw DomainError("order nu must be positive and finite");
    if (std::abs(nu - std::round(nu)) < 1e-12)
      throw DomainError("order nu must not be a positive integer (logarithmic case)");
    return ScalarOrder{nu, nu * nu - 0.25, 0.5 - nu, 0.5 + nu};
  }

  double mu(int j) const { return j == 1 ? mu1 : mu2; }
};

/// Truncated Frobenius series c_j(z) = z^{mu_j} sum_k c_{jk} z^{2k}.
struct SeriesSolution {
  ScalarOrder order;
  int j = 1;
  Complex c0{1.0, 0.0};
  std::vector<Complex> coeffs;
  int truncation = 0;
  double radius = 2.0;      // certified disk |z| <= radius
  double tail_bound = 0.0;  // bound on |sum_{k>K} c_k z^{2k}| on the disk
};

namespace detail {

// Denominator of the coefficient recursion, (2k+mu)(2k+mu-1) - omega = 4k(k -+ nu).
inline double series_denominator(const ScalarOrder& o, int j, int k) {
  const double a = 2.0 * k + o.mu(j);
  return a * (a - 1.0) - o.omega;
}

inline double geometric_tail(const SeriesSolution& s, double r) {
  const int k = s.truncation;
  const double next_ratio = r * r / std::abs(series_denominator(s.order, s.j, k + 1));
  if (next_ratio >= 1.0) return std::numeric_limits<double>::infinity();
  return std::abs(s.coeffs[k]) * std::pow(r, 2.0 * k) * next_ratio / (1.0 - next_ratio);
}

}  // namespace detail

/// Coefficients c_{j0..jK} of the Bessel series; tail bound computed for |z| <= radius.
inline SeriesSolution series_coeffs(const ScalarOrder& order, int j, Complex c0, int K, double radius = 2.0) {
  if (j != 1 && j != 2) throw DomainError("series index j must be 1 or 2");
  if (K < 1) throw DomainError("series truncation K must be >= 1");
  if (c0 == Complex{0.0, 0.0}) throw DomainError("leading coefficient c0 must be nonzero");
  SeriesSolution s{order, j, c0, {c0}, K, radius, 0.0};
  for (int k = 1; k <= K; ++k) {
    const double den = detail::series_denominator(order, j, k);
    if (std::abs(den) < 1e-12) throw DomainError("series recursion denominator vanishes (nu is a positive integer)");
    s.coeffs.push_back(-s.coeffs.back() / den);
  }
  s.tail_bound = detail::geometric_tail(s, radius);
  return s;
}

/// Grows K until the geometric tail bound is below tol * |c0| on |z| <= radius.
inline SeriesSolution series_for_disk(const ScalarOrder& order, int j, Complex c0, double radius = 2.0,
                                      double tol = 1e-15) {
  for (int K = 4; K <= 400; K += 2) {
    auto s = series_coeffs(order, j, c0, K, radius);
    if (s.tail_bound < tol * std::abs(c0)) return s;
  }
  throw DomainError("series did not reach the requested tail bound");
}

/// c_j(z) and dc_j/dz for the unscaled series (lambda = 1), principal branch.
inline std::pair<Complex, Complex> eval_series_unscaled(const SeriesSolution& s, Complex z) {
  const double mu = s.order.mu(s.j);
  const Complex z2 = z * z;
  Complex sum = 0.0, dsum = 0.0;
  for (int k = s.truncation; k >= 0; --k) {
    sum = sum * z2 + s.coeffs[k];
    dsum = dsum * z2 + s.coeffs[k] * (2.0 * k + mu);
  }
  const Complex zmu = cpow(z, mu);
  return {zmu * sum, zmu / z * dsum};
}

struct ScaledValue {
  Complex value;
  Complex deriv;
  Complex second;
};

/// c_j(x, lambda) = rho^{-mu_j} c_j(rho x) = x^{mu_j} sum c_k (lambda x^2)^k with x-derivatives.
inline ScaledValue eval_c_full(const SeriesSolution& s, double x, Complex rho) {
  if (!(x > 0.0)) throw DomainError("series evaluation needs x > 0");
  if (std::abs(rho * x) > s.radius * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "|rho x| = " << std::abs(rho * x) << " outside the certified series disk " << s.radius;
    throw DomainError(msg.str());
  }
  const double mu = s.order.mu(s.j);
  const Complex w = rho * rho * x * x;
  Complex f = 0.0, df = 0.0, d2f = 0.0;
  for (int k = s.truncation; k >= 0; --k) {
    const double e = 2.0 * k + mu;
    f = f * w + s.coeffs[k];
    df = df * w + s.coeffs[k] * e;
    d2f = d2f * w + s.coeffs[k] * e * (e - 1.0);
  }
  const double xm = std::pow(x, mu);
  return {xm * f, xm / x * df, xm / (x * x) * d2f};
}

inline std::pair<Complex, Complex> eval_c(const SeriesSolution& s, double x, Complex rho) {
  auto v = eval_c_full(s, x, rho);
  return {v.value, v.deriv};
}

// ---------------------------------------------------------------------------
// Local Taylor expansion of y'' = (omega/z^2 - lambda) y about a center a != 0.

class LocalTaylor {
 public:
  LocalTaylor() = default;

  LocalTaylor(double omega, Complex lambda, Complex center, Complex y0, Complex dy0, double hmax)
      : center_(center) {
    coeffs_.reserve(64);
    coeffs_.push_back(y0);
    coeffs_.push_back(dy0);
    const Complex a = center, a2 = a * a;
    double peak = std::max(std::abs(y0), std::abs(dy0) * hmax);
    int small_run = 0;
    for (int n = 0; n < 400; ++n) {
      const Complex yn = coeffs_[n];
      const Complex yn1 = coeffs_[n + 1];
      const Complex ynm1 = n >= 1 ? coeffs_[n - 1] : Complex{};
      const Complex ynm2 = n >= 2 ? coeffs_[n - 2] : Complex{};
      const Complex num = (omega - lambda * a2) * yn - 2.0 * lambda * a * ynm1 - lambda * ynm2 -
                          2.0 * a * double(n + 1) * double(n) * yn1 - double(n) * double(n - 1) * yn;
      const Complex next = num / (a2 * double(n + 2) * double(n + 1));
      coeffs_.push_back(next);
      const double mag = std::abs(next) * std::pow(hmax, n + 2);
      peak = std::max(peak, mag);
      small_run = (mag <= 1e-18 * peak) ? small_run + 1 : 0;
      if (small_run >= 3) break;
    }
  }

  Complex center() const { return center_; }

  /// y(center + h), dy/dz(center + h).
  std::pair<Complex, Complex> eval(Complex h) const {
    Complex y = 0.0, dy = 0.0;
    const int n = static_cast<int>(coeffs_.size());
    for (int k = n - 1; k >= 0; --k) {
      y = y * h + coeffs_[k];
      if (k >= 1) dy = dy * h + double(k) * coeffs_[k];
    }
    return {y, dy};
  }

 private:
  Complex center_{};
  std::vector<Complex> coeffs_;
};

/// Integrates y'' = (omega/z^2 - 1) y along the ray z = r e^{i theta} from r0 through
/// the sorted target radii (all on one side of r0). Returns (y, dy/dz) per target.
inline std::vector<std::pair<Complex, Complex>> march_ray(double omega, double theta, double r0, Complex y0,
                                                          Complex dy0, const std::vector<double>& targets) {
  std::vector<std::pair<Complex, Complex>> out(targets.size());
  if (targets.empty()) return out;
  const Complex dir = std::polar(1.0, theta);
  const bool inward = targets.front() < r0 || targets.back() < r0;
  std::vector<std::size_t> order(targets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return inward ? targets[a] > targets[b] : targets[a] < targets[b];
  });
  double r = r0;
  Complex y = y0, dy = dy0;
  std::size_t next = 0;
  while (next < order.size()) {
    const double step = std::min(1.0, 0.5 * r);
    const LocalTaylor tay(omega, 1.0, r * dir, y, dy, step);
    const double r_end = inward ? r - step : r + step;
    while (next < order.size()) {
      const double rt = targets[order[next]];
      const bool inside = inward ? rt >= r_end : rt <= r_end;
      if (!inside) break;
      out[order[next]] = tay.eval((rt - r) * dir);
      ++next;
    }
    std::tie(y, dy) = tay.eval((r_end - r) * dir);
    r = r_end;
    if (r <= 0.0) throw DomainError("ray integration reached the singular point");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Jost solutions.

/// e_k(z) from the large-argument expansion e_1 ~ e^{iz} sum b_n z^{-n},
/// b_{n+1} = ((n+1/2)^2 - nu^2) b_n / (2i(n+1)); e_2(z) = e_1(-z) formally.
inline std::optional<std::pair<Complex, Complex>> jost_asymptotic(const ScalarOrder& o, int k, Complex z,
                                                                  double tol = 1e-17) {
  const double sgn = k == 1 ? 1.0 : -1.0;
  Complex b = 1.0, w = 1.0, dw = 0.0;
  const Complex zi = 1.0 / z;
  Complex zpow = 1.0;
  double prev = 1.0;
  bool converged = false;
  for (int n = 0; n < 2000; ++n) {
    const double c = ((n + 0.5) * (n + 0.5) - o.nu * o.nu) / (2.0 * (n + 1));
    b = b * c / (sgn * kI);
    zpow *= zi;
    const Complex term = b * zpow;
    const double mag = std::abs(term);
    if (mag > prev && n > 2) break;  // past the smallest term
    w += term;
    dw += -double(n + 1) * term * zi;
    prev = mag;
    if (mag < tol * std::abs(w)) {
      converged = true;
      break;
    }
  }
  if (!converged) return std::nullopt;
  const Complex ex = std::exp(sgn * kI * z);
  return std::make_pair(ex * w, ex * (sgn * kI * w + dw));
}

inline double jost_tail_cutoff(const ScalarOrder& o) { return std::max(50.0, 50.0 * std::abs(o.omega)); }

/// 2x2 connection matrix e_k = beta_{k1} c_1 + beta_{k2} c_2.
struct BetaConstants {
  ScalarOrder order;
  Eigen::Matrix2cd beta;
  double consistency = 0.0;  // disagreement between the two matching abscissas
};

namespace detail {

inline std::vector<std::pair<Complex, Complex>> jost_real_axis(const ScalarOrder& o, int k,
                                                               const std::vector<double>& radii) {
  const double xmax = jost_tail_cutoff(o);
  auto seed = jost_asymptotic(o, k, Complex{xmax, 0.0});
  if (!seed) throw AccuracyError("Jost tail expansion did not converge at X_max; increase X_max");
  std::vector<std::pair<Complex, Complex>> out(radii.size());
  std::vector<double> inner;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] >= xmax) {
      auto v = jost_asymptotic(o, k, Complex{radii[i], 0.0});
      if (!v) throw AccuracyError("Jost tail expansion did not converge");
      out[i] = *v;
    } else {
      inner.push_back(radii[i]);
      idx.push_back(i);
    }
  }
  auto marched = march_ray(o.omega, 0.0, xmax, seed->first, seed->second, inner);
  for (std::size_t i = 0; i < idx.size(); ++i) out[idx[i]] = marched[i];
  return out;
}

}  // namespace detail

/// beta_{k1} = <e_k, c_2>, beta_{k2} = -<e_k, c_1> at x = 1.5, checked at x = 1.8.
inline BetaConstants beta_constants(const ScalarOrder& o, Complex c10, Complex c20, double tol = 1e-9) {
  const double nu2 = 2.0 * o.nu;
  if (std::abs(c10 * c20 * nu2 - 1.0) > 1e-12)
    throw DomainError("normalisation requires c10 * c20 = 1 / (2 nu)");
  const auto s1 = series_for_disk(o, 1, c10);
  const auto s2 = series_for_disk(o, 2, c20);
  auto extract = [&](double x) {
    Eigen::Matrix2cd b;
    const auto [c1, dc1] = eval_series_unscaled(s1, x);
    const auto [c2, dc2] = eval_series_unscaled(s2, x);
    for (int k = 1; k <= 2; ++k) {
      const auto e = detail::jost_real_axis(o, k, {x})[0];
      b(k - 1, 0) = scalar_wronskian(e.first, e.second, c2, dc2);
      b(k - 1, 1) = -scalar_wronskian(e.first, e.second, c1, dc1);
    }
    return b;
  };
  const Eigen::Matrix2cd b1 = extract(1.5);
  const Eigen::Matrix2cd b2 = extract(1.8);
  const double diff = (b1 - b2).cwiseAbs().maxCoeff() / b1.cwiseAbs().maxCoeff();
  if (diff > tol) {
    std::ostringstream msg;
    msg << "beta extraction inconsistent across matching abscissas: " << diff;
    throw AccuracyError(msg.str());
  }
  return BetaConstants{o, b1, diff};
}

// ---------------------------------------------------------------------------

/// Normalised scalar fundamental system for one channel: the two series
/// (c_10 c_20 = 1/(2 nu)) and their connection to the Jost solutions.
class ScalarBasis {
 public:
  ScalarBasis() = default;

  explicit ScalarBasis(double nu, double c10 = 1.0)
      : order_(ScalarOrder::from_nu(nu)),
        c10_(c10),
        c20_(1.0 / (2.0 * order_.nu * c10)),
        s1_(series_for_disk(order_, 1, c10_)),
        s2_(series_for_disk(order_, 2, c20_)),
        beta_(beta_constants(order_, c10_, c20_)) {
    beta_inv_ = beta_.beta.inverse();
  }

  const ScalarOrder& order() const { return order_; }
  double c10() const { return c10_; }
  double c20() const { return c20_; }
  const SeriesSolution& series(int j) const { return j == 1 ? s1_ : s2_; }
  const BetaConstants& beta() const { return beta_; }
  Complex beta(int k, int j) const { return beta_.beta(k - 1, j - 1); }

  static constexpr double kSeriesRadius = 2.0;
  static constexpr double kJostSwitch = 1.0;

  /// Unscaled c_j(z), dc_j/dz for any z with Re z >= 0: series inside the disk,
  /// Jost connection c = beta^{-1} e outside.
  std::pair<Complex, Complex> c_unscaled(int j, Complex z) const {
    if (std::abs(z) <= kSeriesRadius) return eval_series_unscaled(series(j), z);
    const auto e = e_ray(std::arg(z), {std::abs(z)});
    const Complex v = beta_inv_(j - 1, 0) * e[0][0].first + beta_inv_(j - 1, 1) * e[1][0].first;
    const Complex d = beta_inv_(j - 1, 0) * e[0][0].second + beta_inv_(j - 1, 1) * e[1][0].second;
    return {v, d};
  }

  /// c_j(x, lambda) and its x-derivative for many x at one rho.
  std::vector<std::pair<Complex, Complex>> c_scaled(int j, const std::vector<double>& xs, Complex rho) const {
    std::vector<std::pair<Complex, Complex>> out(xs.size());
    std::vector<double> far_r;
    std::vector<std::size_t> far_idx;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (std::abs(rho) * xs[i] <= kSeriesRadius) {
        out[i] = eval_c(series(j), xs[i], rho);
      } else {
        far_r.push_back(std::abs(rho) * xs[i]);
        far_idx.push_back(i);
      }
    }
    if (!far_r.empty()) {
      const auto e = e_ray(std::arg(rho), far_r);
      const double mu = order_.mu(j);
      const Complex scale = cpow(rho, -mu);
      for (std::size_t i = 0; i < far_r.size(); ++i) {
        const Complex v = beta_inv_(j - 1, 0) * e[0][i].first + beta_inv_(j - 1, 1) * e[1][i].first;
        const Complex d = beta_inv_(j - 1, 0) * e[0][i].second + beta_inv_(j - 1, 1) * e[1][i].second;
        out[far_idx[i]] = {scale * v, scale * rho * d};
      }
    }
    return out;
  }

  /// e_1 and e_2 with z-derivatives at z = r e^{i theta}, theta in [-pi/2, pi/2].
  std::array<std::vector<std::pair<Complex, Complex>>, 2> e_ray(double theta, const std::vector<double>& radii) const {
    if (theta < 0.0) {
      auto flipped = e_ray(-theta, radii);
      std::array<std::vector<std::pair<Complex, Complex>>, 2> out;
      for (int k = 0; k < 2; ++k) {
        out[k] = flipped[1 - k];
        for (auto& p : out[k]) p = {std::conj(p.first), std::conj(p.second)};
      }
      return out;
    }
    std::array<std::vector<std::pair<Complex, Complex>>, 2> out{
        std::vector<std::pair<Complex, Complex>>(radii.size()),
        std::vector<std::pair<Complex, Complex>>(radii.size())};
    const Complex dir = std::polar(1.0, theta);
    const double xmax = jost_tail_cutoff(order_);
    std::vector<double> mid;
    std::vector<std::size_t> mid_idx;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const double r = radii[i];
      const Complex z = r * dir;
      if (r < kJostSwitch) {
        const auto [c1, dc1] = eval_series_unscaled(s1_, z);
        const auto [c2, dc2] = eval_series_unscaled(s2_, z);
        for (int k = 0; k < 2; ++k)
          out[k][i] = {beta_.beta(k, 0) * c1 + beta_.beta(k, 1) * c2, beta_.beta(k, 0) * dc1 + beta_.beta(k, 1) * dc2};
      } else if (r >= xmax) {
        for (int k = 0; k < 2; ++k) {
          auto v = jost_asymptotic(order_, k + 1, z);
          if (!v) throw AccuracyError("Jost tail expansion did not converge");
          out[k][i] = *v;
        }
      } else {
        mid.push_back(r);
        mid_idx.push_back(i);
      }
    }
    if (mid.empty()) return out;
    // e_1 is recessive inward for Im z >= 0: integrate from the tail.
    {
      const auto seed = jost_asymptotic(order_, 1, xmax * dir);
      if (!seed) throw AccuracyError("Jost tail expansion did not converge at X_max");
      const auto v = march_ray(order_.omega, theta, xmax, seed->first, seed->second, mid);
      for (std::size_t i = 0; i < mid.size(); ++i) out[0][mid_idx[i]] = v[i];
    }
    if (theta == 0.0) {
      const auto seed = jost_asymptotic(order_, 2, Complex{xmax, 0.0});
      if (!seed) throw AccuracyError("Jost tail expansion did not converge at X_max");
      const auto v = march_ray(order_.omega, 0.0, xmax, seed->first, seed->second, mid);
      for (std::size_t i = 0; i < mid.size(); ++i) out[1][mid_idx[i]] = v[i];
    } else {
      // e_2 is dominant outward off the real axis: start from the connection at |z| = 1.
      const Complex z0 = kJostSwitch * dir;
      const auto [c1, dc1] = eval_series_unscaled(s1_, z0);
      const auto [c2, dc2] = eval_series_unscaled(s2_, z0);
      const Complex y0 = beta_.beta(1, 0) * c1 + beta_.beta(1, 1) * c2;
      const Complex dy0 = beta_.beta(1, 0) * dc1 + beta_.beta(1, 1) * dc2;
      const auto v = march_ray(order_.omega, theta, kJostSwitch, y0, dy0, mid);
      for (std::size_t i = 0; i < mid.size(); ++i) out[1][mid_idx[i]] = v[i];
    }
    return out;
  }

 private:
  ScalarOrder order_{};
  double c10_ = 1.0;
  double c20_ = 1.0;
  SeriesSolution s1_{};
  SeriesSolution s2_{};
  BetaConstants beta_{};
  Eigen::Matrix2cd beta_inv_ = Eigen::Matrix2cd::Identity();
};

/// Jost solution values e_k(x, rho) = e_k(rho x) and x-derivatives on a grid.
struct JostSolution {
  ScalarOrder order;
  int k = 1;
  Complex rho{1.0, 0.0};
  std::vector<double> grid;
  std::vector<Complex> values;
  std::vector<Complex> derivatives;
  double tail_cutoff = 50.0;
  double measured_m0 = 0.0;  // sup over |rho x| >= 1 of |rho x| |e_k exp(-+ i rho x) - 1|
};

inline JostSolution eval_jost(const ScalarBasis& basis, int k, const std::vector<double>& xs, Complex rho) {
  if (k != 1 && k != 2) throw DomainError("Jost index k must be 1 or 2");
  if (rho.real() < 0.0) throw DomainError("Jost solutions need Re rho >= 0");
  std::vector<double> radii;
  for (double x : xs) {
    if (!(x > 0.0)) throw DomainError("Jost evaluation needs x > 0");
    radii.push_back(std::abs(rho) * x);
  }
  const auto e = basis.e_ray(std::arg(rho), radii);
  JostSolution out{basis.order(), k, rho, xs, {}, {}, jost_tail_cutoff(basis.order()), 0.0};
  const double sgn = k == 1 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out.values.push_back(e[k - 1][i].first);
    out.derivatives.push_back(rho * e[k - 1][i].second);
    if (radii[i] >= 1.0) {
      const Complex z = rho * xs[i];
      const double dev = std::abs(e[k - 1][i].first * std::exp(-sgn * kI * z) - 1.0);
      out.measured_m0 = std::max(out.measured_m0, radii[i] * dev);
    }
  }
  return out;
}

inline std::pair<Complex, Complex> eval_jost(const ScalarBasis& basis, int k, double x, Complex rho) {
  const auto j = eval_jost(basis, k, std::vector<double>{x}, rho);
  return {j.values[0], j.derivatives[0]};
}

}  // namespace bessel_sl
