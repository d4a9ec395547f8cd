#pragma once

#include "core.hpp"

#include <array>
#include <cstddef>

namespace bessel_sl {

/// Gauss-Legendre rule on [-1, 1] with spectral integration operators.
///
/// `integration(i, k)` is the integral over [-1, s_i] of the k-th Lagrange
/// basis polynomial on the nodes, so cumulative integrals of nodal samples
/// are exact for polynomials of degree < n.
class GaussRule {
 public:
  explicit GaussRule(int n) : n_(n), nodes_(n), weights_(n), integration_(n, n) {
    for (int i = 0; i < n; ++i) {
      double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        auto [p, dp] = legendre_with_derivative(n, x);
        const double dx = p / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      auto [p, dp] = legendre_with_derivative(n, x);
      nodes_[n - 1 - i] = x;
      weights_[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    for (int i = 0; i < n; ++i) {
      const auto row = integration_row(nodes_[i]);
      for (int k = 0; k < n; ++k) integration_(i, k) = row[k];
    }
  }

  int size() const { return n_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  const Eigen::MatrixXd& integration() const { return integration_; }

  /// Weights r_k with sum_k r_k f(s_k) = integral_{-1}^{s} of the interpolant of f.
  std::vector<double> integration_row(double s) const {
    std::vector<double> row(n_, 0.0);
    const auto ps = legendre_all(s, n_);
    // Antiderivatives of P_l from -1: I_0 = s + 1, I_l = (P_{l+1} - P_{l-1}) / (2l + 1).
    std::vector<double> anti(n_);
    anti[0] = s + 1.0;
    for (int l = 1; l < n_; ++l) anti[l] = (ps[l + 1] - ps[l - 1]) / (2.0 * l + 1.0);
    for (int k = 0; k < n_; ++k) {
      const auto pk = legendre_all(nodes_[k], n_);
      double acc = 0.0;
      for (int l = 0; l < n_; ++l) acc += 0.5 * (2.0 * l + 1.0) * pk[l] * anti[l];
      row[k] = weights_[k] * acc;
    }
    return row;
  }

  /// Lagrange interpolation weights at s.
  std::vector<double> interpolation_row(double s) const {
    std::vector<double> row(n_, 0.0);
    const auto ps = legendre_all(s, n_);
    for (int k = 0; k < n_; ++k) {
      const auto pk = legendre_all(nodes_[k], n_);
      double acc = 0.0;
      for (int l = 0; l < n_; ++l) acc += 0.5 * (2.0 * l + 1.0) * pk[l] * ps[l];
      row[k] = weights_[k] * acc;
    }
    return row;
  }

  static const GaussRule& standard() {
    static const GaussRule rule(16);
    return rule;
  }

 private:
  static std::pair<double, double> legendre_with_derivative(int n, double x) {
    double p0 = 1.0, p1 = x;
    for (int l = 2; l <= n; ++l) {
      const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
      p0 = p1;
      p1 = p2;
    }
    const double dp = n * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
  }

  // P_0 .. P_{n}, inclusive.
  static std::vector<double> legendre_all(double x, int n) {
    std::vector<double> p(n + 1);
    p[0] = 1.0;
    if (n >= 1) p[1] = x;
    for (int l = 2; l <= n; ++l) p[l] = ((2.0 * l - 1.0) * x * p[l - 1] - (l - 1.0) * p[l - 2]) / l;
    return p;
  }

  int n_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
  Eigen::MatrixXd integration_;
};

}  // namespace bessel_sl
