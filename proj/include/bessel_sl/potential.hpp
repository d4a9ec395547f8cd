#pragma once

#include "core.hpp"
#include "quadrature.hpp"

#include <algorithm>
#include <limits>
#include <variant>

namespace bessel_sl {

struct ZeroPotential {
  int m = 1;
};

/// Q(x) = sum_l coeffs[l] x^l.
struct PolynomialPotential {
  std::vector<Mat> coeffs;
};

/// Node values with entrywise monotone cubic (Fritsch-Carlson) interpolation,
/// held constant outside [nodes.front(), nodes.back()].
struct NodePotential {
  std::vector<double> nodes;
  std::vector<Mat> values;
};

class Potential {
 public:
  using Representation = std::variant<ZeroPotential, PolynomialPotential, NodePotential>;

  Potential() : rep_(ZeroPotential{1}), m_(1) {}

  static Potential zero(int m) {
    if (m < 1) throw DomainError("potential dimension must be >= 1");
    return Potential(ZeroPotential{m}, m);
  }

  static Potential polynomial(std::vector<Mat> coeffs) {
    if (coeffs.empty()) throw DomainError("polynomial potential needs at least one coefficient");
    const auto m = coeffs.front().rows();
    for (const auto& c : coeffs)
      if (c.rows() != m || c.cols() != m) throw DomainError("polynomial potential coefficients must be square of equal size");
    return Potential(PolynomialPotential{std::move(coeffs)}, static_cast<int>(m));
  }

  static Potential nodes(std::vector<double> xs, std::vector<Mat> values) {
    if (xs.size() < 2 || xs.size() != values.size()) throw DomainError("node potential needs >= 2 nodes with matching values");
    for (std::size_t i = 1; i < xs.size(); ++i)
      if (!(xs[i] > xs[i - 1])) throw DomainError("potential nodes must be strictly increasing");
    if (!(xs.front() > 0.0)) throw DomainError("potential nodes must be positive");
    const auto m = values.front().rows();
    for (const auto& v : values)
      if (v.rows() != m || v.cols() != m) throw DomainError("node values must be square of equal size");
    Potential p(NodePotential{std::move(xs), std::move(values)}, static_cast<int>(m));
    p.build_slopes();
    return p;
  }

  int dim() const { return m_; }
  const Representation& representation() const { return rep_; }

  bool is_zero() const {
    if (std::holds_alternative<ZeroPotential>(rep_)) return true;
    if (auto* p = std::get_if<PolynomialPotential>(&rep_))
      return std::all_of(p->coeffs.begin(), p->coeffs.end(), [](const Mat& c) { return max_norm(c) == 0.0; });
    const auto& n = std::get<NodePotential>(rep_);
    return std::all_of(n.values.begin(), n.values.end(), [](const Mat& c) { return max_norm(c) == 0.0; });
  }

  const char* tag() const {
    switch (rep_.index()) {
      case 0: return "zero";
      case 1: return "polynomial";
      default: return "nodes";
    }
  }

  Mat operator()(double x) const {
    if (std::holds_alternative<ZeroPotential>(rep_)) return Mat::Zero(m_, m_);
    if (auto* p = std::get_if<PolynomialPotential>(&rep_)) {
      Mat acc = Mat::Zero(m_, m_);
      for (auto it = p->coeffs.rbegin(); it != p->coeffs.rend(); ++it) acc = acc * x + *it;
      return acc;
    }
    const auto& n = std::get<NodePotential>(rep_);
    if (x <= n.nodes.front()) return n.values.front();
    if (x >= n.nodes.back()) return n.values.back();
    const auto i = static_cast<std::size_t>(std::upper_bound(n.nodes.begin(), n.nodes.end(), x) - n.nodes.begin()) - 1;
    const double h = n.nodes[i + 1] - n.nodes[i];
    const double t = (x - n.nodes[i]) / h;
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * n.values[i] + h10 * h * slopes_[i] + h01 * n.values[i + 1] + h11 * h * slopes_[i + 1];
  }

  /// Potential with every matrix transposed (used for the adjoint solutions S*).
  Potential transpose() const {
    Potential out = *this;
    if (auto* p = std::get_if<PolynomialPotential>(&out.rep_))
      for (auto& c : p->coeffs) c.transposeInPlace();
    if (auto* n = std::get_if<NodePotential>(&out.rep_)) {
      for (auto& v : n->values) v.transposeInPlace();
      for (auto& s : out.slopes_) s.transposeInPlace();
    }
    return out;
  }

  /// Interior points where Q is not smooth (node abscissas).
  std::vector<double> breakpoints(double T) const {
    std::vector<double> out;
    if (auto* n = std::get_if<NodePotential>(&rep_))
      for (double x : n->nodes)
        if (x > 0.0 && x < T) out.push_back(x);
    return out;
  }

  /// Upper bound for sup_{(0,T]} ||Q(x)|| in the row-sum norm.
  double sup_norm(double T) const {
    if (std::holds_alternative<ZeroPotential>(rep_)) return 0.0;
    if (auto* p = std::get_if<PolynomialPotential>(&rep_)) {
      double acc = 0.0;
      for (std::size_t l = 0; l < p->coeffs.size(); ++l) acc += row_sum_norm(p->coeffs[l]) * std::pow(T, double(l));
      return acc;
    }
    double acc = 0.0;
    for (const auto& v : std::get<NodePotential>(rep_).values) acc = std::max(acc, row_sum_norm(v));
    return std::sqrt(2.0) * acc;  // monotone cubic stays within the node range per real/imag part
  }

  /// Bound on integral_0^T x^{1 - 2 nu_1} ||Q(x)|| dx; infinite when the weight is not integrable.
  double weighted_l1_certificate(double T, double nu1) const {
    const double p = 1.0 - 2.0 * nu1;
    if (std::holds_alternative<ZeroPotential>(rep_)) return 0.0;
    if (auto* poly = std::get_if<PolynomialPotential>(&rep_)) {
      double acc = 0.0;
      for (std::size_t l = 0; l < poly->coeffs.size(); ++l) {
        const double c = row_sum_norm(poly->coeffs[l]);
        if (c == 0.0) continue;
        const double e = p + double(l) + 1.0;
        if (e <= 0.0) return std::numeric_limits<double>::infinity();
        acc += c * std::pow(T, e) / e;
      }
      return acc;
    }
    const auto& n = std::get<NodePotential>(rep_);
    const double x0 = std::min(n.nodes.front(), T);
    double acc = 0.0;
    const double q0 = row_sum_norm(n.values.front());
    if (q0 > 0.0) {
      if (p + 1.0 <= 0.0) return std::numeric_limits<double>::infinity();
      acc += q0 * std::pow(x0, p + 1.0) / (p + 1.0);
    }
    const auto& g = GaussRule::standard();
    std::vector<double> cuts{x0};
    for (double x : n.nodes)
      if (x > x0 && x < T) cuts.push_back(x);
    cuts.push_back(T);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double a = cuts[i], b = cuts[i + 1];
      if (b <= a) continue;
      for (int k = 0; k < g.size(); ++k) {
        const double t = 0.5 * (a + b) + 0.5 * (b - a) * g.nodes()[k];
        acc += 0.5 * (b - a) * g.weights()[k] * std::pow(t, p) * row_sum_norm((*this)(t));
      }
    }
    return acc;
  }

 private:
  Potential(Representation rep, int m) : rep_(std::move(rep)), m_(m) {}

  // Fritsch-Carlson slopes, entrywise on real and imaginary parts.
  void build_slopes() {
    const auto& n = std::get<NodePotential>(rep_);
    const std::size_t N = n.nodes.size();
    slopes_.assign(N, Mat::Zero(m_, m_));
    auto part = [&](auto get, auto set) {
      for (int r = 0; r < m_; ++r)
        for (int c = 0; c < m_; ++c) {
          std::vector<double> d(N - 1);
          for (std::size_t i = 0; i + 1 < N; ++i)
            d[i] = (get(n.values[i + 1](r, c)) - get(n.values[i](r, c))) / (n.nodes[i + 1] - n.nodes[i]);
          std::vector<double> s(N);
          s[0] = d[0];
          s[N - 1] = d[N - 2];
          for (std::size_t i = 1; i + 1 < N; ++i) {
            if (d[i - 1] * d[i] <= 0.0) {
              s[i] = 0.0;
            } else {
              const double h0 = n.nodes[i] - n.nodes[i - 1], h1 = n.nodes[i + 1] - n.nodes[i];
              const double w1 = 2 * h1 + h0, w2 = h1 + 2 * h0;
              s[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
          }
          for (std::size_t i = 0; i < N; ++i) set(slopes_[i](r, c), s[i]);
        }
    };
    part([](Complex z) { return z.real(); }, [](Complex& z, double v) { z.real(v); });
    part([](Complex z) { return z.imag(); }, [](Complex& z, double v) { z.imag(v); });
  }

  Representation rep_;
  int m_;
  std::vector<Mat> slopes_;
};

}  // namespace bessel_sl
