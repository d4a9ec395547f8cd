#pragma once

#include "core.hpp"

#include <algorithm>

namespace bessel_sl {

/// Panel partition of [0, T]. Panel 0 is the tiny cell [0, eps]; panels
/// 1..near_count-1 are geometric toward 0 (|rho x| <= near radius), the rest
/// are sized by the local oscillation and growth scales of exp(+-i rho x).
struct Mesh {
  std::vector<double> edges;
  std::size_t near_count = 0;
  double x_switch = 0.0;

  std::size_t panels() const { return edges.size() - 1; }
  bool is_near(std::size_t p) const { return p < near_count; }

  std::size_t locate(double x) const {
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    if (it == edges.begin()) return 0;
    const auto p = static_cast<std::size_t>(it - edges.begin()) - 1;
    return std::min(p, panels() - 1);
  }
};

struct MeshOptions {
  double near_radius = 2.0;
  double eps_ratio = 1e-16;
  double max_width = 1.0;
};

inline Mesh build_mesh(double T, Complex rho, double q_sup, std::vector<double> breaks, const MeshOptions& opt = {}) {
  if (!(T > 0.0)) throw DomainError("mesh needs T > 0");
  const double r = std::abs(rho);
  const double xs = r > 0.0 ? std::min(T, opt.near_radius / r) : T;
  double wmax = std::min(T / 8.0, opt.max_width);
  if (q_sup > 0.0) wmax = std::min(wmax, 0.5 / std::sqrt(q_sup));

  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::remove_if(breaks.begin(), breaks.end(), [&](double b) { return !(b > 0.0 && b < T); }),
               breaks.end());
  auto snap_down = [&](double hi, double lo) {
    // largest breakpoint strictly inside (lo, hi)
    for (auto it = breaks.rbegin(); it != breaks.rend(); ++it)
      if (*it < hi * (1 - 1e-13) && *it > lo * (1 + 1e-13)) return *it;
    return lo;
  };
  auto snap_up = [&](double lo, double hi) {
    for (double b : breaks)
      if (b > lo * (1 + 1e-13) && b < hi * (1 - 1e-13)) return b;
    return hi;
  };

  std::vector<double> near{xs};
  const double eps = opt.eps_ratio * xs;
  for (double x = xs; x > eps;) {
    const double next = snap_down(x, std::max(x / 3.0, x - wmax));
    near.push_back(next);
    x = next;
  }
  Mesh mesh;
  mesh.x_switch = xs;
  mesh.edges.push_back(0.0);
  mesh.edges.insert(mesh.edges.end(), near.rbegin(), near.rend());
  mesh.near_count = mesh.edges.size() - 1;

  const double im = std::abs(rho.imag());
  for (double a = xs; a < T * (1 - 1e-14);) {
    double w = std::min(wmax, 0.5 * a);
    if (r > 0.0) w = std::min(w, 4.0 / r);
    if (im > 0.0) w = std::min(w, 1.5 / im);
    double b = a + w;
    if (b > T * (1 - 1e-12) || T - b < 0.05 * w) b = T;
    b = snap_up(a, b);
    mesh.edges.push_back(b);
    a = b;
  }
  mesh.edges.back() = std::max(mesh.edges.back(), T);
  return mesh;
}

}  // namespace bessel_sl
