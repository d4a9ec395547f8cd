#pragma once

// Boundary value problem L(Q, h, H): characteristic function, eigenvalue
// localization by contour integrals, Weyl matrix, group weights and their
// large-n behaviour.

#include "fit.hpp"
#include "matrix_fss.hpp"
#include "stokes.hpp"

#include <Eigen/Eigenvalues>

#include <atomic>
#include <functional>
#include <future>
#include <map>
#include <set>

namespace bessel_sl {

struct SpectralOptions {
  int samples = 64;             // contour nodes; the result is compared against 2x this count
  double safety_floor = 1e-6;   // min |Delta| / max |Delta| on a contour
  double count_tol = 0.05;      // distance of the argument-principle integral from an integer
  double newton_tol = 1e-11;    // |Delta| relative to the contour scale
  int newton_max = 50;
  double doubling_tol = 1e-9;
  int jobs = 1;
  FssOptions fss{};
};

/// V(Y) = Y'(T) + H Y(T).
inline Mat boundary_V(const BoundaryProblem& bp, const ValueDeriv& y) { return y.deriv + bp.H * y.value; }

/// phi = S_1 + S_2 h, the solution with sigma_1(phi) = I, sigma_2(phi) = h.
inline VolterraSolution phi(const BoundaryProblem& bp, Complex lambda, const FssOptions& opt = {}) {
  const int m = bp.dim();
  return solve_fss(bp.eq, Mat::Identity(m, m), bp.h, lambda, opt);
}

/// Delta(lambda) = det V(phi).
inline Complex char_det(const BoundaryProblem& bp, Complex lambda, const FssOptions& opt = {}) {
  return boundary_V(bp, phi(bp, lambda, opt).eval(bp.T())).determinant();
}

struct SigmaForms {
  Mat sigma1, sigma2;
  double x_dependence = 0.0;
};

/// sigma_1(Y) = -<S_2*, Y>, sigma_2(Y) = <S_1*, Y> at xa, checked against xb.
inline SigmaForms sigma_forms(const Equation& eq, const std::function<ValueDeriv(double)>& y, Complex lambda,
                              double xa, double xb, double tol = 1e-8, const FssOptions& opt = {}) {
  const auto t1 = solve_S_star(eq, 1, lambda, opt), t2 = solve_S_star(eq, 2, lambda, opt);
  const auto [a1, a2] = sigma_at(t1.eval(xa), t2.eval(xa), y(xa));
  const auto [b1, b2] = sigma_at(t1.eval(xb), t2.eval(xb), y(xb));
  const double scale = std::max({max_norm(a1), max_norm(a2), 1e-300});
  SigmaForms out{a1, a2, std::max(max_norm(a1 - b1), max_norm(a2 - b2)) / scale};
  if (out.x_dependence > tol) {
    std::ostringstream msg;
    msg << "boundary forms depend on the abscissa: " << out.x_dependence;
    throw AccuracyError(msg.str());
  }
  return out;
}

struct WeylSample {
  Complex lambda{};
  Mat M;
  double rcond = 0.0;  // reciprocal 2-norm condition number of V(phi)
};

inline Mat weyl_from(const BoundaryProblem& bp, const ValueDeriv& phi_T, const ValueDeriv& s2_T) {
  return -boundary_V(bp, phi_T).partialPivLu().solve(boundary_V(bp, s2_T));
}

/// M(lambda) = -V(phi)^{-1} V(S_2).
inline WeylSample weyl(const BoundaryProblem& bp, Complex lambda, const FssOptions& opt = {},
                       double min_rcond = 1e-12) {
  const auto p = phi(bp, lambda, opt).eval(bp.T());
  const auto s2 = solve_S(bp.eq, 2, lambda, opt).eval(bp.T());
  const Mat V = boundary_V(bp, p);
  const Eigen::JacobiSVD<Mat> svd(V);
  const auto& sv = svd.singularValues();
  WeylSample out{lambda, {}, sv(sv.size() - 1) / sv(0)};
  if (!(out.rcond > min_rcond)) {
    std::ostringstream msg;
    msg << "lambda = " << lambda << " is within rounding of a pole of M (rcond of V(phi) = " << out.rcond << ")";
    throw AccuracyError(msg.str());
  }
  out.M = weyl_from(bp, p, s2);
  return out;
}

/// Channels grouped by the fractional part of mu_1q / 2 (the sets J_q), ordered by that fraction.
struct ChannelClasses {
  std::vector<double> frac;
  std::vector<std::vector<int>> members;

  int size() const { return static_cast<int>(frac.size()); }
  int of_channel(int q) const {
    for (int c = 0; c < size(); ++c)
      if (std::find(members[c].begin(), members[c].end(), q) != members[c].end()) return c;
    throw DomainError("channel index out of range");
  }
};

inline double frac_part(double v) {
  double f = v - std::floor(v);
  if (f > 1.0 - 1e-12) f = 0.0;
  return f;
}

inline ChannelClasses channel_classes(const SingularOrder& order) {
  std::map<double, std::vector<int>> groups;
  for (int q = 0; q < order.dim(); ++q) {
    const double f = frac_part(order.mu(1, q) / 2.0);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return std::abs(g.first - f) < 1e-12; });
    if (it == groups.end()) {
      groups[f] = {q};
    } else {
      it->second.push_back(q);
    }
  }
  ChannelClasses out;
  for (auto& [f, qs] : groups) {
    out.frac.push_back(f);
    out.members.push_back(qs);
  }
  return out;
}

/// rho0_n(class) = (pi/T)(n + frac).
inline double contour_center(const BoundaryProblem& bp, const ChannelClasses& cls, int n, int c) {
  return kPi / bp.T() * (n + cls.frac[c]);
}

/// delta = min(0.45 * smallest cyclic gap, 0.2) * pi / T.
inline double contour_radius(const BoundaryProblem& bp, const ChannelClasses& cls) {
  double gap = 1.0;
  for (int c = 0; c < cls.size(); ++c) {
    const double next = c + 1 < cls.size() ? cls.frac[c + 1] : cls.frac[0] + 1.0;
    if (cls.size() > 1) gap = std::min(gap, next - cls.frac[c]);
  }
  return std::min(0.45 * gap, 0.2) * kPi / bp.T();
}

struct AsymptoticConstants {
  CVec theta;
  std::vector<Mat> A;  // per class
  double P = 0.0;      // sum of mu_2q
  std::vector<double> frac;
};

/// theta_q = -beta0_11q / (i T beta0_12q) (1 - exp(-2 pi i nu_q)); A = diag(theta) restricted to each class.
inline AsymptoticConstants asymptotic_constants(const BoundaryProblem& bp) {
  const auto& order = bp.eq.order;
  const int m = order.dim();
  const auto cls = channel_classes(order);
  AsymptoticConstants out;
  out.theta.resize(m);
  for (int q = 0; q < m; ++q) {
    const auto& ch = order.channel(q);
    out.theta(q) = -ch.beta(1, 1) / (kI * bp.T() * ch.beta(1, 2)) * (1.0 - std::exp(-2.0 * kPi * kI * order.nu(q)));
    out.P += order.mu(2, q);
    out.frac.push_back(frac_part(order.mu(1, q) / 2.0));
  }
  for (int c = 0; c < cls.size(); ++c) {
    Mat a = Mat::Zero(m, m);
    for (int q : cls.members[c]) a(q, q) = out.theta(q);
    out.A.push_back(a);
  }
  return out;
}

/// Closed curve sampled for the argument principle: values of Delta and of M at the nodes.
struct ContourSamples {
  Complex center{};
  double radius = 0.0;
  std::vector<Complex> nodes;  // rho_j = center + radius e^{2 pi i j / K}
  std::vector<Complex> f;      // Delta(rho_j^2)
  std::vector<Mat> M;          // M(rho_j^2), when requested

  int size() const { return static_cast<int>(nodes.size()); }
  Complex unit(int j) const { return (nodes[j] - center) / radius; }

  /// Every stride-th node: the rule with K / stride points.
  ContourSamples thinned(int stride) const {
    ContourSamples out{center, radius, {}, {}, {}};
    for (int j = 0; j < size(); j += stride) {
      out.nodes.push_back(nodes[j]);
      out.f.push_back(f[j]);
      if (!M.empty()) out.M.push_back(M[j]);
    }
    return out;
  }
};

inline void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::future<void>> workers;
  for (int w = 0; w < std::min(jobs, count); ++w)
    workers.push_back(std::async(std::launch::async, [&] {
      for (int i = next++; i < count; i = next++) body(i);
    }));
  for (auto& w : workers) w.get();
}

inline ContourSamples sample_circle(const BoundaryProblem& bp, Complex center, double radius, int K, bool with_weyl,
                                    const FssOptions& opt = {}) {
  ContourSamples s{center, radius, std::vector<Complex>(K), std::vector<Complex>(K), {}};
  if (with_weyl) s.M.resize(K);
  for (int j = 0; j < K; ++j) {
    const Complex rho = center + radius * std::polar(1.0, 2.0 * kPi * j / K);
    s.nodes[j] = rho;
    const auto p = phi(bp, rho * rho, opt).eval(bp.T());
    s.f[j] = boundary_V(bp, p).determinant();
    if (with_weyl) s.M[j] = weyl_from(bp, p, solve_S(bp.eq, 2, rho * rho, opt).eval(bp.T()));
  }
  return s;
}

/// d/d rho of the samples by differentiating their trigonometric interpolant (Taylor coefficients by DFT).
inline std::vector<Complex> spectral_derivative(const ContourSamples& s) {
  const int K = s.size();
  std::vector<Complex> a(K / 2 + 1, 0.0);
  for (int k = 1; k <= K / 2; ++k) {
    Complex acc = 0.0;
    for (int j = 0; j < K; ++j) acc += s.f[j] * std::polar(1.0, -2.0 * kPi * double(j) * k / K);
    a[k] = acc / double(K);
  }
  a[K / 2] *= 0.5;
  std::vector<Complex> d(K, 0.0);
  for (int j = 0; j < K; ++j) {
    for (int k = 1; k <= K / 2; ++k) d[j] += double(k) * a[k] * std::polar(1.0, 2.0 * kPi * double(j) * (k - 1) / K);
    d[j] /= s.radius;
  }
  return d;
}

/// Power sums sum_r ((rho_r - center) / radius)^p over zeros inside, p = 0..pmax.
inline std::vector<Complex> zero_moments(const ContourSamples& s, int pmax) {
  const auto d = spectral_derivative(s);
  const int K = s.size();
  std::vector<Complex> out(pmax + 1, 0.0);
  for (int j = 0; j < K; ++j) {
    const Complex u = s.unit(j);
    const Complex w = d[j] / s.f[j] * s.radius * u / double(K);
    Complex up = 1.0;
    for (int p = 0; p <= pmax; ++p, up *= u) out[p] += up * w;
  }
  return out;
}

/// Winding number of the sampled values around 0.
inline double phase_winding(const std::vector<Complex>& f) {
  double total = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) total += std::arg(f[(j + 1) % f.size()] / f[j]);
  return total / (2.0 * kPi);
}

/// Roots of z^N - e1 z^{N-1} + e2 z^{N-2} - ... from the power sums (Newton identities).
inline std::vector<Complex> roots_from_moments(const std::vector<Complex>& s, int N) {
  if (N == 0) return {};
  std::vector<Complex> e(N + 1, 0.0);
  e[0] = 1.0;
  for (int k = 1; k <= N; ++k) {
    Complex acc = 0.0;
    for (int i = 1; i <= k; ++i) acc += (i % 2 ? 1.0 : -1.0) * e[k - i] * s[i];
    e[k] = acc / double(k);
  }
  if (N == 1) return {e[1]};
  Mat comp = Mat::Zero(N, N);
  for (int i = 1; i < N; ++i) comp(i, i - 1) = 1.0;
  for (int k = 1; k <= N; ++k) comp(N - k, N - 1) = (k % 2 ? 1.0 : -1.0) * e[k];
  Eigen::ComplexEigenSolver<Mat> es(comp);
  std::vector<Complex> out;
  for (int i = 0; i < N; ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

struct NewtonResult {
  Complex root{};
  int steps = 0;
  bool converged = false;
};

/// Newton on g with a central-difference derivative; stops when |g| <= tol * scale or the step stalls.
inline NewtonResult newton_polish(const std::function<Complex(Complex)>& g, Complex z, double h, double scale,
                                  double tol, int max_steps) {
  NewtonResult out{z, 0, false};
  Complex gz = g(z);
  for (int it = 1; it <= max_steps; ++it) {
    if (std::abs(gz) <= tol * scale) {
      out.converged = true;
      break;
    }
    const Complex dg = (g(z + h) - g(z - h)) / (2.0 * h);
    const Complex step = gz / dg;
    z -= step;
    gz = g(z);
    out.steps = it;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) {
      out.converged = std::abs(gz) <= 1e3 * tol * scale;
      break;
    }
  }
  if (std::abs(gz) <= tol * scale) out.converged = true;
  out.root = z;
  return out;
}

struct SpectralDatum {
  int n = 0;
  int cls = -1;                // class index into ChannelClasses, -1 for the low disk
  std::vector<int> group;      // J_q
  Complex rho{};
  Complex lambda{};
  int multiplicity = 1;
  bool polished = true;
};

struct ContourResult {
  int n = 0;
  int cls = 0;
  std::vector<int> group;
  Complex center{};
  double radius = 0.0;
  int count = 0;
  double count_residual = 0.0;  // distance of the argument-principle integral from count
  double winding = 0.0;         // phase winding of the samples, cross-check of count
  double floor_ratio = 0.0;     // min |Delta| / max |Delta| on the contour
  int radius_retries = 0;
  std::vector<SpectralDatum> eigen;
  bool has_weight = false;
  Mat group_weight;
  double weight_doubling = 0.0;
  int nodes = 0;
};

namespace detail {

inline Mat weight_sum(const ContourSamples& s) {
  const int K = s.size();
  Mat w = Mat::Zero(s.M.front().rows(), s.M.front().cols());
  for (int j = 0; j < K; ++j) w += (2.0 * s.nodes[j] * s.radius * s.unit(j) / double(K)) * s.M[j];
  return w;
}

inline std::vector<SpectralDatum> polish_roots(const BoundaryProblem& bp, const ContourResult& c,
                                               const ContourSamples& s, const SpectralOptions& opt) {
  const auto mom = zero_moments(s, c.count);
  const auto z = roots_from_moments(mom, c.count);
  double scale = 0.0;
  for (const auto& v : s.f) scale = std::max(scale, std::abs(v));
  auto g = [&](Complex r) { return char_det(bp, r * r, opt.fss); };
  std::vector<SpectralDatum> out;
  for (const Complex zi : z) {
    SpectralDatum d;
    d.n = c.n;
    d.cls = c.cls;
    d.group = c.group;
    const Complex guess = c.center + c.radius * zi;
    const auto nr = newton_polish(g, guess, 1e-6 * c.radius, scale, opt.newton_tol, opt.newton_max);
    const bool inside = std::abs(nr.root - c.center) < c.radius;
    d.rho = nr.converged && inside ? nr.root : guess;
    d.polished = nr.converged && inside;
    out.push_back(d);
  }
  // merge coincident roots into one datum with multiplicity
  std::vector<SpectralDatum> merged;
  for (const auto& d : out) {
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const SpectralDatum& e) { return std::abs(e.rho - d.rho) < 1e-6 * c.radius; });
    if (it == merged.end()) {
      merged.push_back(d);
    } else {
      ++it->multiplicity;
    }
  }
  for (auto& d : merged) d.lambda = d.rho * d.rho;
  std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) { return a.rho.real() < b.rho.real(); });
  return merged;
}

}  // namespace detail

/// Zeros of Delta(rho^2) inside |rho - rho0_n(class)| = delta, with the group weight when requested.
inline ContourResult analyze_contour(const BoundaryProblem& bp, int n, int c, bool with_weights,
                                     const SpectralOptions& opt = {}) {
  const auto cls = channel_classes(bp.eq.order);
  if (c < 0 || c >= cls.size()) throw DomainError("class index out of range");
  if (n < 1) throw DomainError("contour index n must be >= 1");
  const Complex center = contour_center(bp, cls, n, c);
  const double base = contour_radius(bp, cls);
  ContourResult out;
  out.n = n;
  out.cls = c;
  out.group = cls.members[c];
  out.center = center;
  for (const double factor : {1.0, 0.8, 1.2}) {
    const double delta = base * factor;
    int K = opt.samples;
    auto fine = sample_circle(bp, center, delta, 2 * K, with_weights, opt.fss);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& v : fine.f) {
      lo = std::min(lo, std::abs(v));
      hi = std::max(hi, std::abs(v));
    }
    out.floor_ratio = lo / hi;
    if (!(out.floor_ratio >= opt.safety_floor)) {
      ++out.radius_retries;
      continue;
    }
    out.radius = delta;
    const Complex N = zero_moments(fine, 0)[0];
    out.count = static_cast<int>(std::lround(N.real()));
    out.count_residual = std::abs(N - double(out.count));
    out.winding = phase_winding(fine.f);
    if (out.count_residual > opt.count_tol || std::abs(out.winding - out.count) > opt.count_tol) {
      ++out.radius_retries;
      continue;
    }
    out.nodes = fine.size();
    if (with_weights && out.count == 0) {
      out.has_weight = true;  // no pole inside: the residue sum vanishes
      out.group_weight = Mat::Zero(bp.dim(), bp.dim());
    } else if (with_weights) {
      Mat wf = detail::weight_sum(fine), wc = detail::weight_sum(fine.thinned(2));
      out.weight_doubling = max_norm(wf - wc) / std::max(max_norm(wf), 1e-300);
      if (out.weight_doubling > opt.doubling_tol) {
        const auto finer = sample_circle(bp, center, delta, 4 * K, true, opt.fss);
        wc = wf;
        wf = detail::weight_sum(finer);
        out.weight_doubling = max_norm(wf - wc) / std::max(max_norm(wf), 1e-300);
        out.nodes = finer.size();
        if (out.weight_doubling > opt.doubling_tol) {
          std::ostringstream msg;
          msg << "group weight for n = " << n << " not converged under node doubling: " << out.weight_doubling;
          throw AccuracyError(msg.str());
        }
      }
      out.has_weight = true;
      out.group_weight = wf;
    }
    out.eigen = detail::polish_roots(bp, out, fine, opt);
    return out;
  }
  std::ostringstream msg;
  msg << "contour around rho0 = " << center << " passes too close to a zero (min/max |Delta| = " << out.floor_ratio
      << ")";
  throw LocalizationError(msg.str());
}

/// Contours for n in [n_lo, n_hi] and every channel class.
inline std::vector<ContourResult> locate_contours(const BoundaryProblem& bp, int n_lo, int n_hi, bool with_weights,
                                                  const SpectralOptions& opt = {}) {
  if (n_lo < 1 || n_hi < n_lo) throw DomainError("contour range must satisfy 1 <= n_lo <= n_hi");
  const int nc = channel_classes(bp.eq.order).size();
  const int total = (n_hi - n_lo + 1) * nc;
  std::vector<ContourResult> out(total);
  std::vector<std::exception_ptr> errors(total);
  parallel_for(total, opt.jobs, [&](int i) {
    try {
      out[i] = analyze_contour(bp, n_lo + i / nc, i % nc, with_weights, opt);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

/// The group weight sum_{s in J} m_s^{-1} alpha_s for one contour.
inline ContourResult group_weights(const BoundaryProblem& bp, int n, int c, const SpectralOptions& opt = {}) {
  return analyze_contour(bp, n, c, true, opt);
}

// ---- counting and roots in the lambda plane ----

/// Winding of Delta around a closed lambda-path z(t), t in [0, 1), with adaptive refinement.
inline int winding_number(const std::function<Complex(double)>& path, const std::function<Complex(Complex)>& f,
                          int initial = 64, int max_depth = 14) {
  struct Node {
    double t;
    Complex v;
  };
  std::vector<Node> pts;
  for (int i = 0; i <= initial; ++i) {
    const double t = double(i) / initial;
    pts.push_back({t, i == initial ? Complex{} : f(path(t))});
  }
  pts.back().v = pts.front().v;
  double total = 0.0;
  std::function<void(const Node&, const Node&, int)> walk = [&](const Node& a, const Node& b, int depth) {
    const Complex ratio = b.v / a.v;
    if (a.v == 0.0 || b.v == 0.0) throw LocalizationError("characteristic function vanishes on the counting path");
    const double dphi = std::arg(ratio), dlog = std::abs(std::log(std::abs(ratio)));
    const double tm = 0.5 * (a.t + b.t);
    const Node mid{tm, f(path(tm))};
    if (mid.v == 0.0) throw LocalizationError("characteristic function vanishes on the counting path");
    // accept only when both halves are small steps too (a full turn between samples is invisible otherwise)
    auto small = [](Complex r) { return std::abs(std::arg(r)) < kPi / 4 && std::abs(std::log(std::abs(r))) < 1.0; };
    const double split = std::arg(mid.v / a.v) + std::arg(b.v / mid.v);
    if (std::abs(dphi) < kPi / 4 && dlog < 1.0 && small(mid.v / a.v) && small(b.v / mid.v) &&
        std::abs(split - dphi) < 1e-9) {
      total += dphi;
      return;
    }
    if (depth >= max_depth) throw LocalizationError("counting path passes too close to a zero of the characteristic function");
    walk(a, mid, depth + 1);
    walk(mid, b, depth + 1);
  };
  for (int i = 0; i < initial; ++i) walk(pts[i], pts[i + 1], 0);
  const double w = total / (2.0 * kPi);
  const long r = std::lround(w);
  if (std::abs(w - r) > 1e-6) throw LocalizationError("non-integer winding number");
  return static_cast<int>(r);
}

/// Number of eigenvalues (with multiplicity) in |lambda| < R.
inline int count_in_disk(const BoundaryProblem& bp, double R, const SpectralOptions& opt = {}) {
  if (!(R > 0.0)) throw DomainError("disk radius must be positive");
  auto f = [&](Complex l) { return char_det(bp, l, opt.fss); };
  return winding_number([&](double t) { return std::polar(R, 2.0 * kPi * t); }, f);
}

/// Eigenvalues with |lambda| < R by recursive subdivision of squares in the lambda plane.
inline std::vector<SpectralDatum> locate_in_disk(const BoundaryProblem& bp, double R, const SpectralOptions& opt = {}) {
  auto f = [&](Complex l) { return char_det(bp, l, opt.fss); };
  const int expected = count_in_disk(bp, R, opt);
  std::vector<SpectralDatum> out;
  if (expected == 0) return out;
  auto square_path = [](Complex lo, double side) {
    return [lo, side](double t) {
      const double s = 4.0 * t;
      if (s < 1.0) return lo + Complex(side * s, 0.0);
      if (s < 2.0) return lo + Complex(side, side * (s - 1.0));
      if (s < 3.0) return lo + Complex(side * (3.0 - s), side);
      return lo + Complex(0.0, side * (4.0 - s));
    };
  };
  // slightly offset so that real eigenvalues stay off the square edges
  const double side0 = 2.0 * R * 1.0123;
  const Complex lo0(-R * 1.0123 + 0.0571 * R, -R * 1.0123 + 0.0731 * R);
  std::function<void(Complex, double, int, int)> split = [&](Complex lo, double side, int count, int depth) {
    if (count == 0) return;
    const Complex mid = lo + Complex(0.5 * side, 0.5 * side);
    if (count == 1 || side < 1e-8 * std::max(1.0, R)) {
      double scale = 0.0;
      for (int i = 0; i < 8; ++i) scale = std::max(scale, std::abs(f(square_path(lo, side)(i / 8.0))));
      const auto nr = newton_polish(f, mid, 1e-7 * std::max(side, 1e-3), scale, opt.newton_tol, opt.newton_max);
      const bool inside = std::abs(nr.root.real() - mid.real()) <= 0.5 * side &&
                          std::abs(nr.root.imag() - mid.imag()) <= 0.5 * side;
      if (nr.converged && inside) {
        SpectralDatum d;
        d.lambda = nr.root;
        d.rho = rho_of(nr.root);
        d.multiplicity = count;
        out.push_back(d);
        return;
      }
      if (side < 1e-8 * std::max(1.0, R) || depth > 60) {
        SpectralDatum d;
        d.lambda = mid;
        d.rho = rho_of(mid);
        d.multiplicity = count;
        d.polished = false;
        out.push_back(d);
        return;
      }
    }
    const double h = 0.5 * side;
    std::array<Complex, 4> los{lo, lo + Complex(h, 0), lo + Complex(0, h), lo + Complex(h, h)};
    std::array<int, 4> counts{};
    for (int initial = 32;; initial *= 2) {
      int assigned = 0;
      for (int i = 0; i < 4; ++i) {
        counts[i] = winding_number(square_path(los[i], h), f, initial);
        assigned += counts[i];
      }
      if (assigned == count) break;
      if (initial >= 512) throw LocalizationError("subdivision counts do not add up to the parent count");
    }
    for (int i = 0; i < 4; ++i) split(los[i], h, counts[i], depth + 1);
  };
  const int total = winding_number(square_path(lo0, side0), f);
  split(lo0, side0, total, 0);
  std::vector<SpectralDatum> inside;
  int found = 0;
  for (auto& d : out)
    if (std::abs(d.lambda) < R) {
      found += d.multiplicity;
      inside.push_back(d);
    }
  if (found != expected) {
    std::ostringstream msg;
    msg << "disk |lambda| < " << R << " holds " << expected << " eigenvalues but subdivision resolved " << found;
    throw LocalizationError(msg.str());
  }
  std::sort(inside.begin(), inside.end(), [](const auto& a, const auto& b) { return a.lambda.real() < b.lambda.real(); });
  return inside;
}

/// Radius in rho between the last contour of index n0 - 1 and the first of index n0.
inline double low_edge(const BoundaryProblem& bp, int n0) {
  const auto cls = channel_classes(bp.eq.order);
  return 0.5 * (contour_center(bp, cls, n0 - 1, cls.size() - 1) + contour_center(bp, cls, n0, 0));
}

struct SpectrumTable {
  int n0 = 1;
  double low_radius = 0.0;           // lambda-disk radius covering everything below the contours
  std::vector<SpectralDatum> low;    // eigenvalues in the low disk
  std::vector<ContourResult> contours;
};

/// Eigenvalues below the contour regime plus the contour results for n in [n0, n_hi].
inline SpectrumTable locate_eigenvalues(const BoundaryProblem& bp, int n0, int n_hi, bool with_weights = false,
                                        const SpectralOptions& opt = {}) {
  SpectrumTable out;
  out.n0 = n0;
  const double edge = low_edge(bp, n0);
  out.low_radius = edge * edge;
  out.low = locate_in_disk(bp, out.low_radius, opt);
  out.contours = locate_contours(bp, n0, n_hi, with_weights, opt);
  return out;
}

// ---- asymptotic checks ----

/// |rho_nq - rho0_nq| over the contour ladder, one report per class (largest offset in the contour).
inline std::vector<FitReport> verify_eigenvalue_asymptotics(const BoundaryProblem& bp,
                                                            const std::vector<ContourResult>& contours) {
  const auto cls = channel_classes(bp.eq.order);
  std::vector<FitReport> out(cls.size());
  for (int c = 0; c < cls.size(); ++c) out[c].label = "class" + std::to_string(c);
  for (const auto& r : contours) {
    double dev = 0.0;
    for (const auto& d : r.eigen) dev = std::max(dev, std::abs(d.rho - r.center));
    out[r.cls].x.push_back(r.n);
    out[r.cls].deviation.push_back(dev);
  }
  for (auto& rep : out) rep.finish();
  return out;
}

/// (pi n / T)^{-1} D_1^{-1} W D_2 at rho = pi n / T.
inline Mat normalized_weight(const BoundaryProblem& bp, int n, const Mat& W) {
  const double r = kPi * n / bp.T();
  const CVec d1 = bp.eq.order.rho_power(1, r), d2 = bp.eq.order.rho_power(2, r);
  return d1.cwiseInverse().asDiagonal() * W * d2.asDiagonal() / r;
}

/// Limit L of the least-squares fit v(n) = L + B n^{-g} + C n^{-2g}.
inline Complex extrapolate_power_law(const std::vector<double>& n, const std::vector<Complex>& v, double g) {
  const int rows = static_cast<int>(n.size());
  Eigen::MatrixXd X(rows, 3), y(rows, 2);
  for (int i = 0; i < rows; ++i) {
    const double t = std::pow(n[i], -g);
    X.row(i) << 1.0, t, t * t;
    y.row(i) << v[i].real(), v[i].imag();
  }
  const Eigen::MatrixXd coef = X.colPivHouseholderQr().solve(y);
  return {coef(0, 0), coef(0, 1)};
}

struct WeightAsymptotics {
  std::vector<FitReport> deviation;  // per class: ||normalized - A_q||
  std::vector<Mat> limit;            // per class: normalized weight extrapolated in n^{-beta}
  std::vector<double> off_support;   // per class: max off-support |limit| / max on-support |theta|
};

/// Deviation from the leading law and the measured support of A_q.
inline WeightAsymptotics verify_weight_asymptotics(const BoundaryProblem& bp,
                                                   const std::vector<ContourResult>& contours) {
  const auto cls = channel_classes(bp.eq.order);
  const auto k = asymptotic_constants(bp);
  const double beta = bp.eq.order.beta_exp();
  const int m = bp.dim();
  WeightAsymptotics out;
  out.deviation.resize(cls.size());
  std::vector<std::vector<std::pair<double, Mat>>> series(cls.size());
  for (int c = 0; c < cls.size(); ++c) out.deviation[c].label = "class" + std::to_string(c);
  for (const auto& r : contours) {
    if (!r.has_weight) throw DomainError("weight asymptotics need contours with group weights");
    const Mat N = normalized_weight(bp, r.n, r.group_weight);
    out.deviation[r.cls].x.push_back(r.n);
    out.deviation[r.cls].deviation.push_back(max_norm(N - k.A[r.cls]));
    series[r.cls].emplace_back(r.n, N);
  }
  for (int c = 0; c < cls.size(); ++c) {
    out.deviation[c].finish();
    const auto& s = series[c];
    Mat lim = s.empty() ? Mat::Zero(m, m) : Mat(s.back().second);
    if (s.size() >= 4) {
      std::vector<double> n;
      for (const auto& [ni, Ni] : s) n.push_back(ni);
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          std::vector<Complex> v;
          for (const auto& [ni, Ni] : s) v.push_back(Ni(a, b));
          lim(a, b) = extrapolate_power_law(n, v, beta);
        }
    }
    double on = 0.0, off = 0.0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const bool support = a == b && std::abs(k.A[c](a, a)) > 0.0;
        if (support) {
          on = std::max(on, std::abs(k.theta(a)));
        } else {
          off = std::max(off, std::abs(lim(a, b)));
        }
      }
    out.limit.push_back(lim);
    out.off_support.push_back(on > 0.0 ? off / on : std::numeric_limits<double>::infinity());
  }
  return out;
}

struct NuEstimate {
  int channel = 0;
  double nu = 0.0;
  double slope = 0.0;      // 1 - 2 nu of the corrected fit
  double raw_slope = 0.0;  // plain log-log slope
  double residual = 0.0;
};

namespace detail {

/// Minimises over s near s0 the least-squares misfit of log w = a + s log n + b n^{-(1 - s)}.
/// The b term is the leading boundary-coefficient correction, which decays like n^{-2 nu}.
inline std::pair<double, double> corrected_slope(const std::vector<double>& n, const std::vector<double>& w, double s0) {
  const auto N = static_cast<Eigen::Index>(n.size());
  double best = std::numeric_limits<double>::infinity(), bs = s0;
  for (int i = -2000; i <= 2000; ++i) {
    const double s = s0 + 1e-4 * i;
    if (s >= 1.0) break;
    Eigen::MatrixXd A(N, 2);
    Eigen::VectorXd y(N);
    for (Eigen::Index k = 0; k < N; ++k) {
      A(k, 0) = 1.0;
      A(k, 1) = std::pow(n[k], s - 1.0);
      y(k) = std::log(w[k]) - s * std::log(n[k]);
    }
    const double r = (A * A.colPivHouseholderQr().solve(y) - y).squaredNorm();
    if (r < best) best = r, bs = s;
  }
  return {bs, std::sqrt(best / N)};
}

}  // namespace detail

/// nu_s from the growth |W_ss| ~ n^{1 - 2 nu_s} of the diagonal group-weight entries, s in the class.
/// The plain log-log slope seeds a fit that also carries the n^{-2 nu_s} correction.
inline std::vector<NuEstimate> recover_nu(const std::vector<ContourResult>& contours, int c) {
  std::vector<const ContourResult*> rs;
  for (const auto& r : contours)
    if (r.cls == c && r.has_weight) rs.push_back(&r);
  if (rs.size() < 4) throw DomainError("recovering nu needs group weights at >= 4 ladder points");
  std::sort(rs.begin(), rs.end(), [](auto* a, auto* b) { return a->n < b->n; });
  std::vector<NuEstimate> out;
  for (int s : rs.front()->group) {
    std::vector<double> x, y;
    for (auto* r : rs) {
      x.push_back(r->n);
      y.push_back(std::abs(r->group_weight(s, s)));
    }
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      const double local = std::log(y[i + 1] / y[i]) / std::log(x[i + 1] / x[i]);
      lo = std::min(lo, local);
      hi = std::max(hi, local);
    }
    if (hi - lo > 0.5) throw RegimeError("diagonal weights are not yet power-law on this ladder");
    const auto fit = loglog_fit(x, y);
    const auto [slope, residual] = detail::corrected_slope(x, y, fit.slope);
    out.push_back({s, 0.5 * (1.0 - slope), slope, fit.slope, residual});
  }
  return out;
}

/// lim (lambda - lambda_p) M(lambda) by symmetric differences and Richardson extrapolation.
inline Mat residue_richardson(const BoundaryProblem& bp, Complex lambda_p, double eps, const FssOptions& opt = {}) {
  auto g = [&](double e) {
    const Complex d(e, 0.0);
    return Mat(0.5 * (d * weyl(bp, lambda_p + d, opt).M - d * weyl(bp, lambda_p - d, opt).M));
  };
  const Mat a = g(eps), b = g(0.5 * eps);
  return (4.0 * b - a) / 3.0;
}

struct PartialFractionReport {
  Mat direct;
  std::vector<int> terms;         // number of eigenvalue groups in the partial sum
  std::vector<double> distance;   // ||direct - partial sum|| after each group
};

/// Partial sums of sum_p alpha_p / (m_p (lambda - lambda_p)) against the directly computed M(lambda).
inline PartialFractionReport weyl_partial_fraction(const BoundaryProblem& bp, Complex lambda,
                                                   const std::vector<std::pair<Complex, Mat>>& data,
                                                   const FssOptions& opt = {}) {
  PartialFractionReport out;
  out.direct = weyl(bp, lambda, opt).M;
  Mat sum = Mat::Zero(bp.dim(), bp.dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    sum += data[i].second / (lambda - data[i].first);
    out.terms.push_back(static_cast<int>(i + 1));
    out.distance.push_back(max_norm(out.direct - sum));
  }
  return out;
}

/// Sum of the data as given (the m_p^{-1} alpha_p are expected); zero for empty data.
inline Mat partial_fraction_sum(int m, Complex lambda, const std::vector<std::pair<Complex, Mat>>& data) {
  Mat sum = Mat::Zero(m, m);
  for (const auto& [lp, a] : data) sum += a / (lambda - lp);
  return sum;
}

}  // namespace bessel_sl
