#pragma once

// Matrix solutions of -Y'' + (omega/x^2 + Q) Y = lambda Y built from the
// Volterra equation S = C_1 A + C_2 B + int_0^x G(x,t) Q(t) S(t) dt,
// G(x,t) = C_2(x) C_1(t) - C_1(x) C_2(t).

#include "mesh.hpp"
#include "problem.hpp"
#include "quadrature.hpp"

#include <deque>
#include <string>

namespace bessel_sl {

struct FssOptions {
  double picard_tol = 1e-12;
  int max_iterations = 200;
  MeshOptions mesh{};
  std::vector<double> extra_breaks;
};

struct IterationReport {
  int total_iterations = 0;
  int max_panel_iterations = 0;
  int panel_splits = 0;
  double contraction = 0.0;  // largest observed ratio of successive Picard deltas
};

/// Values and x-derivatives of a matrix solution family on a grid.
struct FssEvaluation {
  std::string family;
  Complex lambda{};
  std::vector<double> grid;
  std::vector<Mat> values;
  std::vector<Mat> derivatives;
  IterationReport report{};

  ValueDeriv at(std::size_t i) const { return {values[i], derivatives[i]}; }
};

/// Diagonal C_j(x, lambda) for a batch of abscissas: per x, (diag values, diag x-derivatives).
inline std::vector<std::pair<CVec, CVec>> diagonal_c(const SingularOrder& order, int j, const std::vector<double>& xs,
                                                     Complex rho) {
  const int m = order.dim();
  std::vector<std::pair<CVec, CVec>> out(xs.size(), {CVec(m), CVec(m)});
  for (int q = 0; q < m; ++q) {
    const auto v = order.channel(q).c_scaled(j, xs, rho);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out[i].first(q) = v[i].first;
      out[i].second(q) = v[i].second;
    }
  }
  return out;
}

/// Unperturbed diagonal solutions: family 'C' (C_j(x, rho^2)) or 'E' (E_k(x, rho)).
inline FssEvaluation build_diagonal(const SingularOrder& order, char family, int index, const std::vector<double>& xs,
                                    Complex rho) {
  if (index != 1 && index != 2) throw DomainError("family index must be 1 or 2");
  if (rho.real() < 0.0) throw DomainError("rho must satisfy Re rho >= 0");
  const int m = order.dim();
  FssEvaluation out{std::string(1, family) + std::to_string(index), rho * rho, xs, {}, {}, {}};
  out.values.assign(xs.size(), Mat::Zero(m, m));
  out.derivatives.assign(xs.size(), Mat::Zero(m, m));
  for (int q = 0; q < m; ++q) {
    try {
      if (family == 'C') {
        const auto v = order.channel(q).c_scaled(index, xs, rho);
        for (std::size_t i = 0; i < xs.size(); ++i) {
          out.values[i](q, q) = v[i].first;
          out.derivatives[i](q, q) = v[i].second;
        }
      } else if (family == 'E') {
        const auto e = eval_jost(order.channel(q), index, xs, rho);
        for (std::size_t i = 0; i < xs.size(); ++i) {
          out.values[i](q, q) = e.values[i];
          out.derivatives[i](q, q) = e.derivatives[i];
        }
      } else {
        throw DomainError("diagonal family must be 'C' or 'E'");
      }
    } catch (const Error& err) {
      throw Error(err.kind(), "channel " + std::to_string(q) + ": " + err.what());
    }
  }
  return out;
}

/// Converged solution of the Volterra equation, stored panel by panel so it
/// can be evaluated (value and derivative) anywhere in (0, T].
class VolterraSolution {
 public:
  struct Panel {
    double a = 0.0, b = 0.0;
    bool near = true;
    std::vector<Mat> g1, g2;  // near: C1 Q S, C2 Q S; far: Uc Q S, Us Q S (at Gauss nodes)
    Mat acc1, acc2;           // near: int_0^a C1 Q S, int_0^a C2 Q S; far: S(a), S'(a)
    std::vector<LocalTaylor> uc, us;
  };

  VolterraSolution(SingularOrder order, Complex lambda, Mat A, Mat B, bool transposed)
      : order_(std::move(order)), lambda_(lambda), rho_(rho_of(lambda)), A_(std::move(A)), B_(std::move(B)),
        transposed_(transposed) {}

  Complex lambda() const { return lambda_; }
  Complex rho() const { return rho_; }
  const IterationReport& report() const { return report_; }
  const std::vector<Panel>& panels() const { return panels_; }
  double T() const { return panels_.back().b; }

  ValueDeriv eval(double x) const {
    if (!(x > 0.0) || x > T() * (1 + 1e-12)) throw DomainError("evaluation abscissa outside (0, T]");
    auto it = std::upper_bound(panels_.begin(), panels_.end(), x, [](double v, const Panel& p) { return v < p.b; });
    if (it == panels_.end()) --it;
    ValueDeriv r = eval_in(*it, x);
    if (transposed_) {
      r.value.transposeInPlace();
      r.deriv.transposeInPlace();
    }
    return r;
  }

  FssEvaluation evaluate(const std::vector<double>& xs, const std::string& family) const {
    FssEvaluation out{family, lambda_, xs, {}, {}, report_};
    for (double x : xs) {
      auto v = eval(x);
      out.values.push_back(std::move(v.value));
      out.derivatives.push_back(std::move(v.deriv));
    }
    return out;
  }

  // Building blocks used by the solver.
  const SingularOrder& order() const { return order_; }
  const Mat& A() const { return A_; }
  const Mat& B() const { return B_; }
  void push_panel(Panel p) { panels_.push_back(std::move(p)); }
  IterationReport& mutable_report() { return report_; }

  ValueDeriv eval_in(const Panel& p, double x) const {
    const auto& g = GaussRule::standard();
    const double h = 0.5 * (p.b - p.a);
    const int m = order_.dim();
    Mat I1 = Mat::Zero(m, m), I2 = Mat::Zero(m, m);
    if (!p.g1.empty()) {
      const auto row = g.integration_row(std::clamp((x - p.a) / h - 1.0, -1.0, 1.0));
      for (int k = 0; k < g.size(); ++k) {
        I1 += (h * row[k]) * p.g1[k];
        I2 += (h * row[k]) * p.g2[k];
      }
    }
    if (p.near) {
      const auto c1 = diagonal_c(order_, 1, {x}, rho_)[0];
      const auto c2 = diagonal_c(order_, 2, {x}, rho_)[0];
      const Mat P1 = p.acc1 + I1, P2 = p.acc2 + I2;
      return {c1.first.asDiagonal() * A_ + c2.first.asDiagonal() * B_ + c2.first.asDiagonal() * P1 -
                  c1.first.asDiagonal() * P2,
              c1.second.asDiagonal() * A_ + c2.second.asDiagonal() * B_ + c2.second.asDiagonal() * P1 -
                  c1.second.asDiagonal() * P2};
    }
    CVec uc(m), duc(m), us(m), dus(m);
    for (int q = 0; q < m; ++q) {
      std::tie(uc(q), duc(q)) = p.uc[q].eval(x - p.a);
      std::tie(us(q), dus(q)) = p.us[q].eval(x - p.a);
    }
    return {uc.asDiagonal() * p.acc1 + us.asDiagonal() * p.acc2 + us.asDiagonal() * I1 - uc.asDiagonal() * I2,
            duc.asDiagonal() * p.acc1 + dus.asDiagonal() * p.acc2 + dus.asDiagonal() * I1 - duc.asDiagonal() * I2};
  }

 private:
  SingularOrder order_;
  Complex lambda_;
  Complex rho_;
  Mat A_, B_;
  bool transposed_ = false;
  std::vector<Panel> panels_;
  IterationReport report_{};
};

namespace detail {

// Column-wise relative sup-norm distance between two nodal iterates.
inline double iterate_delta(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  const auto cols = a.front().cols();
  double worst = 0.0;
  for (Eigen::Index c = 0; c < cols; ++c) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      diff = std::max(diff, (a[i].col(c) - b[i].col(c)).cwiseAbs().maxCoeff());
      scale = std::max(scale, b[i].col(c).cwiseAbs().maxCoeff());
    }
    if (scale > 0.0) worst = std::max(worst, diff / scale);
  }
  return worst;
}

// Picard iteration on one panel for S_i = H_i + L_i J1_i - R_i J2_i,
// J1 = int_a^{t_i} W1 Q S, J2 = int_a^{t_i} W2 Q S, with W1/W2 the two weight
// diagonals (near: C1/C2 with L = C2, R = C1; far: Uc/Us with L = Us, R = Uc).
struct PanelSolve {
  bool ok = false;
  int iterations = 0;
  double contraction = 0.0;
  std::vector<Mat> S, g1, g2;
};

inline PanelSolve picard_panel(const std::vector<Mat>& H, const std::vector<CVec>& W1, const std::vector<CVec>& W2,
                               const std::vector<CVec>& L, const std::vector<CVec>& R, const std::vector<Mat>& Qn,
                               double h, const FssOptions& opt) {
  const auto& g = GaussRule::standard();
  const int n = g.size();
  PanelSolve out;
  out.S = H;
  out.g1.resize(n);
  out.g2.resize(n);
  double prev = 0.0;
  int growth = 0;
  const Eigen::MatrixXd& Im = g.integration();
  for (int it = 1; it <= opt.max_iterations; ++it) {
    for (int k = 0; k < n; ++k) {
      const Mat QS = Qn[k] * out.S[k];
      out.g1[k] = W1[k].asDiagonal() * QS;
      out.g2[k] = W2[k].asDiagonal() * QS;
    }
    std::vector<Mat> next(n);
    for (int i = 0; i < n; ++i) {
      Mat J1 = Mat::Zero(H[0].rows(), H[0].cols()), J2 = J1;
      for (int k = 0; k < n; ++k) {
        J1 += (h * Im(i, k)) * out.g1[k];
        J2 += (h * Im(i, k)) * out.g2[k];
      }
      next[i] = H[i] + L[i].asDiagonal() * J1 - R[i].asDiagonal() * J2;
    }
    const double delta = iterate_delta(out.S, next);
    out.S = std::move(next);
    out.iterations = it;
    if (prev > 0.0 && delta > 0.0) out.contraction = std::max(out.contraction, delta / prev);
    if (delta <= opt.picard_tol) {
      for (int k = 0; k < n; ++k) {
        const Mat QS = Qn[k] * out.S[k];
        out.g1[k] = W1[k].asDiagonal() * QS;
        out.g2[k] = W2[k].asDiagonal() * QS;
      }
      out.ok = true;
      return out;
    }
    growth = (prev > 0.0 && delta > prev) ? growth + 1 : 0;
    if (growth >= 3 || !std::isfinite(delta)) return out;
    prev = delta;
  }
  return out;
}

}  // namespace detail

namespace detail {

// int_0^eps C_j Q S dt for j = 1, 2 with S ~ C_1 A + C_2 B, C_j ~ c_j0 t^mu_j and Q ~ Q(eps).
inline std::pair<Mat, Mat> origin_moments(const Equation& eq, const Mat& A, const Mat& B, double eps) {
  const int m = eq.order.dim();
  Mat P1 = Mat::Zero(m, m), P2 = Mat::Zero(m, m);
  if (eq.q.is_zero()) return {P1, P2};
  const Mat Q = eq.q(eps);
  auto lead = [&](int j, int q) {
    const auto& ch = eq.order.channel(q);
    return std::make_pair(j == 1 ? ch.c10() : ch.c20(), eq.order.mu(j, q));
  };
  for (int r = 0; r < m; ++r)
    for (int s = 0; s < m; ++s) {
      if (Q(r, s) == 0.0) continue;
      for (int j = 1; j <= 2; ++j) {
        const auto [cr, mr] = lead(j, r);
        Mat& P = j == 1 ? P1 : P2;
        for (int k = 1; k <= 2; ++k) {
          const auto [cs, ms] = lead(k, s);
          const double e = mr + ms + 1.0;
          if (e <= 0.0) continue;
          const Complex w = Q(r, s) * cr * cs * std::pow(eps, e) / e;
          P.row(r) += w * (k == 1 ? A : B).row(s);
        }
      }
    }
  return {P1, P2};
}

}  // namespace detail

/// Solves S = C_1 A + C_2 B + int_0^x G Q S on (0, T] by panel-wise Picard iteration.
inline VolterraSolution solve_fss(const Equation& eq, const Mat& A, const Mat& B, Complex lambda,
                                  const FssOptions& opt = {}, bool transposed = false) {
  const int m = eq.order.dim();
  const Complex rho = rho_of(lambda);
  auto breaks = eq.q.breakpoints(eq.T);
  breaks.insert(breaks.end(), opt.extra_breaks.begin(), opt.extra_breaks.end());
  const Mesh mesh = build_mesh(eq.T, rho, eq.q.sup_norm(eq.T), breaks, opt.mesh);
  VolterraSolution sol(eq.order, lambda, A, B, transposed);
  const auto& g = GaussRule::standard();
  const int n = g.size();
  const bool zero_q = eq.q.is_zero();

  // [0, eps]: the integral term is below rounding there.
  {
    VolterraSolution::Panel p;
    p.a = 0.0;
    p.b = mesh.edges[1];
    p.near = true;
    p.acc1 = Mat::Zero(m, m);
    p.acc2 = Mat::Zero(m, m);
    sol.push_panel(std::move(p));
  }

  std::deque<std::pair<double, double>> todo;
  for (std::size_t i = 1; i < mesh.panels(); ++i) todo.emplace_back(mesh.edges[i], mesh.edges[i + 1]);

  auto [P1, P2] = detail::origin_moments(eq, A, B, mesh.edges[1]);
  Mat Sa, dSa;
  bool far_started = false;
  auto& rep = sol.mutable_report();

  while (!todo.empty()) {
    const auto [a, b] = todo.front();
    todo.pop_front();
    const double h = 0.5 * (b - a);
    std::vector<double> t(n);
    for (int k = 0; k < n; ++k) t[k] = a + h * (1.0 + g.nodes()[k]);
    std::vector<Mat> Qn(n);
    for (int k = 0; k < n; ++k) Qn[k] = zero_q ? Mat::Zero(m, m) : Mat(eq.q(t[k]));

    const bool near = b <= mesh.x_switch * (1 + 1e-12);
    VolterraSolution::Panel p;
    p.a = a;
    p.b = b;
    p.near = near;
    std::vector<Mat> H(n);
    std::vector<CVec> W1(n), W2(n), L(n), R(n);
    if (near) {
      const auto c1 = diagonal_c(eq.order, 1, t, rho);
      const auto c2 = diagonal_c(eq.order, 2, t, rho);
      for (int k = 0; k < n; ++k) {
        W1[k] = c1[k].first;
        W2[k] = c2[k].first;
        L[k] = c2[k].first;
        R[k] = c1[k].first;
        H[k] = c1[k].first.asDiagonal() * A + c2[k].first.asDiagonal() * B + c2[k].first.asDiagonal() * P1 -
               c1[k].first.asDiagonal() * P2;
      }
      p.acc1 = P1;
      p.acc2 = P2;
    } else {
      if (!far_started) {
        const auto v = sol.eval_in(sol.panels().back(), a);
        Sa = v.value;
        dSa = v.deriv;
        far_started = true;
      }
      for (int q = 0; q < m; ++q) {
        p.uc.emplace_back(eq.order.omega(q), lambda, a, 1.0, 0.0, b - a);
        p.us.emplace_back(eq.order.omega(q), lambda, a, 0.0, 1.0, b - a);
      }
      for (int k = 0; k < n; ++k) {
        CVec uc(m), us(m);
        for (int q = 0; q < m; ++q) {
          uc(q) = p.uc[q].eval(t[k] - a).first;
          us(q) = p.us[q].eval(t[k] - a).first;
        }
        W1[k] = uc;
        W2[k] = us;
        L[k] = us;
        R[k] = uc;
        H[k] = uc.asDiagonal() * Sa + us.asDiagonal() * dSa;
      }
      p.acc1 = Sa;
      p.acc2 = dSa;
    }

    auto res = detail::picard_panel(H, W1, W2, L, R, Qn, h, opt);
    if (!res.ok) {
      if (b - a < 1e-10 * eq.T) throw AccuracyError("Picard iteration failed to converge on a minimal panel");
      const double mid = 0.5 * (a + b);
      todo.emplace_front(mid, b);
      todo.emplace_front(a, mid);
      ++rep.panel_splits;
      continue;
    }
    rep.total_iterations += res.iterations;
    rep.max_panel_iterations = std::max(rep.max_panel_iterations, res.iterations);
    rep.contraction = std::max(rep.contraction, res.contraction);
    p.g1 = std::move(res.g1);
    p.g2 = std::move(res.g2);
    if (near) {
      for (int k = 0; k < n; ++k) {
        P1 += (h * g.weights()[k]) * p.g1[k];
        P2 += (h * g.weights()[k]) * p.g2[k];
      }
    }
    sol.push_panel(std::move(p));
    if (!near) {
      const auto v = sol.eval_in(sol.panels().back(), b);
      Sa = v.value;
      dSa = v.deriv;
    }
  }
  return sol;
}

/// S_j(x, lambda): free term C_j.
inline VolterraSolution solve_S(const Equation& eq, int j, Complex lambda, const FssOptions& opt = {}) {
  if (j != 1 && j != 2) throw DomainError("S index must be 1 or 2");
  const int m = eq.order.dim();
  const Mat I = Mat::Identity(m, m), Z = Mat::Zero(m, m);
  return solve_fss(eq, j == 1 ? I : Z, j == 1 ? Z : I, lambda, opt);
}

/// S_j^*(x, lambda) = (S_j for Q^T)^T, the row solutions of -Z'' + Z(omega/x^2 + Q) = lambda Z.
inline VolterraSolution solve_S_star(const Equation& eq, int j, Complex lambda, const FssOptions& opt = {}) {
  if (j != 1 && j != 2) throw DomainError("S* index must be 1 or 2");
  const int m = eq.order.dim();
  const Mat I = Mat::Identity(m, m), Z = Mat::Zero(m, m);
  return solve_fss(eq.transposed(), j == 1 ? I : Z, j == 1 ? Z : I, lambda, opt, true);
}

/// |(1/2 pi i) contour integral of S_j(x, lambda) d lambda| over the circle |lambda - center| = radius.
inline double entirety_probe(const Equation& eq, int j, double x, Complex center, double radius, int K = 64,
                             const FssOptions& opt = {}) {
  const int m = eq.order.dim();
  Mat acc = Mat::Zero(m, m);
  double scale = 0.0;
  for (int k = 0; k < K; ++k) {
    const Complex e = std::polar(1.0, 2.0 * kPi * k / K);
    const Mat s = solve_S(eq, j, center + radius * e, opt).eval(x).value;
    acc += s * (radius * e / double(K));
    scale = std::max(scale, max_norm(s));
  }
  return max_norm(acc) / std::max(scale, 1e-300);
}

/// For untransposed solutions: max over xs of ||S(x) - F(x) - int_0^x G Q S|| / ||S(x)||, the integral recomputed
/// by an independent composite Gauss rule (valid while |rho x| stays moderate).
inline double volterra_residual(const VolterraSolution& sol, const Equation& eq, const std::vector<double>& xs) {
  static const GaussRule rule(24);
  const int m = eq.order.dim();
  const Complex rho = sol.rho();
  double worst = 0.0;
  for (double x : xs) {
    std::vector<double> cuts{x};
    while (cuts.back() > 1e-40 * x) cuts.push_back(cuts.back() / 2.0);
    for (double br : eq.q.breakpoints(x)) cuts.push_back(br);
    cuts.push_back(0.0);
    std::sort(cuts.begin(), cuts.end());
    Mat P1 = Mat::Zero(m, m), P2 = Mat::Zero(m, m);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double a = cuts[i], b = cuts[i + 1];
      if (a == 0.0) continue;
      std::vector<double> t(rule.size());
      for (int k = 0; k < rule.size(); ++k) t[k] = a + 0.5 * (b - a) * (1.0 + rule.nodes()[k]);
      const auto c1 = diagonal_c(eq.order, 1, t, rho);
      const auto c2 = diagonal_c(eq.order, 2, t, rho);
      for (int k = 0; k < rule.size(); ++k) {
        const Mat QS = eq.q(t[k]) * sol.eval(t[k]).value;
        P1 += (0.5 * (b - a) * rule.weights()[k]) * (c1[k].first.asDiagonal() * QS);
        P2 += (0.5 * (b - a) * rule.weights()[k]) * (c2[k].first.asDiagonal() * QS);
      }
    }
    const auto c1 = diagonal_c(eq.order, 1, {x}, rho)[0].first;
    const auto c2 = diagonal_c(eq.order, 2, {x}, rho)[0].first;
    const Mat S = sol.eval(x).value;
    const Mat rhs = c1.asDiagonal() * sol.A() + c2.asDiagonal() * sol.B() + c2.asDiagonal() * P1 - c1.asDiagonal() * P2;
    worst = std::max(worst, max_norm(S - rhs) / std::max(max_norm(S), 1e-300));
  }
  return worst;
}

}  // namespace bessel_sl
