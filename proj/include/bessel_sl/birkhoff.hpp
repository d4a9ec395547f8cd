#pragma once

// Birkhoff-type solutions Y_k(x, rho) ~ exp(+-i rho x) for large |rho|, from
// Y = E_k + (1/(2 i rho)) [E_1(x) int E_2 Q Y + E_2(x) int E_1 Q Y] with the
// integration directions chosen per sector so every kernel stays bounded.

#include "matrix_fss.hpp"

#include <optional>

namespace bessel_sl {

/// Omega_0: arg rho >= 0 (Y_1 full-interval, Y_2 Volterra); Omega_{-1}: arg rho < 0.
enum class Sector { Upper, Lower };

struct BirkhoffOptions {
  double picard_tol = 1e-13;
  int max_iterations = 200;
  double accept_bound = 0.5;
  MeshOptions mesh{};
  std::optional<Sector> sector;  // default from arg rho
};

struct BirkhoffSolve {
  Complex rho{};
  int k = 1;
  Sector sector = Sector::Upper;
  double contraction_bound = 0.0;
  std::vector<double> deltas;  // sup-norm change of the normalised iterate per sweep
  FssEvaluation Y;
};

namespace detail {

struct BirkhoffTerm {
  int a;         // E_a(x) factor
  int b;         // E_b(t) inside the integral
  bool forward;  // int_0^x (true) or int_x^T (false)
  double sign;
};

inline std::vector<BirkhoffTerm> birkhoff_terms(Sector s, int k) {
  const bool full = (s == Sector::Upper && k == 1) || (s == Sector::Lower && k == 2);
  if (!full) return {{1, 2, true, 1.0}, {2, 1, true, -1.0}};
  if (k == 1) return {{1, 2, true, 1.0}, {2, 1, false, 1.0}};
  return {{1, 2, false, -1.0}, {2, 1, true, -1.0}};
}

// Jost data divided by the pure exponentials: hat E_a = E_a / p_a, p_1 = exp(i rho x), p_2 = exp(-i rho x).
struct HatJost {
  std::vector<CVec> e[2];
  std::vector<CVec> de[2];
};

inline HatJost hat_jost(const SingularOrder& order, const std::vector<double>& xs, Complex rho) {
  const int m = order.dim();
  HatJost out;
  for (int a = 0; a < 2; ++a) {
    out.e[a].assign(xs.size(), CVec(m));
    out.de[a].assign(xs.size(), CVec(m));
  }
  for (int q = 0; q < m; ++q)
    for (int a = 0; a < 2; ++a) {
      const auto j = eval_jost(order.channel(q), a + 1, xs, rho);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const Complex inv_p = std::exp((a == 0 ? -1.0 : 1.0) * kI * rho * xs[i]);
        out.e[a][i](q) = j.values[i] * inv_p;
        out.de[a][i](q) = j.derivatives[i] * inv_p;
      }
    }
  return out;
}

}  // namespace detail

/// Solves for Y_k at rho; values and derivatives are reported at xs (each in (0, T]).
inline BirkhoffSolve solve_Y(const Equation& eq, int k, Complex rho, const std::vector<double>& xs,
                             const BirkhoffOptions& opt = {}) {
  if (k != 1 && k != 2) throw DomainError("Birkhoff index must be 1 or 2");
  if (rho.real() < 0.0 || std::abs(rho) == 0.0) throw DomainError("Birkhoff solutions need Re rho >= 0, rho != 0");
  for (double x : xs)
    if (!(x > 0.0) || x > eq.T) throw DomainError("Birkhoff evaluation abscissa outside (0, T]");
  const int m = eq.order.dim();
  const double r = std::abs(rho);
  const Sector sector = opt.sector ? *opt.sector : (std::arg(rho) >= 0.0 ? Sector::Upper : Sector::Lower);
  const auto terms = detail::birkhoff_terms(sector, k);

  auto breaks = eq.q.breakpoints(eq.T);
  breaks.insert(breaks.end(), xs.begin(), xs.end());
  if (1.0 / r < eq.T) breaks.push_back(1.0 / r);
  const Mesh mesh = build_mesh(eq.T, rho, eq.q.sup_norm(eq.T), breaks, opt.mesh);
  const auto& g = GaussRule::standard();
  const int n = g.size();
  const std::size_t P = mesh.panels() - 1;  // panel 0 = [0, eps] carries no nodes
  const std::vector<double> edges(mesh.edges.begin() + 1, mesh.edges.end());

  std::vector<double> t;
  t.reserve(P * n);
  for (std::size_t p = 0; p < P; ++p) {
    const double a = edges[p], b = edges[p + 1];
    for (int i = 0; i < n; ++i) t.push_back(a + 0.5 * (b - a) * (1.0 + g.nodes()[i]));
  }
  const std::size_t N = t.size();
  const double mu11 = eq.order.mu(1, 0);
  auto log_n = [&](double x) {
    return r * x < 1.0 ? mu11 * std::log(rho * x) : (k == 1 ? 1.0 : -1.0) * kI * rho * x;
  };
  auto log_p = [&](int a, double x) { return (a == 1 ? 1.0 : -1.0) * kI * rho * x; };
  auto la = [&](int a, double x) { return log_p(a, x) - log_n(x); };
  auto lb = [&](int b, double x) { return log_p(b, x) + log_n(x); };

  const auto H = detail::hat_jost(eq.order, t, rho);
  const auto He = detail::hat_jost(eq.order, edges, rho);
  std::vector<Mat> Qn(N);
  for (std::size_t i = 0; i < N; ++i) Qn[i] = eq.q(t[i]);

  BirkhoffSolve out;
  out.rho = rho;
  out.k = k;
  out.sector = sector;

  // sup_x int ||K(x, t)|| dt, K = (1/2 i rho)(n(t)/n(x)) E_a(x) E_b(t) Q(t), row-sum norm.
  {
    std::vector<double> qrow(N * m);
    for (std::size_t i = 0; i < N; ++i)
      for (int q = 0; q < m; ++q) qrow[i * m + q] = Qn[i].row(q).cwiseAbs().sum();
    double bound = 0.0;
    std::vector<double> acc(m);
    for (std::size_t i = 0; i < N; ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const std::size_t pi = i / n;
      const int li = static_cast<int>(i % n);
      for (const auto& term : terms) {
        const Complex lai = la(term.a, t[i]);
        for (std::size_t kk = 0; kk < N; ++kk) {
          const std::size_t pk = kk / n;
          const int lk = static_cast<int>(kk % n);
          const double hw = 0.5 * (edges[pk + 1] - edges[pk]);
          double w;
          if (pk == pi) {
            const double fwd = g.integration()(li, lk);
            w = hw * std::abs(term.forward ? fwd : g.weights()[lk] - fwd);
          } else if ((pk < pi) == term.forward) {
            w = hw * g.weights()[lk];
          } else {
            continue;
          }
          const double f = std::exp((lai + lb(term.b, t[kk])).real());
          for (int q = 0; q < m; ++q)
            acc[q] += w * f * std::abs(H.e[term.a - 1][i](q) * H.e[term.b - 1][kk](q)) * qrow[kk * m + q];
        }
      }
      for (int q = 0; q < m; ++q) bound = std::max(bound, acc[q] / (2.0 * r));
    }
    out.contraction_bound = bound;
    if (!(bound < opt.accept_bound)) {
      std::ostringstream msg;
      msg << "Birkhoff kernel bound " << bound << " is not below " << opt.accept_bound << " at |rho| = " << r;
      throw RhoTooSmallError(msg.str(), bound);
    }
  }

  // Free term in normalised form.
  std::vector<Mat> u0(N);
  for (std::size_t i = 0; i < N; ++i)
    u0[i] = (H.e[k - 1][i] * std::exp(log_p(k, t[i]) - log_n(t[i]))).asDiagonal().toDenseMatrix();

  struct Sweep {
    std::vector<Mat> u;
    std::vector<Mat> edge_val, edge_der;
  };
  const Complex pref = 1.0 / (2.0 * kI * rho);
  auto sweep = [&](const std::vector<Mat>& u, bool with_edges) {
    Sweep s;
    s.u = u0;
    if (with_edges) {
      s.edge_val.assign(edges.size(), Mat::Zero(m, m));
      s.edge_der.assign(edges.size(), Mat::Zero(m, m));
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const Complex f = std::exp(log_p(k, edges[e]) - log_n(edges[e]));
        s.edge_val[e] = (He.e[k - 1][e] * f).asDiagonal();
        s.edge_der[e] = (He.de[k - 1][e] * f).asDiagonal();
      }
    }
    for (const auto& term : terms) {
      std::vector<Mat> Hk(N);
      for (std::size_t i = 0; i < N; ++i) Hk[i] = H.e[term.b - 1][i].asDiagonal() * (Qn[i] * u[i]);
      Mat C = Mat::Zero(m, m);
      auto add_edge = [&](std::size_t e, const Mat& acc) {
        if (!with_edges) return;
        s.edge_val[e] += (term.sign * pref) * (He.e[term.a - 1][e].asDiagonal() * acc);
        s.edge_der[e] += (term.sign * pref) * (He.de[term.a - 1][e].asDiagonal() * acc);
      };
      auto panel = [&](std::size_t p) {
        const double a = edges[p], b = edges[p + 1], hw = 0.5 * (b - a);
        const double from = term.forward ? a : b, to = term.forward ? b : a;
        const Complex la_from = la(term.a, from);
        for (int i = 0; i < n; ++i) {
          const std::size_t gi = p * n + i;
          const Complex lai = la(term.a, t[gi]);
          Mat acc = std::exp(lai - la_from) * C;
          for (int kk = 0; kk < n; ++kk) {
            const double fwd = g.integration()(i, kk);
            const double w = hw * (term.forward ? fwd : g.weights()[kk] - fwd);
            acc += (w * std::exp(lai + lb(term.b, t[p * n + kk]))) * Hk[p * n + kk];
          }
          s.u[gi] += (term.sign * pref) * (H.e[term.a - 1][gi].asDiagonal() * acc);
        }
        const Complex la_to = la(term.a, to);
        Mat next = std::exp(la_to - la_from) * C;
        for (int kk = 0; kk < n; ++kk)
          next += (hw * g.weights()[kk] * std::exp(la_to + lb(term.b, t[p * n + kk]))) * Hk[p * n + kk];
        C = std::move(next);
      };
      if (term.forward) {
        add_edge(0, C);
        for (std::size_t p = 0; p < P; ++p) {
          panel(p);
          add_edge(p + 1, C);
        }
      } else {
        add_edge(P, C);
        for (std::size_t p = P; p-- > 0;) {
          panel(p);
          add_edge(p, C);
        }
      }
    }
    return s;
  };

  std::vector<Mat> u = u0;
  bool converged = false;
  for (int it = 0; it < opt.max_iterations; ++it) {
    auto s = sweep(u, false);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      diff = std::max(diff, max_norm(s.u[i] - u[i]));
      scale = std::max(scale, max_norm(s.u[i]));
    }
    u = std::move(s.u);
    out.deltas.push_back(diff / scale);
    if (diff <= opt.picard_tol * scale) {
      converged = true;
      break;
    }
  }
  if (!converged) throw AccuracyError("Birkhoff successive approximations did not converge");
  const auto fin = sweep(u, true);

  out.Y = FssEvaluation{"Y" + std::to_string(k), rho * rho, xs, {}, {}, {}};
  out.Y.report.total_iterations = static_cast<int>(out.deltas.size());
  out.Y.report.contraction = out.contraction_bound;
  for (double x : xs) {
    auto it = std::min_element(edges.begin(), edges.end(),
                               [&](double a, double b) { return std::abs(a - x) < std::abs(b - x); });
    const std::size_t e = static_cast<std::size_t>(it - edges.begin());
    if (std::abs(edges[e] - x) > 1e-12 * std::max(1.0, x)) throw DomainError("evaluation abscissa is not a mesh edge");
    const Complex nx = std::exp(log_n(edges[e]));
    out.Y.values.push_back(nx * fin.edge_val[e]);
    out.Y.derivatives.push_back(nx * fin.edge_der[e]);
  }
  return out;
}

/// Per-iteration sup-norm deltas of the normalised iterates.
inline std::vector<double> successive_approximation_report(const Equation& eq, int k, Complex rho,
                                                           const BirkhoffOptions& opt = {}) {
  return solve_Y(eq, k, rho, {eq.T}, opt).deltas;
}

}  // namespace bessel_sl
