#pragma once

#include "potential.hpp"
#include "scalar_fss.hpp"

#include <memory>

namespace bessel_sl {

/// Diagonal singular data omega = diag(nu_q^2 - 1/4), nu nonincreasing.
class SingularOrder {
 public:
  SingularOrder() = default;

  explicit SingularOrder(std::vector<double> nu, std::vector<double> c10 = {}) : nu_(std::move(nu)) {
    if (nu_.empty()) throw DomainError("order vector must be nonempty");
    if (c10.empty()) c10.assign(nu_.size(), 1.0);
    if (c10.size() != nu_.size()) throw DomainError("c10 must have one entry per channel");
    for (std::size_t q = 0; q < nu_.size(); ++q) {
      if (q > 0 && nu_[q] > nu_[q - 1]) throw DomainError("nu must be nonincreasing");
      if (!(c10[q] > 0.0)) throw DomainError("c10 must be positive");
      try {
        channels_.push_back(std::make_shared<const ScalarBasis>(nu_[q], c10[q]));
      } catch (const Error& e) {
        throw Error(e.kind(), "channel " + std::to_string(q) + ": " + e.what());
      }
    }
  }

  int dim() const { return static_cast<int>(nu_.size()); }
  const std::vector<double>& nu() const { return nu_; }
  double nu(int q) const { return nu_[q]; }
  double mu(int j, int q) const { return channels_[q]->order().mu(j); }
  double omega(int q) const { return channels_[q]->order().omega; }
  double beta_exp() const { return std::min(1.0, 2.0 * nu_.front()); }
  const ScalarBasis& channel(int q) const { return *channels_[q]; }

  /// D_j(rho) = diag(rho^{mu_jq}).
  CVec rho_power(int j, Complex rho) const {
    CVec d(dim());
    for (int q = 0; q < dim(); ++q) d(q) = cpow(rho, mu(j, q));
    return d;
  }

 private:
  std::vector<double> nu_;
  std::vector<std::shared_ptr<const ScalarBasis>> channels_;
};

/// Equation data (order, potential) on (0, T).
struct Equation {
  SingularOrder order;
  Potential q;
  double T = 1.0;

  Equation() = default;
  Equation(SingularOrder o, Potential pot, double t) : order(std::move(o)), q(std::move(pot)), T(t) {
    if (!(T > 0.0)) throw DomainError("interval length T must be positive");
    if (q.dim() != order.dim()) throw DomainError("potential dimension does not match the order vector");
    const double cert = q.weighted_l1_certificate(T, order.nu(0));
    if (!std::isfinite(cert)) throw DomainError("x^(1 - 2 nu_1) Q(x) is not integrable near 0");
  }

  /// Same order with Q replaced by Q^T.
  Equation transposed() const {
    Equation e = *this;
    e.q = q.transpose();
    return e;
  }
};

/// Boundary value problem: equation plus Robin-type data at 0 and T.
struct BoundaryProblem {
  Equation eq;
  Mat h;
  Mat H;

  BoundaryProblem() = default;
  BoundaryProblem(Equation e, Mat h_, Mat H_) : eq(std::move(e)), h(std::move(h_)), H(std::move(H_)) {
    const int m = eq.order.dim();
    if (h.rows() != m || h.cols() != m || H.rows() != m || H.cols() != m)
      throw DomainError("boundary matrices h and H must be m x m");
  }

  int dim() const { return eq.order.dim(); }
  double T() const { return eq.T; }
};

}  // namespace bessel_sl
