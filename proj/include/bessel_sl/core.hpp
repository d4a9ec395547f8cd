#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace bessel_sl {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr Complex kI{0.0, 1.0};

/// Category carried by every library error; the CLI maps it to an exit code.
enum class ErrorKind { Domain, Accuracy, Regime, Localization, Parse, RhoTooSmall };

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Accuracy: return "accuracy";
    case ErrorKind::Regime: return "regime";
    case ErrorKind::Localization: return "localization";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::RhoTooSmall: return "rho-too-small";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};
struct AccuracyError : Error {
  explicit AccuracyError(const std::string& w) : Error(ErrorKind::Accuracy, w) {}
};
struct RegimeError : Error {
  explicit RegimeError(const std::string& w) : Error(ErrorKind::Regime, w) {}
};
struct LocalizationError : Error {
  explicit LocalizationError(const std::string& w) : Error(ErrorKind::Localization, w) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorKind::Parse, w) {}
};

/// Raised when the Birkhoff kernel bound is not below 1/2; carries the measured bound.
struct RhoTooSmallError : Error {
  RhoTooSmallError(const std::string& w, double bound) : Error(ErrorKind::RhoTooSmall, w), bound(bound) {}
  double bound;
};

/// Max-entry matrix norm, ||A|| = max |a_jk|.
inline double max_norm(const Mat& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

/// Induced infinity norm (max row sum); submultiplicative.
inline double row_sum_norm(const Mat& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Value and x-derivative of a matrix solution at one abscissa.
struct ValueDeriv {
  Mat value;
  Mat deriv;
};

/// Matrix Wronskian <Z, Y> = Z Y' - Z' Y.
inline Mat wronskian(const ValueDeriv& z, const ValueDeriv& y) {
  return z.value * y.deriv - z.deriv * y.value;
}

inline Complex scalar_wronskian(Complex z, Complex dz, Complex y, Complex dy) {
  return z * dy - dz * y;
}

/// Principal branch power, exp(mu Log z).
inline Complex cpow(Complex z, double mu) {
  if (z == Complex{0.0, 0.0}) return mu == 0.0 ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
  return std::exp(mu * std::log(z));
}

/// Principal square root with Re >= 0 (lambda -> rho).
inline Complex rho_of(Complex lambda) {
  Complex r = std::sqrt(lambda);
  if (r.real() < 0.0) r = -r;
  return r;
}

/// Left-multiply by a diagonal given as a vector: diag(d) * a.
inline Mat diag_left(const CVec& d, const Mat& a) {
  return d.asDiagonal() * a;
}

}  // namespace bessel_sl
