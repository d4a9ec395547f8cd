#include <bessel_sl/scalar_fss.hpp>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <catch2/catch_amalgamated.hpp>

using namespace bessel_sl;
namespace bm = boost::math;

namespace {

Complex hankel1_scaled(double nu, double x) {
  const Complex h{bm::cyl_bessel_j(nu, x), bm::cyl_neumann(nu, x)};
  return std::sqrt(kPi * x / 2.0) * std::exp(kI * (nu * kPi / 2.0 + kPi / 4.0)) * h;
}

Eigen::Matrix2cd beta_closed_form(double nu, double c10) {
  const double c20 = 1.0 / (2.0 * nu * c10);
  const Complex phase = std::sqrt(kPi / 2.0) * std::exp(kI * (nu * kPi / 2.0 + kPi / 4.0));
  const Complex s = kI * std::sin(nu * kPi);
  Eigen::Matrix2cd b;
  b(0, 0) = phase * std::pow(2.0, nu) / (std::tgamma(1.0 - nu) * c10 * s);
  b(0, 1) = -phase * std::exp(-kI * nu * kPi) * std::pow(2.0, -nu) / (std::tgamma(1.0 + nu) * c20 * s);
  b(1, 0) = std::exp(kI * kPi * (0.5 - nu)) * b(0, 0);
  b(1, 1) = std::exp(kI * kPi * (0.5 + nu)) * b(0, 1);
  return b;
}

}  // namespace

TEST_CASE("order validation") {
  CHECK_THROWS_AS(ScalarOrder::from_nu(1.0), DomainError);
  CHECK_THROWS_AS(ScalarOrder::from_nu(-0.2), DomainError);
  const auto o = ScalarOrder::from_nu(0.3);
  CHECK(o.mu1 == Catch::Approx(0.2));
  CHECK(o.mu2 == Catch::Approx(0.8));
  CHECK_THROWS_AS(series_coeffs(o, 1, 0.0, 10), DomainError);
}

TEST_CASE("series matches Bessel functions on the real axis") {
  for (double nu : {0.3, 0.5, 0.7, 1.6}) {
    const auto o = ScalarOrder::from_nu(nu);
    const double c20 = 1.0 / (2.0 * nu);
    const auto s1 = series_for_disk(o, 1, 1.0);
    const auto s2 = series_for_disk(o, 2, c20);
    for (double z : {0.05, 0.4, 1.0, 1.9}) {
      const double ref1 = std::sqrt(z) * bm::cyl_bessel_j(-nu, z) * std::tgamma(1.0 - nu) / std::pow(2.0, nu);
      const double ref2 = std::sqrt(z) * bm::cyl_bessel_j(nu, z) * std::tgamma(1.0 + nu) * std::pow(2.0, nu) * c20;
      CHECK(std::abs(eval_series_unscaled(s1, z).first - ref1) < 1e-13 * std::max(1.0, std::abs(ref1)));
      CHECK(std::abs(eval_series_unscaled(s2, z).first - ref2) < 1e-13 * std::max(1.0, std::abs(ref2)));
    }
  }
}

TEST_CASE("series Wronskian is one and scaled evaluation is entire in lambda") {
  const auto o = ScalarOrder::from_nu(0.3);
  const auto s1 = series_for_disk(o, 1, 1.0);
  const auto s2 = series_for_disk(o, 2, 1.0 / 0.6);
  for (Complex rho : {Complex{1.0, 0.0}, Complex{0.3, 1.1}, Complex{0.0, 1.5}}) {
    for (double x : {0.1, 0.7, 1.2}) {
      const auto [a, da] = eval_c(s1, x, rho);
      const auto [b, db] = eval_c(s2, x, rho);
      CHECK(std::abs(scalar_wronskian(a, da, b, db) - 1.0) < 1e-13);
    }
  }
  CHECK_THROWS_AS(eval_c(s1, 1.0, Complex{3.0, 0.0}), DomainError);
}

TEST_CASE("Jost solutions on the real axis match Hankel functions") {
  for (double nu : {0.3, 0.7, 1.6}) {
    const ScalarBasis basis(nu);
    const std::vector<double> r{0.5, 1.0, 2.5, 10.0, 49.0, 80.0};
    const auto e = basis.e_ray(0.0, r);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const Complex ref = hankel1_scaled(nu, r[i]);
      CHECK(std::abs(e[0][i].first - ref) < 1e-11 * std::abs(ref));
      CHECK(std::abs(e[1][i].first - std::conj(ref)) < 1e-11 * std::abs(ref));
    }
  }
}

TEST_CASE("beta constants agree with the closed form") {
  for (double nu : {0.3, 0.5, 0.7, 1.6}) {
    const ScalarBasis basis(nu);
    const Eigen::Matrix2cd ref = beta_closed_form(nu, 1.0);
    CHECK((basis.beta().beta - ref).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(basis.beta().beta.determinant() + 2.0 * kI) < 1e-10);
    CHECK(std::abs(basis.beta(1, 1) * basis.beta(1, 2) - kI / std::sin(kPi * nu)) < 1e-10);
  }
  const ScalarBasis half(0.5);
  Eigen::Matrix2cd expected;
  expected << 1.0, kI, 1.0, -kI;
  CHECK((half.beta().beta - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Jost solutions off the real axis") {
  const ScalarBasis half(0.5);
  for (double theta : {-1.2, -0.3, 0.4, 1.5}) {
    const std::vector<double> r{0.3, 1.5, 7.0, 30.0, 60.0};
    const auto e = half.e_ray(theta, r);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const Complex z = std::polar(r[i], theta);
      CHECK(std::abs(e[0][i].first - std::exp(kI * z)) < 1e-12 * std::abs(std::exp(kI * z)));
      CHECK(std::abs(e[1][i].first - std::exp(-kI * z)) < 1e-12 * std::abs(std::exp(-kI * z)));
    }
  }
  const ScalarBasis basis(0.3);
  for (double theta : {-1.0, 0.6, 1.4}) {
    const std::vector<double> r{1.2, 1.9, 5.0, 20.0};
    const auto e = basis.e_ray(theta, r);
    for (std::size_t i = 0; i < r.size(); ++i) {
      const Complex w = scalar_wronskian(e[0][i].first, e[0][i].second, e[1][i].first, e[1][i].second);
      CHECK(std::abs(w + 2.0 * kI) < 1e-11);
      if (r[i] <= 2.0) {
        const Complex z = std::polar(r[i], theta);
        const Complex c1 = eval_series_unscaled(basis.series(1), z).first;
        const Complex c2 = eval_series_unscaled(basis.series(2), z).first;
        const Complex ref = basis.beta(1, 1) * c1 + basis.beta(1, 2) * c2;
        CHECK(std::abs(e[0][i].first - ref) < 1e-12 * std::max(1.0, std::abs(ref)));
      }
    }
  }
}

TEST_CASE("c beyond the series disk via the Jost connection") {
  const ScalarBasis basis(0.3);
  const double nu = 0.3;
  for (double x : {2.5, 8.0, 40.0}) {
    const double ref = std::sqrt(x) * bm::cyl_bessel_j(-nu, x) * std::tgamma(1.0 - nu) / std::pow(2.0, nu);
    CHECK(std::abs(basis.c_unscaled(1, x).first - ref) < 1e-11);
  }
  const auto jost = eval_jost(basis, 1, {0.5, 2.0, 4.0}, Complex{10.0, 0.5});
  CHECK(jost.measured_m0 < 1.0);
}
