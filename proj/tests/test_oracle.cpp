#include <bessel_sl/oracle.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace bessel_sl;

namespace {

Equation two_channel() {
  SingularOrder order({0.7, 0.3});
  Mat q0(2, 2), q1(2, 2);
  q0 << 1.0, 0.5, -0.3, 2.0;
  q1 << 0.0, Complex(0.4, 0.2), 1.0, -1.0;
  return Equation(order, Potential::polynomial({q0, q1}), 1.0);
}

std::vector<double> uniform(double a, double b, int n) {
  std::vector<double> out;
  for (int i = 0; i <= n; ++i) out.push_back(a + (b - a) * i / n);
  return out;
}

}  // namespace

TEST_CASE("closed-form references") {
  CHECK(std::abs(oracle::closed_form_reference("half_c1", kPi / 3.0, 1.0) - 0.5) < 1e-15);
  CHECK(std::abs(oracle::closed_form_reference("half_e1", kPi / 2.0, 1.0) - kI) < 1e-15);
  CHECK_THROWS_AS(oracle::closed_form_reference("nope", 1.0, 1.0), DomainError);
  const ScalarBasis b(0.3);
  const Complex rho = 2.5;
  const auto c = b.c_scaled(1, {0.4, 3.0}, rho);
  CHECK(std::abs(c[0].first - oracle::closed_form_reference("bessel_c1:0.3", 0.4, rho)) < 1e-13);
  CHECK(std::abs(c[1].first - oracle::closed_form_reference("bessel_c1:0.3", 3.0, rho)) < 1e-11);
}

TEST_CASE("direct integration matches closed forms for nu = 1/2") {
  const Equation eq(SingularOrder({0.5}), Potential::zero(1), kPi);
  const auto grid = uniform(kPi / 100.0, kPi, 20);
  const auto run = oracle::direct_integrate(eq, 2, Complex{9.0, 0.0}, grid, kPi / 100.0);
  for (std::size_t i = 0; i < grid.size(); ++i)
    CHECK(std::abs(run.result.values[i](0, 0) - std::sin(3.0 * grid[i]) / 3.0) < 1e-10);
}

TEST_CASE("Picard solutions agree with direct integration") {
  const auto eq = two_channel();
  const auto grid = uniform(eq.T / 100.0, eq.T, 15);
  for (Complex lambda : {Complex{3.0, 0.0}, Complex{60.0, 10.0}, Complex{-20.0, 0.0}}) {
    for (int j = 1; j <= 2; ++j) {
      const auto pic = solve_S(eq, j, lambda).evaluate(grid, "S");
      const auto ora = oracle::direct_integrate(eq, j, lambda, grid, eq.T / 100.0);
      double worst = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i)
        worst = std::max(worst, max_norm(pic.values[i] - ora.result.values[i]) / max_norm(ora.result.values[i]));
      CHECK(worst < 1e-8);
    }
  }
}

TEST_CASE("shooting finds the closed-form eigenvalues") {
  const Equation eq(SingularOrder({0.5}), Potential::zero(1), kPi);
  const BoundaryProblem bp(eq, Mat::Zero(1, 1), Mat::Zero(1, 1));
  CHECK(std::abs(oracle::shooting_eigenvalue(bp, 3.1) - 3.0) < 1e-9);
  CHECK(std::abs(oracle::shooting_eigenvalue(bp, 6.8) - 7.0) < 1e-9);
}
