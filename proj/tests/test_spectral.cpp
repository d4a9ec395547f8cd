#include "bessel_sl/oracle.hpp"
#include "bessel_sl/spectral.hpp"

#include <catch_amalgamated.hpp>

using namespace bessel_sl;

namespace {

BoundaryProblem half_problem() {
  return {Equation(SingularOrder({0.5}), Potential::zero(1), kPi), Mat::Zero(1, 1), Mat::Zero(1, 1)};
}

BoundaryProblem coupled_problem(bool with_h) {
  Mat Q0(2, 2), Q1(2, 2), h(2, 2), H(2, 2);
  Q0 << 0.3, 0.1, 0.2, -0.4;
  Q1 << 0.05, 0.2, -0.1, 0.1;
  h << 0.2, 0.1, 0.0, -0.3;
  H << 0.1, 0.0, 0.2, 0.4;
  if (!with_h) h.setZero();
  return {Equation(SingularOrder({0.7, 0.3}), Potential::polynomial({Q0, Q1}), kPi), h, H};
}

}  // namespace

TEST_CASE("characteristic function and Weyl function of the cos/sin case") {
  const auto bp = half_problem();
  for (const Complex rho : {Complex(0.7, 0.0), Complex(2.3, 0.4), Complex(5.1, -0.2), Complex(0.0, 1.5)}) {
    const Complex l = rho * rho;
    const Complex r = rho_of(l);
    CHECK(std::abs(char_det(bp, l) - (-r * std::sin(kPi * r))) < 1e-11 * std::max(1.0, std::abs(r * std::sin(kPi * r))));
    const Complex m = std::cos(kPi * r) / std::sin(kPi * r) / r;
    CHECK(std::abs(weyl(bp, l).M(0, 0) - m) < 1e-11 * std::max(1.0, std::abs(m)));
  }
}

TEST_CASE("phi is cos(rho x) and carries the initial data") {
  const auto bp = half_problem();
  const Complex rho(1.7, 0.3), l = rho * rho;
  const auto p = phi(bp, l);
  for (double x : {0.3, 1.0, 2.5}) CHECK(std::abs(p.eval(x).value(0, 0) - std::cos(rho * x)) < 1e-12);

  const auto cp = coupled_problem(true);
  const Complex l2(7.3, 1.1);
  const auto p2 = phi(cp, l2);
  const auto forms = sigma_forms(cp.eq, [&](double x) { return p2.eval(x); }, l2, 0.7, 1.9);
  CHECK(max_norm(forms.sigma1 - Mat::Identity(2, 2)) < 1e-8);
  CHECK(max_norm(forms.sigma2 - cp.h) < 1e-8);
  CHECK(forms.x_dependence < 1e-8);
}

TEST_CASE("sigma_j(S_k) = delta_jk I") {
  const auto cp = coupled_problem(true);
  const Complex l(4.0, -2.0);
  for (int k = 1; k <= 2; ++k) {
    const auto s = solve_S(cp.eq, k, l);
    const auto f = sigma_forms(cp.eq, [&](double x) { return s.eval(x); }, l, 0.5, 2.0);
    const Mat I = Mat::Identity(2, 2), Z = Mat::Zero(2, 2);
    CHECK(max_norm(f.sigma1 - (k == 1 ? I : Z)) < 1e-8);
    CHECK(max_norm(f.sigma2 - (k == 2 ? I : Z)) < 1e-8);
  }
}

TEST_CASE("closed-form spectrum and weights") {
  const auto bp = half_problem();
  const auto tab = locate_eigenvalues(bp, 1, 8, true);
  REQUIRE(tab.low.size() == 1);
  CHECK(std::abs(tab.low[0].lambda) < 1e-10);
  for (const auto& c : tab.contours) {
    REQUIRE(c.count == 1);
    CHECK(std::abs(c.eigen[0].rho - double(c.n)) < 1e-10);
    CHECK(std::abs(c.group_weight(0, 0) - 2.0 / kPi) < 1e-8);
    CHECK(c.weight_doubling < 1e-9);
  }
  const auto k = asymptotic_constants(bp);
  CHECK(std::abs(k.theta(0) - 2.0 / kPi) < 1e-12);
  CHECK(std::abs(residue_richardson(bp, 16.0, 1e-3)(0, 0) - 2.0 / kPi) < 1e-7);
}

TEST_CASE("lambda-disk counts") {
  const auto bp = half_problem();
  CHECK(count_in_disk(bp, 50.0) == 8);  // 0, 1, 4, ..., 49
  CHECK(count_in_disk(bp, 30.0) == 6);
  const auto low = locate_in_disk(bp, 10.0);
  REQUIRE(low.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(low[i].lambda - double(i * i)) < 1e-9);
}

TEST_CASE("channel classes and contour radii") {
  const auto cp = coupled_problem(true);
  const auto cls = channel_classes(cp.eq.order);
  REQUIRE(cls.size() == 2);
  CHECK(cls.frac[0] == Catch::Approx(0.1));
  CHECK(cls.members[0] == std::vector<int>{1});
  CHECK(cls.frac[1] == Catch::Approx(0.9));
  CHECK(contour_radius(cp, cls) == Catch::Approx(0.09));

  const auto same = channel_classes(SingularOrder({2.3, 0.3}));
  REQUIRE(same.size() == 1);
  CHECK(same.members[0].size() == 2);
}

TEST_CASE("zero potential gives diagonal group weights on the class") {
  BoundaryProblem bp{Equation(SingularOrder({0.7, 0.3}), Potential::zero(2), 2.0), Mat::Zero(2, 2), Mat::Zero(2, 2)};
  const auto cs = locate_contours(bp, 6, 6, true);
  for (const auto& c : cs) {
    REQUIRE(c.count == 1);
    const int q = c.group.front();
    CHECK(std::abs(c.group_weight(q, q)) > 1e-3);
    CHECK(std::abs(c.group_weight(1 - q, 1 - q)) < 1e-10);
    CHECK(std::abs(c.group_weight(0, 1)) < 1e-10);
    CHECK(std::abs(c.group_weight(1, 0)) < 1e-10);
  }
}

TEST_CASE("shooting eigenvalues agree with contour eigenvalues") {
  const auto cp = coupled_problem(true);
  const auto cs = locate_contours(cp, 3, 3, false);
  for (const auto& c : cs)
    for (const auto& e : c.eigen) CHECK(std::abs(oracle::shooting_eigenvalue(cp, e.rho + 1e-3) - e.rho) < 1e-7);
}

TEST_CASE("recover nu on a single channel") {
  BoundaryProblem bp{Equation(SingularOrder({0.3}), Potential::zero(1), 1.0), Mat::Zero(1, 1), Mat::Zero(1, 1)};
  std::vector<ContourResult> cs;
  for (int n : {10, 15, 22, 33, 50}) cs.push_back(group_weights(bp, n, 0));
  const auto est = recover_nu(cs, 0);
  REQUIRE(est.size() == 1);
  CHECK(std::abs(est[0].nu - 0.3) < 0.02);
}

TEST_CASE("partial fractions") {
  const auto bp = half_problem();
  CHECK(max_norm(partial_fraction_sum(1, -1.0, {})) == 0.0);
  std::vector<std::pair<Complex, Mat>> data;
  for (int n = 0; n <= 40; ++n) data.emplace_back(double(n * n), Mat::Constant(1, 1, (n == 0 ? 1.0 : 2.0) / kPi));
  const auto rep = weyl_partial_fraction(bp, -1.0, data);
  REQUIRE(rep.distance.size() == data.size());
  for (std::size_t i = 1; i < rep.distance.size(); ++i) CHECK(rep.distance[i] < rep.distance[i - 1]);
  // remaining tail sum_{n > 40} (2/pi) / (n^2 + 1)
  double tail = 0.0;
  for (int n = 41; n < 2000000; ++n) tail += 2.0 / kPi / (double(n) * n + 1.0);
  tail += 2.0 / kPi / 2000000.0;
  CHECK(rep.distance.back() == Catch::Approx(tail).epsilon(1e-5));
}

TEST_CASE("recover nu removes the n^{-2 nu} correction") {
  std::vector<ContourResult> cs;
  for (int n : {10, 13, 16, 20, 25, 32, 40}) {
    ContourResult r;
    r.n = n;
    r.group = {0};
    r.has_weight = true;
    r.group_weight = Mat::Constant(1, 1, std::pow(n, 0.4) * std::exp(0.8 * std::pow(n, -0.6)));
    cs.push_back(r);
  }
  const auto est = recover_nu(cs, 0);
  CHECK(std::abs(0.5 * (1.0 - est[0].raw_slope) - 0.3) > 0.02);
  CHECK(std::abs(est[0].nu - 0.3) < 1e-3);

  const auto half = locate_contours(half_problem(), 10, 13, true);
  CHECK(std::abs(recover_nu(half, 0)[0].nu - 0.5) < 1e-9);
}
