#include <cmath>
#include <numbers>

#include "doctest.h"
#include "exc/error.hpp"
#include "exc/numerics.hpp"
#include "exc/rng.hpp"

using namespace exc;

TEST_CASE("T at log 2 and round trips") {
  CHECK(exp_to_frechet(std::log(2.0)) == doctest::Approx(1.0 / std::log(2.0)).epsilon(1e-15));
  for (double x : {0.01, 0.1, 0.5, 1.0, 10.0, 25.0, 29.9, 30.1}) {
    CHECK(std::abs(frechet_to_exp(exp_to_frechet(x)) - x) < 1e-12 * std::max(1.0, x));
    // 1 - e^{-x} is stored with absolute error eps, so the uniform round trip
    // is limited to eps e^x once x exceeds about 9.
    CHECK(std::abs(uniform_to_exp(exp_to_uniform(x)) - x) < 1e-12 + 2.3e-16 * std::exp(x));
  }
  const double r = exp_to_frechet(40.0) / std::exp(40.0);
  CHECK(r > 1.0 - 1e-10);
  CHECK(r < 1.0 + 1e-10);
  CHECK_THROWS_AS(exp_to_frechet(-1.0), DomainError);
  CHECK_THROWS_AS(frechet_to_exp(0.0), DomainError);
}

TEST_CASE("T is continuous across the large-argument switch") {
  const double lo = exp_to_frechet(std::nextafter(30.0, 0.0));
  const double hi = exp_to_frechet(std::nextafter(30.0, 100.0));
  CHECK(std::abs(hi / lo - 1.0) < 1e-12);
}

TEST_CASE("Gaussian margin transform") {
  // Moderate x against the plain formula.
  for (double x : {0.05, 0.5, 1.0, 5.0, 20.0})
    CHECK(exp_to_gauss(x) == doctest::Approx(norm_quantile(1.0 - std::exp(-x))).epsilon(1e-9));
  // Both sides of the switch at 30 and the far tail round-trip through sf.
  for (double x : {29.0, 30.0, 30.5, 50.0, 200.0, 700.0, 5000.0}) {
    const double z = exp_to_gauss(x);
    CHECK(gauss_to_exp(z) == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK(std::abs(exp_to_gauss(std::nextafter(30.0, 100.0)) - exp_to_gauss(30.0)) < 1e-10);
}

TEST_CASE("log normal tail") {
  for (double z : {-3.0, 0.0, 2.0, 4.9, 5.1, 8.0})
    CHECK(log_norm_sf(z) == doctest::Approx(std::log(norm_sf(z))).epsilon(1e-12));
  // sf(z) ~ phi(z)/z (1 - 1/z^2 + 3/z^4 - 15/z^6)
  const double z = 60.0;
  const double series = -0.5 * z * z - std::log(std::sqrt(2 * std::numbers::pi) * z) +
                        std::log(1 - 1 / (z * z) + 3 / std::pow(z, 4) - 15 / std::pow(z, 6));
  CHECK(log_norm_sf(z) == doctest::Approx(series).epsilon(1e-13));
}

TEST_CASE("log-sum-exp") {
  std::vector<double> v{1000.0, 1000.0};
  CHECK(log_sum_exp(v) == doctest::Approx(1000.0 + std::log(2.0)));
  std::vector<double> w{-kInf, -kInf};
  CHECK(log_sum_exp(w) == -kInf);
  CHECK(log_add_exp(-kInf, 3.0) == 3.0);
}

TEST_CASE("set partitions are counted by Bell numbers") {
  const int bell[] = {1, 1, 2, 5, 15, 52, 203, 877, 4140};
  for (int n = 1; n <= 8; ++n) {
    const auto& p = set_partitions(n);
    CHECK(static_cast<int>(p.size()) == bell[n]);
    for (const auto& part : p) {
      std::uint32_t seen = 0;
      for (auto b : part) {
        CHECK((seen & b) == 0u);
        seen |= b;
      }
      CHECK(seen == (1u << n) - 1u);
    }
  }
}

TEST_CASE("monotone inversion") {
  auto f = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  for (double p : {1e-9, 0.25, 0.5, 0.75, 1 - 1e-9}) {
    auto r = invert_monotone(f, p, -60.0, 60.0);
    // Either the tolerance is met or the bracket collapsed at the resolution
    // of f near 1.
    CHECK(std::abs(f(r.x) - p) <= std::max(1e-10 * std::min(1.0, 2 * std::min(p, 1 - p)), 2.3e-16));
  }
  // Flat regions (CDF exactly 0 below zero) do not stall the solver.
  auto g = [](double x) { return x <= 0 ? 0.0 : -std::expm1(-x); };
  auto r = invert_monotone(g, 0.3, -60.0, 60.0);
  CHECK(r.x == doctest::Approx(-std::log(0.7)).epsilon(1e-9));
  CHECK_THROWS_AS(invert_monotone(f, 0.5, 1.0, 2.0), NumericalError);
}

TEST_CASE("bivariate normal CDF") {
  CHECK(bvn_cdf(0, 0, 0.5) == doctest::Approx(0.25 + std::asin(0.5) / (2 * std::numbers::pi)).epsilon(1e-13));
  CHECK(bvn_cdf(1.0, -0.5, 0.0) == doctest::Approx(norm_cdf(1.0) * norm_cdf(-0.5)).epsilon(1e-13));
  CHECK(bvn_cdf(kInf, 0.3, 0.7) == doctest::Approx(norm_cdf(0.3)).epsilon(1e-14));
  // Gauss-Legendre integral of phi(x) Phi((k - r x)/sqrt(1-r^2)) over x < h.
  const double h = 0.7, k = -0.4, rho = -0.6;
  double acc = 0.0;
  const int n = 20000;
  const double lo = -12.0, step = (h - lo) / n;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (i + 0.5) * step;
    acc += norm_pdf(x) * norm_cdf((k - rho * x) / std::sqrt(1 - rho * rho)) * step;
  }
  CHECK(bvn_cdf(h, k, rho) == doctest::Approx(acc).epsilon(1e-8));
}

TEST_CASE("multivariate normal CDF against orthant identities") {
  // Equicorrelated 1/2: P(all n coordinates <= 0) = 1/(n+1).
  for (int d = 3; d <= 6; ++d) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(d, d, 0.5);
    c.diagonal().setOnes();
    MvnResult r = mvn_cdf(Eigen::VectorXd::Zero(d), c);
    CHECK(r.value == doctest::Approx(1.0 / (d + 1)).epsilon(2e-6));
    CHECK(r.error <= 1e-6);
  }
  // Independence factorizes; +inf bounds are removed.
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
  Eigen::VectorXd b(4);
  b << 0.3, -1.0, kInf, 1.5;
  CHECK(mvn_cdf(b, id).value ==
        doctest::Approx(norm_cdf(0.3) * norm_cdf(-1.0) * norm_cdf(1.5)).epsilon(1e-6));
  // Trivariate equicorrelated rho: 1/8 + 3 asin(rho)/(4 pi).
  Eigen::MatrixXd c3 = Eigen::MatrixXd::Constant(3, 3, -0.3);
  c3.diagonal().setOnes();
  CHECK(mvn_cdf(Eigen::VectorXd::Zero(3), c3).value ==
        doctest::Approx(0.125 + 3 * std::asin(-0.3) / (4 * std::numbers::pi)).epsilon(1e-6));
}

TEST_CASE("multivariate normal CDF against Monte Carlo, general covariance") {
  Eigen::MatrixXd c(4, 4);
  c << 1.0, 0.6, 0.2, -0.1, 0.6, 2.0, 0.4, 0.3, 0.2, 0.4, 1.5, 0.5, -0.1, 0.3, 0.5, 0.8;
  Eigen::VectorXd b(4);
  b << 0.5, 1.0, -0.2, 0.7;
  const double q = mvn_cdf(b, c).value;
  Eigen::MatrixXd L = c.llt().matrixL();
  Rng rng(7);
  const int n = 400000;
  int hit = 0;
  Eigen::VectorXd z(4);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < 4; ++a) z(a) = rng.normal();
    Eigen::VectorXd x = L * z;
    hit += (x.array() <= b.array()).all();
  }
  const double p = static_cast<double>(hit) / n;
  CHECK(std::abs(p - q) < 4 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("mvn log density") {
  Eigen::MatrixXd c(2, 2);
  c << 2.0, 0.5, 0.5, 1.0;
  Eigen::VectorXd x(2), m(2);
  x << 0.3, -0.2;
  m << 0.1, 0.1;
  const double det = 2.0 - 0.25;
  Eigen::VectorXd d = x - m;
  const double quad = d.dot(c.inverse() * d);
  CHECK(mvn_log_pdf(x, m, c) ==
        doctest::Approx(-0.5 * quad - std::log(2 * std::numbers::pi) - 0.5 * std::log(det)).epsilon(1e-13));
}

TEST_CASE("rng streams") {
  static_assert(replicate_seed(1, 2) != replicate_seed(2, 1));
  Rng a(replicate_seed(42, 3)), b(replicate_seed(42, 3));
  for (int i = 0; i < 10; ++i) CHECK(a.uniform() == b.uniform());
  Rng c(1);
  for (int i = 0; i < 100000; ++i) {
    const double u = c.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}
