#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "exc/copula_kernels.hpp"
#include "exc/error.hpp"
#include "exc/rng.hpp"

using namespace exc;

namespace {

Eigen::MatrixXd toeplitz(const std::vector<double>& v) {
  const int d = static_cast<int>(v.size());
  Eigen::MatrixXd s(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s(i, j) = v[std::abs(i - j)];
  return s;
}

const std::vector<double> kGaussRho{1.0, 0.70, 0.57, 0.47, 0.39, 0.33};

std::vector<MarkovModel> catalogue() {
  return {MarkovModel::gaussian({1.0, 0.6}),
          MarkovModel::gaussian(kGaussRho),
          MarkovModel::max_stable(ExponentMeasure::logistic(2, 0.4)),
          MarkovModel::max_stable(ExponentMeasure::logistic(4, 0.6)),
          MarkovModel::inverted_max_stable(ExponentMeasure::logistic(3, 0.5)),
          MarkovModel::max_stable(ExponentMeasure::husler_reiss(toeplitz({1.0, 0.8, 0.5}))),
          MarkovModel::inverted_max_stable(ExponentMeasure::husler_reiss(toeplitz({1.0, 0.7, 0.4}))),
          MarkovModel::asym_logistic(AlogParams{})};
}

std::vector<double> random_state(Rng& rng, int k) {
  std::vector<double> s(k);
  for (double& v : s) v = 0.2 + 6.0 * rng.uniform();
  return s;
}

// One-sample KS distance of xs (sorted in place) against cdf.
template <class F>
double ks(std::vector<double>& xs, F cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

}  // namespace

TEST_CASE("Gaussian kernel preserves the conditional median") {
  auto m = MarkovModel::gaussian({1.0, 0.6});
  for (double x0 : {0.1, 1.0, 5.0, 25.0}) {
    std::vector<double> s{x0};
    const double xmed = gauss_to_exp(0.6 * exp_to_gauss(x0));
    CHECK(m.kernel_cdf(s, xmed) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("logistic k=1 kernel matches the bivariate closed form") {
  for (double a : {0.25, 0.5, 0.8}) {
    auto m = MarkovModel::max_stable(ExponentMeasure::logistic(2, a));
    for (double x0 : {0.3, 2.0, 7.0})
      for (double x1 : {0.1, 1.0, 4.0, 12.0}) {
        const double y0 = exp_to_frechet(x0), y1 = exp_to_frechet(x1);
        const double s = std::pow(y0, -1 / a) + std::pow(y1, -1 / a);
        // -V_0 exp(-V) / (y0^-2 exp(-1/y0))
        const double f = std::pow(s, a - 1) * std::pow(y0, -1 / a - 1) * std::exp(-std::pow(s, a)) /
                         (std::pow(y0, -2.0) * std::exp(-1 / y0));
        std::vector<double> st{x0};
        CHECK(m.kernel_cdf(st, x1) == doctest::Approx(f).epsilon(1e-10));
      }
  }
}

TEST_CASE("logistic block-count fast path equals the generic partition sum") {
  Rng rng(31);
  for (int k : {2, 3, 5}) {
    const double a = 0.3 + 0.5 * rng.uniform();
    auto e = ExponentMeasure::logistic(k + 1, a);
    auto m = MarkovModel::max_stable(e);
    for (int rep = 0; rep < 5; ++rep) {
      auto st = random_state(rng, k);
      const double x = 0.5 + 5 * rng.uniform();
      std::vector<double> yf, yi;
      for (double v : st) yf.push_back(exp_to_frechet(v));
      yi = yf;
      yf.push_back(exp_to_frechet(x));
      yi.push_back(kInf);
      std::vector<double> num(1u << k), den(1u << k);
      for (std::uint32_t J = 1; J < (1u << k); ++J) {
        num[J] = e.log_neg_partial(J, yf);
        den[J] = e.log_neg_partial(J, yi);
      }
      const double lf = log_partition_sum(num, k) - log_partition_sum(den, k) + e.value(yi) - e.value(yf);
      CHECK(m.kernel_cdf(st, x) == doctest::Approx(std::exp(lf)).epsilon(1e-11));
    }
  }
}

TEST_CASE("log-space partition sums agree with direct sums") {
  Rng rng(37);
  for (int n = 1; n <= 5; ++n) {
    std::vector<double> lw(1u << n);
    for (int rep = 0; rep < 5; ++rep) {
      for (auto& v : lw) v = 4 * rng.uniform() - 2;
      double direct = 0.0;
      for (const auto& p : set_partitions(n)) {
        double prod = 1.0;
        for (auto b : p) prod *= std::exp(lw[b]);
        direct += prod;
      }
      CHECK(std::exp(log_partition_sum(lw, n)) == doctest::Approx(direct).epsilon(1e-9));
    }
  }
  // Far past where the direct sum overflows.
  std::vector<double> big(1u << 4, 400.0);
  CHECK(log_partition_sum(big, 4) == doctest::Approx(4 * 400.0 + std::log(1.0)).epsilon(1e-12));
}

TEST_CASE("tail limits of every kernel") {
  Rng rng(41);
  for (const auto& m : catalogue())
    for (int rep = 0; rep < 3; ++rep) {
      auto st = random_state(rng, m.k());
      CHECK(m.kernel_cdf(st, -50.0) < 1e-10);
      CHECK(m.kernel_cdf(st, 50.0) > 1 - 1e-10);
    }
}

TEST_CASE("kernels are nondecreasing on a grid") {
  Rng rng(43);
  auto models = catalogue();
  for (int rep = 0; rep < 50; ++rep) {
    const auto& m = models[rep % models.size()];
    if (m.is_husler_reiss() && m.k() > 2) continue;
    auto st = random_state(rng, m.k());
    double prev = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double x = 0.001 + i * 0.08;
      const double f = m.kernel_cdf(st, x);
      CHECK(f >= prev - 1e-12);
      CHECK(f <= 1.0);
      prev = f;
    }
  }
}

TEST_CASE("inversion round trip and monotonicity in U") {
  Rng rng(47);
  for (const auto& m : catalogue()) {
    auto st = random_state(rng, m.k());
    double last = -kInf;
    for (double u : {0.25, 0.5, 0.75}) {
      const double x = m.conditional_quantile(st, u);
      CHECK(x > last);
      last = x;
    }
    for (int rep = 0; rep < 10; ++rep) {
      const double u = rng.uniform();
      CHECK(std::abs(m.kernel_cdf(st, m.conditional_quantile(st, u)) - u) < 1e-8);
    }
  }
}

TEST_CASE("kernel samples follow the kernel CDF") {
  // KS 99% band at n = 1e5 is 1.63/sqrt(n) = 0.0052 < 0.006.
  const int n = 100000;
  SUBCASE("logistic k=3 by inversion") {
    auto m = MarkovModel::max_stable(ExponentMeasure::logistic(4, 0.45));
    std::vector<double> st{2.0, 4.5, 1.0};
    Rng rng(53);
    std::vector<double> xs(n);
    for (auto& x : xs) x = m.kernel_sample(st, rng);
    CHECK(ks(xs, [&](double x) { return m.kernel_cdf(st, x); }) < 0.006);
  }
  SUBCASE("inverted logistic k=2 by inversion") {
    auto m = MarkovModel::inverted_max_stable(ExponentMeasure::logistic(3, 0.3));
    std::vector<double> st{3.0, 1.5};
    Rng rng(59);
    std::vector<double> xs(n);
    for (auto& x : xs) x = m.kernel_sample(st, rng);
    CHECK(ks(xs, [&](double x) { return m.kernel_cdf(st, x); }) < 0.006);
  }
  SUBCASE("Husler-Reiss k=2, exact hitting-scenario sampler") {
    auto m = MarkovModel::max_stable(ExponentMeasure::husler_reiss(toeplitz({1.0, 0.85, 0.6})));
    std::vector<double> st{4.0, 2.5};
    Rng rng(61);
    std::vector<double> xs(n);
    for (auto& x : xs) x = m.kernel_sample(st, rng);
    CHECK(ks(xs, [&](double x) { return m.kernel_cdf(st, x); }) < 0.006);
  }
  SUBCASE("inverted Husler-Reiss k=2, exact sampler") {
    auto m = MarkovModel::inverted_max_stable(ExponentMeasure::husler_reiss(toeplitz({1.0, 0.6, 0.3})));
    std::vector<double> st{1.0, 3.0};
    Rng rng(67);
    std::vector<double> xs(n);
    for (auto& x : xs) x = m.kernel_sample(st, rng);
    CHECK(ks(xs, [&](double x) { return m.kernel_cdf(st, x); }) < 0.006);
  }
}

TEST_CASE("Husler-Reiss k=4 exact sampler on a CDF grid") {
  // Grid supremum of |F_n - F| is bounded by the KS distance, so the KS band
  // applies; n = 2e4 gives 1.63/sqrt(n) = 0.0115.
  auto m = MarkovModel::max_stable(
      ExponentMeasure::husler_reiss(toeplitz({1.0, 0.9, 0.7, 0.5, 0.3})));
  std::vector<double> st{6.0, 3.0, 4.0, 2.0};
  Rng rng(71);
  const int n = 20000;
  std::vector<double> xs(n);
  for (auto& x : xs) x = m.kernel_sample(st, rng);
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (int i = 1; i <= 40; ++i) {
    const double x = 0.25 * i;
    const double fn = static_cast<double>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) / n;
    d = std::max(d, std::abs(fn - m.kernel_cdf(st, x)));
  }
  CHECK(d < 0.0115);
}

TEST_CASE("Gaussian kernel samples have the exact conditional normal law") {
  auto m = MarkovModel::gaussian(kGaussRho);
  Eigen::MatrixXd q = m.gaussian_sigma().inverse();
  const int k = 5;
  std::vector<double> st{1.0, 3.0, 0.5, 6.0, 2.0};
  double mu = 0.0;
  for (int t = 0; t < k; ++t) mu -= q(t, k) * exp_to_gauss(st[t]) / q(k, k);
  const double var = 1.0 / q(k, k);
  Rng rng(73);
  const int n = 100000;
  double s1 = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = exp_to_gauss(m.kernel_sample(st, rng));
    s1 += z;
    s2 += z * z;
  }
  const double mean = s1 / n, v = s2 / n - mean * mean;
  CHECK(std::abs(mean - mu) < 3 * std::sqrt(var / n));
  CHECK(std::abs(v - var) < 3 * var * std::sqrt(2.0 / n));
}

TEST_CASE("conditioned initial state") {
  SUBCASE("X_0 - u is unit exponential") {
    auto m = MarkovModel::max_stable(ExponentMeasure::logistic(2, 0.5));
    Rng rng(79);
    std::vector<double> xs(100000);
    for (auto& x : xs) x = m.sample_initial_conditioned(7.0, rng)[0] - 7.0;
    CHECK(ks(xs, [](double x) { return -std::expm1(-x); }) < 0.006);
  }
  SUBCASE("k = 1 returns only X_0") {
    auto m = MarkovModel::gaussian({1.0, 0.5});
    Rng rng(83);
    auto s = m.sample_initial_conditioned(3.0, rng);
    CHECK(s.size() == 1);
    CHECK(s[0] > 3.0);
  }
  SUBCASE("Gaussian k=5: centred residual of X_1 against quadrature") {
    // E[(X_1 - rho^2 X_0)/X_0^{1/2} | X_0 > u].  The limit is 0, but at
    // finite u the law has an O(log u / sqrt u) bias; the exact value at u=9 is
    // obtained by quadrature over E and the conditional normal.
    const double u = 9.0, r = kGaussRho[1], sd = std::sqrt(1 - r * r);
    using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto inner = [&](double e) {
      const double x0 = u + e, z0 = exp_to_gauss(x0);
      auto g = [&](double w) { return norm_pdf(w) * (gauss_to_exp(r * z0 + sd * w) - r * r * x0) / std::sqrt(x0); };
      return std::exp(-e) * Q::integrate(g, -12.0, 12.0, 10, 1e-12);
    };
    const double exact = Q::integrate(inner, 0.0, 60.0, 10, 1e-10);
    auto m = MarkovModel::gaussian(kGaussRho);
    Rng rng(89);
    const int n = 100000;
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      auto x = m.sample_initial_conditioned(u, rng);
      const double v = (x[1] - r * r * x[0]) / std::sqrt(x[0]);
      s1 += v;
      s2 += v * v;
    }
    const double mean = s1 / n, se = std::sqrt((s2 / n - mean * mean) / n);
    CHECK(std::abs(mean - exact) < 3 * se);
    // The bias shrinks toward the centred limit as u grows.
    auto bias = [&](double uu) {
      auto in = [&](double e) {
        const double x0 = uu + e, z0 = exp_to_gauss(x0);
        auto g = [&](double w) { return norm_pdf(w) * (gauss_to_exp(r * z0 + sd * w) - r * r * x0) / std::sqrt(x0); };
        return std::exp(-e) * Q::integrate(g, -12.0, 12.0, 10, 1e-12);
      };
      return Q::integrate(in, 0.0, 60.0, 10, 1e-10);
    };
    const double b9 = bias(9.0), b50 = bias(50.0), b500 = bias(500.0);
    CHECK(b9 > b50);
    CHECK(b50 > b500);
    CHECK(b500 > 0.0);
  }
}

TEST_CASE("conditioned chains") {
  auto models = catalogue();
  for (const auto& m : models) {
    if (m.is_husler_reiss() && m.k() > 2) continue;
    Rng a(97), b(97);
    auto p = m.simulate_conditioned_chain(5.0, 30, a);
    auto q = m.simulate_conditioned_chain(5.0, 30, b);
    CHECK(p.size() == 31);
    CHECK(p[0] > 5.0);
    CHECK(p == q);
    for (double v : p) CHECK(std::isfinite(v));
  }
  Rng rng(1);
  CHECK_THROWS_AS(models[1].simulate_conditioned_chain(5.0, 3, rng), DomainError);
}

TEST_CASE("Gaussian stationary run has lag-1 correlation rho_1") {
  auto m = MarkovModel::gaussian(kGaussRho);
  Rng rng(101);
  auto p = m.simulate_stationary_chain(10000, rng);
  std::vector<double> z(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) z[i] = exp_to_gauss(p[i]);
  double m0 = 0, c0 = 0, c1 = 0;
  for (double v : z) m0 += v;
  m0 /= z.size();
  for (std::size_t i = 0; i < z.size(); ++i) {
    c0 += (z[i] - m0) * (z[i] - m0);
    if (i + 1 < z.size()) c1 += (z[i] - m0) * (z[i + 1] - m0);
  }
  CHECK(std::abs(c1 / c0 - 0.70) < 0.02);
}

TEST_CASE("stationary runs keep unit-exponential margins") {
  // One long run per family; n = 1e5 values so that the KS fluctuation of a
  // dependent sequence stays well inside 0.01.
  std::vector<MarkovModel> models{
      MarkovModel::gaussian(kGaussRho), MarkovModel::max_stable(ExponentMeasure::logistic(3, 0.5)),
      MarkovModel::inverted_max_stable(ExponentMeasure::logistic(3, 0.4)),
      MarkovModel::max_stable(ExponentMeasure::husler_reiss(toeplitz({1.0, 0.8, 0.5}))),
      MarkovModel::asym_logistic(AlogParams{})};
  for (const auto& m : models) {
    Rng rng(103);
    auto p = m.simulate_stationary_chain(100000, rng, 100);
    CHECK(p.size() == 100001);
    INFO(m.describe());
    CHECK(ks(p, [](double x) { return -std::expm1(-x); }) < 0.01);
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(MarkovModel::gaussian({1.0, 0.99, 0.1}), ParameterError);
  CHECK_THROWS_AS(MarkovModel::gaussian({1.0, -0.2}), ParameterError);
  CHECK_THROWS_AS(MarkovModel::max_stable(ExponentMeasure::logistic(9, 0.5)), ParameterError);
  CHECK_NOTHROW(MarkovModel::max_stable(ExponentMeasure::logistic(9, 0.5), 8));
  Eigen::MatrixXd s(3, 3);
  s << 1.0, 0.5, 0.2, 0.5, 1.0, 0.3, 0.2, 0.3, 1.0;
  CHECK_THROWS_AS(MarkovModel::max_stable(ExponentMeasure::husler_reiss(s)), ParameterError);
}
