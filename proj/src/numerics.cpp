#include "exc/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/owens_t.hpp>

#include "exc/error.hpp"
#include "exc/rng.hpp"

namespace exc {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log(sqrt(2 pi))
}  // namespace

double norm_pdf(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }
double norm_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }
double norm_sf(double z) { return 0.5 * std::erfc(z / kSqrt2); }

double mills_ratio(double z) {
  if (z < 5.0) return norm_sf(z) / norm_pdf(z);
  // Backward evaluation of R = 1/(z + 1/(z + 2/(z + 3/(z + ...)))).
  double t = z;
  for (int n = 120; n >= 1; --n) t = z + n / t;
  return 1.0 / t;
}

double log_norm_sf(double z) {
  if (z < -5.0) return std::log1p(-norm_sf(-z));
  if (z < 5.0) return std::log(norm_sf(z));
  return -0.5 * z * z - kLogSqrt2Pi + std::log(mills_ratio(z));
}

double log_norm_cdf(double z) { return log_norm_sf(-z); }

// Wichura's AS241 (PPND16), relative accuracy about 1e-16 over (0,1).  Used
// instead of erfc_inv because it sits in the inner loop of mvn_cdf and is
// several times faster.
double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw DomainError("norm_quantile: p outside [0,1]");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((r * 2509.0809287301226727 + 33430.575583588128105) * r + 67265.770927008700853) * r +
                45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
             133.14166789178437745) * r + 3.387132872796366608) /
           (((((((r * 5226.495278852545925 + 28729.085735721942674) * r + 39307.89580009271061) * r +
                21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
             42.313330701600911252) * r + 1.0);
  }
  double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = (((((((r * 7.7454501427834140764e-4 + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
             1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
          4.6303378461565452959) * r + 1.42343711074968357734) /
        (((((((r * 1.05075007164441684324e-9 + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
             0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
          2.05319162663775882187) * r + 1.0);
  } else {
    r -= 5.0;
    v = (((((((r * 2.01033439929228813265e-7 + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
             0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
          5.4637849111641143699) * r + 6.6579046435011037772) /
        (((((((r * 2.04426310338993978564e-15 + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
             7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
          0.59983220655588793769) * r + 1.0);
  }
  return q < 0.0 ? -v : v;
}

double exp_to_gauss(double x) {
  if (!(x > 0.0)) {
    if (x == 0.0) return -kInf;
    throw DomainError("exp_to_gauss: x must be positive");
  }
  if (x == kInf) return kInf;
  if (x < std::numbers::ln2) return norm_quantile(-std::expm1(-x));
  if (x <= 30.0) return kSqrt2 * boost::math::erfc_inv(2.0 * std::exp(-x));
  // sf(z) = e^{-x}: z^2 = 2x - log(2 pi) - 2 log z + O(z^-2), then Newton on
  // log sf(z) + x with derivative -1/R(z).
  double z = std::sqrt(2.0 * x);
  for (int i = 0; i < 3; ++i) z = std::sqrt(2.0 * x - 2.0 * kLogSqrt2Pi - 2.0 * std::log(z));
  for (int i = 0; i < 4; ++i) z += (log_norm_sf(z) + x) * mills_ratio(z);
  return z;
}

double gauss_to_exp(double z) { return -log_norm_sf(z); }

double exp_to_frechet(double x) {
  if (!(x > 0.0)) throw DomainError("exp_to_frechet: x must be positive");
  if (x == kInf) return kInf;
  if (x > 30.0) return std::exp(x) * (1.0 - 0.5 * std::exp(-x));
  if (x < std::numbers::ln2) return -1.0 / std::log(-std::expm1(-x));
  return -1.0 / std::log1p(-std::exp(-x));
}

double frechet_to_exp(double y) {
  if (!(y > 0.0)) throw DomainError("frechet_to_exp: y must be positive");
  if (y == kInf) return kInf;
  const double s = 1.0 / y;
  if (s > std::numbers::ln2) return -std::log1p(-std::exp(-s));
  return -std::log(-std::expm1(-s));
}

double exp_to_uniform(double x) {
  if (x < 0.0) throw DomainError("exp_to_uniform: x must be nonnegative");
  return -std::expm1(-x);
}

double uniform_to_exp(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("uniform_to_exp: p outside [0,1)");
  return -std::log1p(-p);
}

double log_sum_exp(std::span<const double> v) {
  double m = -kInf;
  for (double a : v) m = std::max(m, a);
  if (m == -kInf) return -kInf;
  if (m == kInf) return kInf;
  double s = 0.0;
  for (double a : v) s += std::exp(a - m);
  return m + std::log(s);
}

double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -kInf) return a;
  return a + std::log1p(std::exp(b - a));
}

const std::vector<std::vector<std::uint32_t>>& set_partitions(int n) {
  if (n < 0 || n > kMaxPartitionSize) throw DomainError("set_partitions: n out of range");
  static std::array<std::vector<std::vector<std::uint32_t>>, kMaxPartitionSize + 1> cache;
  static std::array<std::once_flag, kMaxPartitionSize + 1> once;
  std::call_once(once[n], [n] {
    auto& out = cache[n];
    if (n == 0) {
      out.push_back({});
      return;
    }
    // Restricted-growth strings a[0]=0, a[i] <= 1 + max(a[0..i-1]).
    std::vector<int> a(n, 0), mx(n, 0);
    while (true) {
      int nblocks = mx[n - 1] + 1;
      std::vector<std::uint32_t> blocks(nblocks, 0);
      for (int i = 0; i < n; ++i) blocks[a[i]] |= 1u << i;
      out.push_back(std::move(blocks));
      int i = n - 1;
      while (i > 0 && a[i] == mx[i - 1] + 1) --i;
      if (i == 0) break;
      ++a[i];
      mx[i] = std::max(mx[i - 1], a[i]);
      for (int j = i + 1; j < n; ++j) {
        a[j] = 0;
        mx[j] = mx[i];
      }
    }
  });
  return cache[n];
}

InversionResult invert_monotone(const std::function<double(double)>& f, double target,
                                double lo, double hi, double ptol, int max_iter) {
  double flo = f(lo) - target, fhi = f(hi) - target;
  if (flo > 0.0 || fhi < 0.0)
    throw NumericalError("invert_monotone: target not bracketed on [" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "]");
  // Near 0 or 1 an absolute tolerance would accept points far out in the
  // tail, so the tolerance shrinks with the distance of target to {0,1}.
  const double tol = ptol * std::min(1.0, 2.0 * std::min(target, 1.0 - target));
  int side = 0;
  for (int it = 1; it <= max_iter; ++it) {
    double x = (flo == fhi) ? 0.5 * (lo + hi) : lo - flo * (hi - lo) / (fhi - flo);
    // Fall back to bisection when the secant step lands at or outside the
    // bracket ends, or every fourth iteration to guarantee shrinkage.
    if (!(x > lo && x < hi) || it % 4 == 0) x = 0.5 * (lo + hi);
    double fx = f(x) - target;
    if (std::abs(fx) <= tol) return {x, fx, it};
    if (fx < 0.0) {
      lo = x;
      flo = fx;
      if (side == -1) fhi *= 0.5;  // Illinois
      side = -1;
    } else {
      hi = x;
      fhi = fx;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
    if (hi - lo <= 1e-15 * (1.0 + std::abs(x))) return {x, fx, it};
  }
  double x = 0.5 * (lo + hi);
  return {x, f(x) - target, max_iter};
}

double bvn_cdf(double h, double k, double r) {
  if (h == -kInf || k == -kInf) return 0.0;
  if (h == kInf) return norm_cdf(k);
  if (k == kInf) return norm_cdf(h);
  if (r >= 1.0 - 1e-15) return norm_cdf(std::min(h, k));
  if (r <= -1.0 + 1e-15) return std::max(0.0, norm_cdf(h) + norm_cdf(k) - 1.0);
  // Owen (1956): Phi2 = (Phi(h) + Phi(k))/2 - T(h, a_h) - T(k, a_k) - delta.
  const double s = std::sqrt((1.0 - r) * (1.0 + r));
  if (h == 0.0) h = 1e-300;
  if (k == 0.0) k = 1e-300;
  const double ah = (k - r * h) / (h * s);
  const double ak = (h - r * k) / (k * s);
  const double delta = ((h > 0.0) == (k > 0.0)) ? 0.0 : 0.5;
  double p = 0.5 * (norm_cdf(h) + norm_cdf(k)) - boost::math::owens_t(h, ah) -
             boost::math::owens_t(k, ak) - delta;
  if (p > 1e-4) return std::min(p, 1.0);
  // Small probabilities lose relative accuracy to cancellation above; integrate
  // phi(x) Phi((k - r x)/s) over x < min(h, k) instead (positive integrand).
  if (h > k) std::swap(h, k);
  auto g = [&](double x) { return norm_pdf(x) * norm_cdf((k - r * x) / s); };
  const double tail = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      g, -kInf, h, 15, 1e-14);
  return std::clamp(tail, 0.0, 1.0);
}

double mvn_log_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                   const Eigen::MatrixXd& cov) {
  const int d = static_cast<int>(x.size());
  if (d == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw ParameterError("mvn_log_pdf: covariance not PD");
  Eigen::VectorXd z = llt.matrixL().solve(x - mean);
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += std::log(llt.matrixL()(i, i));
  return -0.5 * z.squaredNorm() - logdet - d * kLogSqrt2Pi;
}

namespace {

constexpr std::array<int, 16> kPrimes = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

// Genz-Bretz ordering: repeatedly pick the variable with the smallest
// conditional probability at the running conditional expectations, building
// the Cholesky factor as we go.
void reorder_cholesky(Eigen::VectorXd& b, Eigen::MatrixXd& c, Eigen::MatrixXd& L) {
  const int d = static_cast<int>(b.size());
  L = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) {
    int best = i;
    double best_p = kInf;
    for (int j = i; j < d; ++j) {
      double s = c(j, j) - L.row(j).head(i).squaredNorm();
      s = std::sqrt(std::max(s, 1e-300));
      double mu = L.row(j).head(i).dot(y.head(i));
      double p = norm_cdf((b(j) - mu) / s);
      if (p < best_p) {
        best_p = p;
        best = j;
      }
    }
    if (best != i) {
      std::swap(b(i), b(best));
      c.row(i).swap(c.row(best));
      c.col(i).swap(c.col(best));
      L.row(i).swap(L.row(best));
    }
    double diag = c(i, i) - L.row(i).head(i).squaredNorm();
    if (diag <= 0.0) throw ParameterError("mvn_cdf: covariance not positive definite");
    L(i, i) = std::sqrt(diag);
    for (int j = i + 1; j < d; ++j)
      L(j, i) = (c(j, i) - L.row(j).head(i).dot(L.row(i).head(i))) / L(i, i);
    // Expected value of the truncated standard normal below the standardized bound.
    double bi = (b(i) - L.row(i).head(i).dot(y.head(i))) / L(i, i);
    double pb = norm_cdf(bi);
    y(i) = pb > 1e-300 ? -norm_pdf(bi) / pb : bi;
  }
}

}  // namespace

MvnResult mvn_cdf(const Eigen::VectorXd& b_in, const Eigen::MatrixXd& cov, const MvnOptions& opt) {
  std::vector<int> keep;
  for (int i = 0; i < b_in.size(); ++i) {
    if (std::isnan(b_in(i))) throw DomainError("mvn_cdf: NaN bound");
    if (b_in(i) == -kInf) return {0.0, 0.0};
    if (b_in(i) != kInf) keep.push_back(i);
  }
  const int d = static_cast<int>(keep.size());
  if (d == 0) return {1.0, 0.0};
  Eigen::VectorXd b(d);
  Eigen::MatrixXd c(d, d);
  for (int i = 0; i < d; ++i) {
    b(i) = b_in(keep[i]);
    for (int j = 0; j < d; ++j) c(i, j) = cov(keep[i], keep[j]);
  }
  if (d == 1) return {norm_cdf(b(0) / std::sqrt(c(0, 0))), 0.0};
  if (d == 2) {
    const double s0 = std::sqrt(c(0, 0)), s1 = std::sqrt(c(1, 1));
    return {bvn_cdf(b(0) / s0, b(1) / s1, c(0, 1) / (s0 * s1)), 0.0};
  }
  if (d - 1 > static_cast<int>(kPrimes.size())) throw DomainError("mvn_cdf: dimension too large");

  Eigen::MatrixXd L;
  reorder_cholesky(b, c, L);

  const int m = d - 1;
  std::array<double, kPrimes.size()> gen{};
  for (int j = 0; j < m; ++j) gen[j] = std::fmod(std::sqrt(static_cast<double>(kPrimes[j])), 1.0);
  Rng rng(opt.seed);
  std::vector<std::array<double, kPrimes.size()>> shift(std::max(1, opt.shifts));
  for (auto& s : shift)
    for (int j = 0; j < m; ++j) s[j] = rng.uniform();

  // Row-major copy of L for the inner loop.
  std::vector<double> lr(d * d), ld(d);
  for (int i = 0; i < d; ++i) {
    ld[i] = 1.0 / L(i, i);
    for (int j = 0; j < i; ++j) lr[i * d + j] = L(i, j);
  }
  std::vector<double> bb(b.data(), b.data() + d);
  const double e1 = norm_cdf(bb[0] * ld[0]);
  std::vector<double> y(d);
  auto integrand = [&](const double* w) {
    double e = e1, f = e1;
    for (int i = 1; i < d; ++i) {
      const double u = std::max(w[i - 1] * e, 1e-300);
      y[i - 1] = norm_quantile(std::min(u, 1.0 - 1e-16));
      double s = 0.0;
      const double* row = &lr[i * d];
      for (int j = 0; j < i; ++j) s += row[j] * y[j];
      e = norm_cdf((bb[i] - s) * ld[i]);
      f *= e;
      if (f == 0.0) break;
    }
    return f;
  };

  int n = opt.min_points;
  int done = 0;  // points already summed per shift
  std::vector<double> sums(shift.size(), 0.0);
  double value = 0.0, err = kInf;
  while (true) {
    // Rank-1 lattice points p = done+1..n: the first n points of the sequence
    // are reused on each doubling.
    std::vector<double> means(shift.size(), 0.0);
    double w[kPrimes.size()];
    double x[kPrimes.size()];
    for (std::size_t s = 0; s < shift.size(); ++s) {
      double acc = 0.0;
      for (int j = 0; j < m; ++j) x[j] = std::fmod(done * gen[j] + shift[s][j], 1.0);
      for (int p = done + 1; p <= n; ++p) {
        for (int j = 0; j < m; ++j) {
          x[j] += gen[j];
          if (x[j] >= 1.0) x[j] -= 1.0;
          w[j] = 1.0 - std::abs(2.0 * x[j] - 1.0);  // baker's transform
        }
        acc += integrand(w);
      }
      sums[s] += acc;
      means[s] = sums[s] / n;
    }
    done = n;
    double mean = 0.0;
    for (double v : means) mean += v;
    mean /= static_cast<double>(means.size());
    value = mean;
    if (means.size() < 2) {
      err = std::numeric_limits<double>::quiet_NaN();
      break;
    }
    double var = 0.0;
    for (double v : means) var += (v - mean) * (v - mean);
    var /= static_cast<double>(means.size() - 1);
    err = 3.0 * std::sqrt(var / static_cast<double>(means.size()));
    if (err <= opt.abs_tol || 2 * n > opt.max_points) break;
    n *= 2;
  }
  return {std::clamp(value, 0.0, 1.0), err};
}

Eigen::MatrixXd toeplitz(std::span<const double> r) {
  const int d = static_cast<int>(r.size());
  Eigen::MatrixXd s(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) s(i, j) = r[std::abs(i - j)];
  return s;
}

double Rng::exponential() { return -std::log(uniform()); }
double Rng::normal() { return norm_quantile(uniform()); }

}  // namespace exc
