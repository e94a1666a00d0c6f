#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace exc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- univariate normal -----------------------------------------------------

double norm_pdf(double z);
double norm_cdf(double z);
double norm_sf(double z);
double log_norm_sf(double z);  // accurate for all z, including z >> 40
double log_norm_cdf(double z);
double norm_quantile(double p);

// Mills ratio sf(z)/pdf(z), continued fraction for large z.
double mills_ratio(double z);

// Standard-normal quantile of 1 - exp(-x), i.e. the Gaussian-margin value of
// a unit-exponential x.  Uses the Mills-ratio expansion refined by Newton
// steps once x > 30, where 1 - exp(-x) is no longer representable.
double exp_to_gauss(double x);
// Inverse: -log sf(z).
double gauss_to_exp(double z);

// ---- marginal transforms ---------------------------------------------------

// T(x) = -1/log(1 - e^{-x}): unit exponential to unit Frechet.
double exp_to_frechet(double x);
// T^{-1}(y) = -log(1 - e^{-1/y}).
double frechet_to_exp(double y);
double exp_to_uniform(double x);
double uniform_to_exp(double p);

// ---- log-space helpers -----------------------------------------------------

double log_sum_exp(std::span<const double> v);
double log_add_exp(double a, double b);

// All set partitions of {0..n-1}, each block a bitmask.  Enumerated once per n
// from restricted-growth strings; the reference stays valid for the program
// lifetime.
const std::vector<std::vector<std::uint32_t>>& set_partitions(int n);
inline constexpr int kMaxPartitionSize = 8;

// ---- monotone inversion ----------------------------------------------------

struct InversionResult {
  double x;
  double residual;  // f(x) - target
  int iterations;
};

// Solve f(x) = target for nondecreasing f on [lo, hi].  Safeguarded secant
// (Illinois) with bisection fallback; stops when |f(x) - target| <= ptol or the
// bracket collapses.  Throws NumericalError when target is not bracketed.
InversionResult invert_monotone(const std::function<double(double)>& f, double target,
                                double lo, double hi, double ptol = 1e-10,
                                int max_iter = 200);

// ---- multivariate normal ---------------------------------------------------

struct MvnOptions {
  double abs_tol = 1e-6;
  int min_points = 256;        // lattice points per shift, first round
  int max_points = 1 << 18;    // lattice points per shift, cap
  int shifts = 8;              // independent random shifts for the error estimate
  std::uint64_t seed = 0x5eedULL;
};

struct MvnResult {
  double value;
  double error;  // 3 standard errors across shifts; 0 when computed in closed form
};

// P(Z <= b) for Z ~ N(0, cov).  Entries of b equal to +inf are marginalized
// out exactly.  Dimensions 1 and 2 are closed form (erfc, Owen's T); higher
// dimensions use Genz's separation of variables on a randomized
// Richtmyer lattice with variable reordering, doubling the point count until
// the error estimate meets abs_tol.
MvnResult mvn_cdf(const Eigen::VectorXd& b, const Eigen::MatrixXd& cov,
                  const MvnOptions& opt = {});

// Bivariate standard normal CDF with correlation r.
double bvn_cdf(double h, double k, double r);

// Symmetric Toeplitz matrix with first row r.
Eigen::MatrixXd toeplitz(std::span<const double> r);

// Log density of N(mean, cov) at x, via Cholesky.
double mvn_log_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                   const Eigen::MatrixXd& cov);

}  // namespace exc
