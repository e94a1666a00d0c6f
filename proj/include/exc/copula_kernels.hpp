#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exc/extremal_measures.hpp"
#include "exc/rng.hpp"

namespace exc {

// k-th order stationary Markov chains in unit-exponential margins whose
// (k+1)-dimensional copula is Gaussian, max-stable or inverted max-stable.

enum class KernelKind { GaussianCopula, MaxStable, InvertedMaxStable, AsymLogistic };

// How conditional draws are produced.  Inversion always inverts
// conditional_cdf numerically (closed form for the Gaussian copula).  Auto
// additionally uses the exact extremal-function sampler for Husler-Reiss,
// whose CDF needs quasi-Monte Carlo and is too slow to invert at scale.
enum class SamplerMethod { Auto, Inversion };

inline constexpr int kDefaultMaxOrder = 6;
inline constexpr double kInversionLo = -60.0;
inline constexpr double kInversionHi = 60.0;

class MarkovModel {
 public:
  // rho = (1, rho_1, ..., rho_k) generates the Toeplitz correlation matrix.
  static MarkovModel gaussian(const std::vector<double>& rho);
  static MarkovModel max_stable(const ExponentMeasure& m, int max_order = kDefaultMaxOrder);
  static MarkovModel inverted_max_stable(const ExponentMeasure& m, int max_order = kDefaultMaxOrder);
  static MarkovModel asym_logistic(const AlogParams& p);

  int k() const { return k_; }
  KernelKind kind() const { return kind_; }
  // Throws DomainError for the Gaussian copula, which has no exponent measure.
  const ExponentMeasure& measure() const;
  bool is_husler_reiss() const;
  const Eigen::MatrixXd& gaussian_sigma() const { return sigma_; }
  std::string describe() const;

  // P(X_j <= x | X_{0:j-1} = prev) under the (j+1)-dimensional margin of the
  // copula, j = prev.size() <= k.  j = 0 gives the unit-exponential CDF.
  double conditional_cdf(std::span<const double> prev, double x) const;
  // The transition kernel: state = X_{t-k:t-1}, oldest first.
  double kernel_cdf(std::span<const double> state, double x) const;

  double conditional_sample(std::span<const double> prev, Rng& rng,
                            SamplerMethod method = SamplerMethod::Auto) const;
  double kernel_sample(std::span<const double> state, Rng& rng,
                       SamplerMethod method = SamplerMethod::Auto) const;
  // Inverse of conditional_cdf at probability p (to 1e-10 in probability).
  double conditional_quantile(std::span<const double> prev, double p) const;

  // X_0 = u + E, then X_1..X_{k-1} by sequential conditional draws.
  std::vector<double> sample_initial_conditioned(double u, Rng& rng,
                                                 SamplerMethod method = SamplerMethod::Auto) const;
  std::vector<double> simulate_conditioned_chain(double u, int T, Rng& rng,
                                                 SamplerMethod method = SamplerMethod::Auto) const;
  // Stationary start (u = 0 start, no conditioning) followed by burn_in
  // discarded steps; returns T + 1 values.
  std::vector<double> simulate_stationary_chain(int T, Rng& rng, int burn_in = 100,
                                                SamplerMethod method = SamplerMethod::Auto) const;

  // Gaussian copula: Z_j | Z_{0:j-1} = mean + sd * N(0,1) with
  // mean = sum_t coef[j][t] z_t.
  const std::vector<double>& gaussian_coef(int j) const { return gcoef_[j]; }
  double gaussian_sd(int j) const { return gsd_[j]; }

 private:
  MarkovModel() = default;
  double ms_log_cdf(std::span<const double> yprev, double yk) const;
  double ms_log_cdf_logistic(std::span<const double> yprev, double yk) const;
  double hr_exact_sample(std::span<const double> yprev, Rng& rng) const;

  KernelKind kind_ = KernelKind::GaussianCopula;
  int k_ = 1;
  Eigen::MatrixXd sigma_;                     // Gaussian correlation or HR covariance
  std::vector<std::vector<double>> gcoef_;    // Gaussian regression coefficients
  std::vector<double> gsd_;
  std::vector<ExponentMeasure> margins_;      // margins_[j]: coordinates 0..j
  std::vector<std::vector<double>> log_block_coef_;  // logistic fast path
};

// log of sum over partitions p of {0..n-1} of prod_{J in p} exp(lw[J]), with
// lw indexed by block bitmask.  Log-sum-exp throughout.
double log_partition_sum(std::span<const double> lw, int n);

}  // namespace exc
