#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "exc/copula_kernels.hpp"
#include "exc/path_ensemble.hpp"
#include "exc/tail_chain.hpp"

namespace exc {

// Monte Carlo checks tying the conditioned chains to their tail chains.
// Margins are unit exponential, so a_0(u) = u and b_0 = 1 throughout.

// X_0 > u chains from the copula kernel; raw values.
PathEnsemble simulate_conditioned_ensemble(const MarkovModel& model, double u, int T, int n_rep,
                                           std::uint64_t seed, int threads = 1,
                                           SamplerMethod method = SamplerMethod::Auto);

// Column 0 becomes X_0 - u.  For t >= 1:
//   LocationScale:         (X_t - alpha_t X_0) / X_0^{beta_t}
//   ScaleOnly:             X_t / X_0^{beta_t}
//   AsymptoticDependence:  X_t - X_0
//   None:                  X_t
// alpha and beta are indexed by t and must cover 0..T for the first two.
PathEnsemble renormalize(const PathEnsemble& raw, Norming norming, std::span<const double> alpha,
                         std::span<const double> beta);
// Norming sequences taken from the tail-chain model.
PathEnsemble renormalize(const PathEnsemble& raw, const TailChainModel& model);

// Sup distance between the empirical CDF of sample and cdf.
double ks_distance(std::span<const double> sample, const std::function<double(double)>& cdf);
// Two-sample statistic over the pooled sample.
double ks_distance(std::span<const double> a, std::span<const double> b);

struct QuantileBands {
  std::vector<double> probs;
  // Indexed [t][j] for probs[j]; NaN where no finite values exist.
  std::vector<std::vector<double>> q;
  std::vector<double> mean, se;
  std::vector<int> n_finite;
  std::vector<double> atom_mass;  // fraction of replicates at an atom
};
// Empirical quantiles (type 7, linear interpolation) per t over non-atom
// entries.  probs must lie in (0,1).
QuantileBands quantile_bands(const PathEnsemble& e, std::span<const double> probs);
// The same restricted to the replicates r with keep[r] true.
QuantileBands quantile_bands(const PathEnsemble& e, std::span<const double> probs,
                             const std::vector<bool>& keep);

// X_0..X_T given X_0 > u, on unit-exponential margins.
using ConditionedSampler = std::function<std::vector<double>(double u, int T, Rng& rng)>;
ConditionedSampler conditioned_sampler(const MarkovModel& model,
                                       SamplerMethod method = SamplerMethod::Auto);

struct ChiResult {
  double estimate = 0.0;
  double se = 0.0;
  long n = 0;
  long joint = 0;             // replicates exceeding at every lag of A
  double expected_iid = 0.0;  // n (1-u)^{|A|}
  std::vector<std::string> warnings;
};
// chi_A(u) = P(F(X_j) > u for all j in A | F(X_0) > u) from n conditioned
// starts.  The standard error is binomial.  A warning is issued when fewer
// than 50 joint exceedances are expected under independence or observed.
ChiResult chi_estimate(const ConditionedSampler& sampler, std::span<const int> A, double u, long n,
                       std::uint64_t seed, int threads = 1);

struct ConvergenceReport {
  std::string model, tail_model;
  std::vector<double> u_grid;
  std::vector<int> lags;
  std::vector<std::vector<double>> ks;  // [u][lag]
  std::vector<bool> decreasing;         // per lag, strictly along the u grid
  double tol = 0.05;
  int k = 1;
  std::vector<bool> final_ok;           // per lag: lags above k are not held to tol
  std::vector<double> seconds;          // per u
  int n = 0;
  std::uint64_t seed = 0;
  bool all_decreasing() const;
  bool all_final_ok() const;
};
// Two-sample KS between renormalized conditioned ensembles and one
// tail-chain ensemble, per u and lag.
ConvergenceReport convergence_diagnostic(const MarkovModel& model, const TailChainModel& tail,
                                         std::span<const double> u_grid, std::span<const int> lags,
                                         int n, std::uint64_t seed, int threads = 1, double tol = 0.05);

// Largest |P(X_k <= a_k(u) + b_k(u){psi^a + psi^b x} | X_{0:k-1} = y) - K(x)|
// over x, where y_s = a_s(u) + b_s(u) m_s for the tail-chain window m
// (m_0 is replaced by M_0).
double kernel_limit_discrepancy(const MarkovModel& model, const TailChainModel& tail, double u,
                                std::span<const double> m, std::span<const double> x_grid);
// x_i = K^{-1}(p_i), p_i equally spaced on [0.025, 0.975].
std::vector<double> innovation_grid(const TailChainModel& tail, int points = 21);

// Sample correlation of columns 0 and t with its standard error 1/sqrt(n).
struct Correlation {
  double r = 0.0;
  double se = 0.0;
};
Correlation column_correlation(const PathEnsemble& e, int t);

}  // namespace exc
