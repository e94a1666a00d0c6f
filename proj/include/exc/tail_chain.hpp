#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "exc/extremal_measures.hpp"
#include "exc/path_ensemble.hpp"
#include "exc/recurrence.hpp"
#include "exc/rng.hpp"

namespace exc {

// Hidden tail chains M_t = psi^a_t(M_{t-k:t-1}) + psi^b_t(M_{t-k:t-1}) eps_t
// of the conditioned chains in copula_kernels.  Windows are oldest first.

enum class TailKind { GaussianAR, LogisticRW, HuslerReissRW, InvertedLogisticScale };
const char* tail_kind_name(TailKind k);

struct Remainder {
  double r_a = 0.0;
  double r_b = 0.0;
};

class TailChainModel {
 public:
  // rho = (1, rho_1, ..., rho_k); rho_t must stay positive along the
  // Yule-Walker extension for the horizons simulated.
  static TailChainModel gaussian_ar(const std::vector<double>& rho);
  static TailChainModel logistic_rw(int k, double alpha);
  // sigma: (k+1) x (k+1) Husler-Reiss matrix, the same one passed to
  // ExponentMeasure::husler_reiss.
  static TailChainModel husler_reiss_rw(const Eigen::MatrixXd& sigma);
  static TailChainModel inverted_logistic(int k, double alpha);

  TailKind kind() const { return kind_; }
  int k() const { return k_; }
  double alpha() const { return alpha_; }
  Norming norming() const;
  std::string describe() const;

  // Norming a_t(v) = alpha_t v, b_t(v) = v^{beta_t}; t = 0 gives a_0(v) = v,
  // b_0 = 1 for location kinds and a_0 = 0, b_0(v) = v for the scale kind.
  double norming_alpha(int t) const;
  double norming_beta(int t) const;
  // M_0
  double m0() const { return kind_ == TailKind::InvertedLogisticScale ? 1.0 : 0.0; }

  // Update functions at time t >= k.
  double psi_a(int t, std::span<const double> window) const;
  double psi_b(int t, std::span<const double> window) const;

  // Kernel normalizing functionals a(y), b(y) of the finite-level chain.
  double kernel_a(std::span<const double> y) const;
  double kernel_b(std::span<const double> y) const;

  // Innovation law K.
  double innovation_cdf(double x) const;
  double innovation_quantile(double p) const;

  // Law of (M_1..M_{k-1}).  initial_cdf is the joint CDF (the Gaussian kinds
  // evaluate it by quasi-Monte Carlo); initial_marginal_cdf is the law of M_j.
  double initial_cdf(std::span<const double> x) const;
  double initial_marginal_cdf(int j, double x) const;
  std::vector<double> sample_initial(Rng& rng) const;

  // M_0..M_T
  std::vector<double> simulate(int T, Rng& rng) const;

  // Remainders at time t for the window x (entries for times t-k..t-1) at
  // level v: with y_s = a_s(v) + b_s(v) x_s,
  //   r^a = {a_t(v) - a(y) + b_t(v) psi^a_t(x)} / b(y)
  //   r^b = 1 - b_t(v) psi^b_t(x) / b(y).
  // A window entry at time 0 is replaced by M_0.
  Remainder finite_level_remainder(int t, std::span<const double> x, double v) const;

  // HR only: coefficients of the limit location on the window, the
  // innovation mean and variance tau, and the law N(mean0, cov0) of M_1..M_{k-1}.
  const Eigen::VectorXd& hr_coef() const { return hr_coef_; }
  double hr_eps_mean() const { return hr_mu_; }
  double hr_tau() const { return hr_tau_; }
  const Eigen::VectorXd& initial_mean() const { return g_mean_; }
  const Eigen::MatrixXd& initial_cov() const { return g_cov_; }
  // Gaussian only.
  const YuleWalker& yule_walker() const { return yw_; }
  std::vector<double> rho_extended(int T) const { return yw_.extend(T); }

 private:
  TailChainModel() = default;
  double psi_a_impl(std::span<const double> window, std::span<const double> rho_win,
                    double rho_t) const;
  double psi_b_inverted(int t, std::span<const double> window) const;
  int block_index(int t) const;  // n_t

  TailKind kind_ = TailKind::LogisticRW;
  int k_ = 1;
  double alpha_ = 0.5;
  YuleWalker yw_;
  double gauss_sd_ = 1.0;  // sd of eps
  Eigen::MatrixXd sigma_;
  Eigen::VectorXd hr_coef_;
  double hr_mu_ = 0.0, hr_tau_ = 1.0;
  Eigen::VectorXd g_mean_;
  Eigen::MatrixXd g_cov_, g_chol_;
};

// n_rep independent tail chains; replicate r is seeded with
// replicate_seed(seed, r).
PathEnsemble simulate_hidden_tail_chain(const TailChainModel& model, int T, int n_rep,
                                        std::uint64_t seed, int threads = 1);

// Variance-stabilizing transforms for b(x) = a(x)^beta:
// Z = x^{1-beta} / {b(1_k)(1-beta)} and Z = log x.
double lamperti_transform(double x, double beta, double b_ones);
double lamperti_inverse(double z, double beta, double b_ones);
std::vector<double> lamperti_transform(std::span<const double> path, double beta, double b_ones);
std::vector<double> log_transform(std::span<const double> path);
std::vector<double> log_inverse(std::span<const double> path);

// ---- asymmetric logistic, k = 2

// How the latent Bernoulli process is parameterized.
//   AsPublished:      B_1 ~ Bern(th01 + th02), B_t ~ Bern(m_A)
//   AsStated:         B_1 ~ Bern(th01 + th012), B_t ~ Bern(m_A)
//   KernelConsistent: B_1 ~ Bern(th01 + th012), B_t ~ Bern(1 - m_A)
// m_A is the weight the limit kernel puts on the non-extreme component.
enum class AlogConvention { AsPublished, AsStated, KernelConsistent };
const char* alog_convention_name(AlogConvention c);

struct AlogPath {
  std::vector<double> value;          // extreme-scale M_t, or the raw X_t when B_t = 0
  std::vector<int> B;                 // -1 after termination
  std::vector<std::int8_t> atom;      // -1 when the extreme-scale state is the -inf atom
  std::vector<std::uint8_t> regime;   // index into AlogTailChain::regime_labels()
  int TB = -1;                        // termination time, -1 if beyond T
};

class AlogTailChain {
 public:
  enum RegimeCode : std::uint8_t {
    kStart, kInit1, kInit0, k11_1, k11_0, k10_1, k10_0, k01_1, k01_0, kEnd
  };
  static const std::vector<std::string>& regime_labels();

  explicit AlogTailChain(const AlogParams& p, AlogConvention conv = AlogConvention::AsPublished);
  const AlogParams& params() const { return p_; }
  AlogConvention convention() const { return conv_; }

  // Non-extreme weights; m11 depends on the extreme-scale pair (x0, x1).
  double m11(double x0, double x1) const;
  double m10() const;
  double m01() const;
  double p_b1() const;  // P(B_1 = 1)

  // Limit laws of the increment (b = 1) or the raw value (b = 0).
  double g11_1(double y) const;
  double g10_1(double y) const;
  double g01_1(double y) const;
  double g11_0(double y) const;
  double g10_0(double y, double x1) const;  // X_{t-2} extreme, X_{t-1} = x1 raw
  double g01_0(double y, double x0) const;  // X_{t-2} = x0 raw, X_{t-1} extreme
  // Law of M_1 given B_1 = 1.
  double g_init(double y) const;
  // Location functionals a_{A,1}.
  double a11(double v1, double v2) const;

  AlogPath simulate(int T, Rng& rng) const;

 private:
  double v_at(double y0, double y1, double y2) const;
  double sample_g_raw(bool ten, double x, Rng& rng) const;

  AlogParams p_;
  AlogConvention conv_;
  ExponentMeasure v3_;
};

// Values, atoms and regimes as an ensemble; tb receives T^B per replicate.
PathEnsemble simulate_alog_tail_chain(const AlogTailChain& chain, int T, int n_rep,
                                      std::uint64_t seed, int threads = 1,
                                      std::vector<int>* tb = nullptr);

}  // namespace exc
