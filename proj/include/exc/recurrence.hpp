#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace exc {

// Norming-slope recurrences alpha_t = a(alpha_{t-k}, ..., alpha_{t-1}).
// Arguments of every k-ary functional are ordered oldest first, so x_1 is
// alpha_{t-k} and x_k is alpha_{t-1}.

using Functional = std::function<double(std::span<const double>)>;

// f(x) = c {sum_i gamma_i (gamma_i x_i)^delta}^{1/delta}, with the limits
// c prod x_i^gamma_i prod gamma_i^gamma_i at delta = 0 and
// c max_i / min_i (gamma_i x_i) at delta = +inf / -inf.
struct HomogeneousFamily {
  double c = 1.0;
  std::vector<double> gamma;
  double delta = 1.0;

  int k() const { return static_cast<int>(gamma.size()); }
  // c > 0, gamma_i > 0, |sum gamma - 1| <= 1e-12, delta not NaN.
  void validate() const;
  double operator()(std::span<const double> x) const;
  // I(gamma) = -sum gamma_i log gamma_i.
  double entropy() const;
};

enum class Regime { GeneralDelta, DeltaZero, DeltaPlusInf, DeltaMinusInf };
const char* regime_name(Regime r);

struct RootGroup {
  std::complex<double> root;
  int multiplicity = 1;
};

struct RecurrenceSolution {
  Regime regime = Regime::GeneralDelta;
  int k = 1;
  double delta = 1.0;
  std::vector<RootGroup> roots;
  // constants[i][j] multiplies t^j r_i^t.
  std::vector<std::vector<std::complex<double>>> constants;
  double drift = 0.0;  // DeltaZero only
  double vandermonde_cond = 1.0;
  std::vector<std::string> warnings;
  // Set when single- and complete-linkage clustering disagree; the solution
  // uses the single-linkage grouping and both are kept here.
  bool clustering_ambiguous = false;
  std::vector<std::vector<int>> grouping_single, grouping_complete;

  // Sum_i Sum_j C_ij t^j r_i^t, plus drift * t for DeltaZero.  This is
  // alpha_t^delta, or log alpha_t when delta = 0.
  std::complex<double> transformed(double t) const;
  double log_alpha(double t) const;
  double alpha(double t) const;
  // alpha_0..alpha_T
  std::vector<double> sequence(int T) const;
};

// alpha_0 = 1 and alpha_1..alpha_{k-1} = init, each in (0,1).
void validate_alpha_init(std::span<const double> init, int k);

// Forward iteration; returns alpha_0..alpha_T (the first k entries are the
// initial conditions).  Nonpositive or non-finite output throws.
std::vector<double> iterate_alpha(const Functional& a, int k, std::span<const double> init, int T);

// Characteristic roots clustered at relative tolerance tol.
RecurrenceSolution solve_closed_form(const HomogeneousFamily& fam, std::span<const double> init,
                                     double cluster_tol = 1e-6);
RecurrenceSolution solve_delta_zero(const HomogeneousFamily& fam, std::span<const double> init,
                                    double cluster_tol = 1e-6);
// Dispatches on delta; the infinite regimes have no closed form and throw.
RecurrenceSolution solve(const HomogeneousFamily& fam, std::span<const double> init,
                         double cluster_tol = 1e-6);

// delta = +-inf: alpha_t = c * extremum_i(gamma_i alpha_{t-k-1+i}), ties to
// the smallest lag.  Returns alpha_0..alpha_T; lags[t] is the lag (1..k)
// chosen at step t (0 for t < k).
struct ExtremumSequence {
  std::vector<double> alpha;
  std::vector<int> lags;
};
ExtremumSequence solve_delta_inf(const HomogeneousFamily& fam, std::span<const double> init, int T);

// beta_0 = 1 and log beta_t = floor(1 + (t-1)/k) log beta for t >= 1.
std::vector<double> beta_sequence(double beta, int k, int T);
// Same values from log beta_t = log beta + max_{i=1..k} log beta_{t-i}.
std::vector<double> beta_sequence_recursive(double beta, int k, int T);

// Roots of x^k - a_1 x^{k-1} - ... - a_k via companion eigenvalues, where
// a_l is the coefficient on lag l.
std::vector<std::complex<double>> companion_roots(std::span<const double> lag_coef);

// Relative-tolerance clustering of characteristic roots.  Single linkage
// chains nearby roots; complete linkage requires every pair to be close.
// They disagree exactly when the grouping at this tolerance is ambiguous.
struct RootClustering {
  std::vector<std::vector<int>> single, complete;
  bool ambiguous = false;
};
RootClustering cluster_roots(std::span<const std::complex<double>> roots, double tol);

struct YuleWalker {
  std::vector<double> phi;          // phi_1..phi_k, phi_i on lag i
  std::vector<double> phi_precision;  // the same from -q_{k-i,k} / q_kk
  double q_kk = 0.0;
  std::vector<double> rho;          // 1, rho_1..rho_k

  // rho_0..rho_T, extended by rho_t = sum phi_i rho_{t-i}.
  std::vector<double> extend(int T) const;
};
// rho = (rho_1, ..., rho_k); the Toeplitz matrix of (1, rho) must be PD.
YuleWalker gaussian_yule_walker(std::span<const double> rho);

// a(x) = (sum_i phi_i x_{k-i}^{1/2})^2 on oldest-first arguments.
Functional gaussian_functional(std::span<const double> phi);

}  // namespace exc
