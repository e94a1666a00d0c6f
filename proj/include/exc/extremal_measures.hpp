#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "exc/numerics.hpp"

namespace exc {

// Exponent measures V of max-stable laws F(y) = exp(-V(y)) with unit Frechet
// margins.  Coordinates equal to kInf are the "coordinate removed" sentinel:
// every family resolves them in closed form.

enum class Family { Logistic, HuslerReiss, AsymmetricLogistic };

// Trivariate asymmetric logistic with stationary pair structure: the pairs
// {0,1} and {1,2} share (theta01, nu01).
struct AlogParams {
  double th0 = 0.3, th1 = 0.3, th2 = 0.3, th01 = 0.3, th02 = 0.3, th012 = 0.1;
  double nu01 = 0.5, nu02 = 0.5, nu012 = 0.5;

  // Mass-balance constraints (unit Frechet margins); tolerance 1e-12.
  void validate() const;
};

// One summand theta * (sum_{i in A} y_i^{-1/nu})^nu of a logistic-type measure.
// Singletons use nu = 1.
struct LogisticTerm {
  std::uint32_t subset;
  double theta;
  double nu;
};

class ExponentMeasure {
 public:
  static ExponentMeasure logistic(int dim, double alpha);
  static ExponentMeasure husler_reiss(const Eigen::MatrixXd& sigma, const MvnOptions& opt = {});
  static ExponentMeasure asymmetric_logistic(const AlogParams& p);

  Family family() const { return family_; }
  int dim() const { return dim_; }
  double alpha() const { return alpha_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const AlogParams& alog() const { return alog_; }
  const std::vector<LogisticTerm>& terms() const { return terms_; }
  const MvnOptions& mvn_options() const { return mvn_; }
  ExponentMeasure with_mvn_options(const MvnOptions& opt) const;

  double value(std::span<const double> y) const;

  // log(-V_J(y)) for the index set J given as a bitmask.  Every partial
  // derivative of an exponent measure is <= 0, so this is always defined
  // (-inf when V_J vanishes, e.g. J touches a removed coordinate).
  double log_neg_partial(std::uint32_t J, std::span<const double> y) const;
  double partial(std::uint32_t J, std::span<const double> y) const;

  // Measure of the sub-vector indexed by the set bits of keep, in increasing
  // index order.
  ExponentMeasure marginal(std::uint32_t keep) const;

 private:
  ExponentMeasure() = default;
  double hr_value(std::span<const double> y) const;
  double hr_log_neg_partial(std::uint32_t J, std::span<const double> y) const;

  Family family_ = Family::Logistic;
  int dim_ = 0;
  double alpha_ = 0.0;
  AlogParams alog_{};
  std::vector<LogisticTerm> terms_;
  Eigen::MatrixXd sigma_;
  MvnOptions mvn_{};
};

double v_logistic(std::span<const double> y, double alpha);
double v_husler_reiss(std::span<const double> y, const Eigen::MatrixXd& sigma,
                      const MvnOptions& opt = {});
double v_asym_logistic(std::span<const double> y, const AlogParams& p);

// V_J with J given as a list of indices.
double v_partial(const ExponentMeasure& m, std::span<const int> J, std::span<const double> y);

// Central finite differences with step eps^{1/(|J|+2)} * y_j.  Low precision;
// used as an oracle and for measures without closed-form partials.
double v_partial_fd(const ExponentMeasure& m, std::span<const int> J, std::span<const double> y);

// Gaussian ingredients of the Husler-Reiss extremal function tilted at
// coordinate r: log(Y_j / Y_r), j in idx, is N(mean, cov).
struct TiltedGaussian {
  std::vector<int> idx;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};
TiltedGaussian hr_tilted(const Eigen::MatrixXd& sigma, int r, std::span<const int> others);

}  // namespace exc
