#include "exc/tail_chain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "exc/error.hpp"
#include "exc/numerics.hpp"

namespace exc {

const char* tail_kind_name(TailKind k) {
  switch (k) {
    case TailKind::GaussianAR: return "gaussian-ar";
    case TailKind::LogisticRW: return "logistic-rw";
    case TailKind::HuslerReissRW: return "husler-reiss-rw";
    case TailKind::InvertedLogisticScale: return "inverted-logistic-scale";
  }
  return "?";
}

namespace {

Eigen::MatrixXd checked_cholesky(const Eigen::MatrixXd& c, const char* what) {
  if (c.size() == 0) return c;
  Eigen::LLT<Eigen::MatrixXd> llt(c);
  if (llt.info() != Eigen::Success) throw ParameterError(std::string(what) + ": initial covariance not positive definite");
  return llt.matrixL();
}

void check_alpha(double a, const char* what) {
  if (!(a > 0.0 && a < 1.0)) throw ParameterError(std::string(what) + ": alpha must lie in (0,1)");
}

}  // namespace

TailChainModel TailChainModel::gaussian_ar(const std::vector<double>& rho) {
  if (rho.size() < 2 || rho[0] != 1.0) throw ParameterError("gaussian_ar: rho must be (1, rho_1, ..., rho_k)");
  TailChainModel m;
  m.kind_ = TailKind::GaussianAR;
  m.k_ = static_cast<int>(rho.size()) - 1;
  m.yw_ = gaussian_yule_walker(std::span<const double>(rho).subspan(1));
  for (int i = 1; i <= m.k_; ++i)
    if (!(rho[i] > 0.0)) throw ParameterError("gaussian_ar: rho_i must be positive");
  m.gauss_sd_ = std::sqrt(2.0 / m.yw_.q_kk);
  const int n = m.k_ - 1;
  m.g_mean_ = Eigen::VectorXd::Zero(n);
  m.g_cov_.resize(n, n);
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      m.g_cov_(i - 1, j - 1) = 2.0 * rho[i] * rho[j] * (rho[std::abs(i - j)] - rho[i] * rho[j]);
  m.g_chol_ = checked_cholesky(m.g_cov_, "gaussian_ar");
  return m;
}

TailChainModel TailChainModel::logistic_rw(int k, double alpha) {
  if (k < 1) throw ParameterError("logistic_rw: k must be >= 1");
  check_alpha(alpha, "logistic_rw");
  TailChainModel m;
  m.kind_ = TailKind::LogisticRW;
  m.k_ = k;
  m.alpha_ = alpha;
  return m;
}

TailChainModel TailChainModel::inverted_logistic(int k, double alpha) {
  if (k < 1) throw ParameterError("inverted_logistic: k must be >= 1");
  check_alpha(alpha, "inverted_logistic");
  TailChainModel m;
  m.kind_ = TailKind::InvertedLogisticScale;
  m.k_ = k;
  m.alpha_ = alpha;
  return m;
}

// With Q = Sigma^{-1}, q = Q 1 and A = Q - q q' / (1'q), the limit of
// X_k - X_0 given the window is coef . m + eps, coef = -tau A_{k,0:k-1},
// eps ~ N(-tau q_k / 1'q, tau) and tau = 1 / A_kk.
TailChainModel TailChainModel::husler_reiss_rw(const Eigen::MatrixXd& sigma) {
  const int d = static_cast<int>(sigma.rows());
  if (d < 2 || sigma.cols() != d) throw ParameterError("husler_reiss_rw: sigma must be square, dimension >= 2");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw ParameterError("husler_reiss_rw: sigma not positive definite");
  TailChainModel m;
  m.kind_ = TailKind::HuslerReissRW;
  m.k_ = d - 1;
  m.sigma_ = sigma;
  const int k = m.k_;
  const Eigen::MatrixXd Q = llt.solve(Eigen::MatrixXd::Identity(d, d));
  const Eigen::VectorXd q = Q.rowwise().sum();
  const double s = q.sum();
  const Eigen::MatrixXd A = Q - q * q.transpose() / s;
  m.hr_tau_ = 1.0 / A(k, k);
  m.hr_coef_ = -m.hr_tau_ * A.row(k).head(k).transpose();
  m.hr_mu_ = -m.hr_tau_ * q(k) / s;

  std::vector<int> others;
  for (int j = 1; j < k; ++j) others.push_back(j);
  const TiltedGaussian g = hr_tilted(sigma.topLeftCorner(k, k), 0, others);
  m.g_mean_ = g.mean;
  m.g_cov_ = g.cov;
  m.g_chol_ = checked_cholesky(m.g_cov_, "husler_reiss_rw");
  return m;
}

Norming TailChainModel::norming() const {
  switch (kind_) {
    case TailKind::GaussianAR: return Norming::LocationScale;
    case TailKind::InvertedLogisticScale: return Norming::ScaleOnly;
    default: return Norming::AsymptoticDependence;
  }
}

std::string TailChainModel::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << tail_kind_name(kind_) << " k=" << k_;
  switch (kind_) {
    case TailKind::GaussianAR:
      os << " rho=";
      for (std::size_t i = 0; i < yw_.rho.size(); ++i) os << (i ? "," : "") << yw_.rho[i];
      break;
    case TailKind::HuslerReissRW:
      os << " sigma_row0=";
      for (int i = 0; i <= k_; ++i) os << (i ? "," : "") << sigma_(0, i);
      break;
    default:
      os << " alpha=" << alpha_;
  }
  return os.str();
}

int TailChainModel::block_index(int t) const { return t == 0 ? 0 : 1 + (t - 1) / k_; }

double TailChainModel::norming_alpha(int t) const {
  if (t < 0) throw DomainError("norming_alpha: negative t");
  switch (kind_) {
    case TailKind::GaussianAR: {
      if (t == 0) return 1.0;
      const double r = yw_.extend(t)[t];
      return r * r;
    }
    case TailKind::InvertedLogisticScale: return 0.0;
    default: return 1.0;
  }
}

double TailChainModel::norming_beta(int t) const {
  if (t < 0) throw DomainError("norming_beta: negative t");
  switch (kind_) {
    case TailKind::GaussianAR: return t == 0 ? 0.0 : 0.5;
    case TailKind::InvertedLogisticScale: return std::pow(1.0 - alpha_, block_index(t));
    default: return 0.0;
  }
}

double TailChainModel::psi_a_impl(std::span<const double> w, std::span<const double> rho_win,
                                  double rho_t) const {
  switch (kind_) {
    case TailKind::GaussianAR: {
      double s = 0.0;
      for (int i = 1; i <= k_; ++i) s += yw_.phi[i - 1] * w[k_ - i] / rho_win[k_ - i];
      return rho_t * s;
    }
    case TailKind::LogisticRW: {
      std::vector<double> z(w.size());
      for (std::size_t i = 0; i < w.size(); ++i) z[i] = -w[i] / alpha_;
      return -alpha_ * log_sum_exp(z);
    }
    case TailKind::HuslerReissRW: {
      double s = 0.0;
      for (int i = 0; i < k_; ++i) s += hr_coef_(i) * w[i];
      return s;
    }
    case TailKind::InvertedLogisticScale: return 0.0;
  }
  return 0.0;
}

double TailChainModel::psi_a(int t, std::span<const double> window) const {
  if (t < k_) throw DomainError("psi_a: t must be >= k");
  if (static_cast<int>(window.size()) != k_) throw DomainError("psi_a: window must have k entries");
  if (kind_ == TailKind::GaussianAR) {
    const std::vector<double> rho = yw_.extend(t);
    return psi_a_impl(window, std::span<const double>(rho).subspan(t - k_, k_), rho[t]);
  }
  return psi_a_impl(window, {}, 0.0);
}

// b restricted to the window entries whose norming power is largest, i.e.
// the entries in the oldest block present.
double TailChainModel::psi_b_inverted(int t, std::span<const double> w) const {
  int nmin = block_index(t - k_);
  for (int i = 1; i < k_; ++i) nmin = std::min(nmin, block_index(t - k_ + i));
  double s = 0.0;
  for (int i = 0; i < k_; ++i)
    if (block_index(t - k_ + i) == nmin) s += std::pow(w[i], 1.0 / alpha_);
  return std::pow(s, alpha_ * (1.0 - alpha_));
}

double TailChainModel::psi_b(int t, std::span<const double> window) const {
  if (t < k_) throw DomainError("psi_b: t must be >= k");
  if (static_cast<int>(window.size()) != k_) throw DomainError("psi_b: window must have k entries");
  switch (kind_) {
    case TailKind::GaussianAR: return yw_.extend(t)[t];
    case TailKind::InvertedLogisticScale: return psi_b_inverted(t, window);
    default: return 1.0;
  }
}

double TailChainModel::kernel_a(std::span<const double> y) const {
  if (static_cast<int>(y.size()) != k_) throw DomainError("kernel_a: need k arguments");
  switch (kind_) {
    case TailKind::GaussianAR: return gaussian_functional(yw_.phi)(y);
    case TailKind::InvertedLogisticScale: return 0.0;
    default: return psi_a_impl(y, {}, 0.0);
  }
}

double TailChainModel::kernel_b(std::span<const double> y) const {
  if (static_cast<int>(y.size()) != k_) throw DomainError("kernel_b: need k arguments");
  switch (kind_) {
    case TailKind::GaussianAR: return std::sqrt(kernel_a(y));
    case TailKind::InvertedLogisticScale: {
      double s = 0.0;
      for (double v : y) s += std::pow(v, 1.0 / alpha_);
      return std::pow(s, alpha_ * (1.0 - alpha_));
    }
    default: return 1.0;
  }
}

double TailChainModel::innovation_cdf(double x) const {
  switch (kind_) {
    case TailKind::GaussianAR: return norm_cdf(x / gauss_sd_);
    case TailKind::LogisticRW:
      return std::exp((alpha_ - k_) * std::log1p(std::exp(-x / alpha_)));
    case TailKind::HuslerReissRW: return norm_cdf((x - hr_mu_) / std::sqrt(hr_tau_));
    case TailKind::InvertedLogisticScale:
      return x <= 0.0 ? 0.0 : -std::expm1(-alpha_ * std::pow(x, 1.0 / alpha_));
  }
  return 0.0;
}

double TailChainModel::innovation_quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("innovation_quantile: p must lie in (0,1)");
  switch (kind_) {
    case TailKind::GaussianAR: return gauss_sd_ * norm_quantile(p);
    case TailKind::LogisticRW: return -alpha_ * std::log(std::expm1(std::log(p) / (alpha_ - k_)));
    case TailKind::HuslerReissRW: return hr_mu_ + std::sqrt(hr_tau_) * norm_quantile(p);
    case TailKind::InvertedLogisticScale: return std::pow(-std::log1p(-p) / alpha_, alpha_);
  }
  return 0.0;
}

double TailChainModel::initial_cdf(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != k_ - 1) throw DomainError("initial_cdf: need k-1 arguments");
  if (k_ == 1) return 1.0;
  switch (kind_) {
    case TailKind::LogisticRW: {
      double s = 1.0;
      for (double v : x) s += std::exp(-v / alpha_);
      return std::pow(s, alpha_ - 1.0);
    }
    case TailKind::InvertedLogisticScale: {
      double p = 1.0;
      for (double v : x) p *= v <= 0.0 ? 0.0 : -std::expm1(-alpha_ * std::pow(v, 1.0 / alpha_));
      return p;
    }
    default: {
      Eigen::VectorXd b(k_ - 1);
      for (int i = 0; i < k_ - 1; ++i) b(i) = x[i] - g_mean_(i);
      return mvn_cdf(b, g_cov_).value;
    }
  }
}

double TailChainModel::initial_marginal_cdf(int j, double x) const {
  if (j < 1 || j >= k_) throw DomainError("initial_marginal_cdf: j must lie in 1..k-1");
  switch (kind_) {
    case TailKind::LogisticRW: return std::pow(1.0 + std::exp(-x / alpha_), alpha_ - 1.0);
    case TailKind::InvertedLogisticScale: return innovation_cdf(x);
    default: return norm_cdf((x - g_mean_(j - 1)) / std::sqrt(g_cov_(j - 1, j - 1)));
  }
}

std::vector<double> TailChainModel::sample_initial(Rng& rng) const {
  const int n = k_ - 1;
  std::vector<double> x(n);
  switch (kind_) {
    case TailKind::LogisticRW: {
      // P(M_j <= x | M_{1:j-1}) = {D / (D + e^{-x/alpha})}^{j - alpha},
      // D = 1 + sum_{i<j} e^{-M_i/alpha}.
      double D = 1.0;
      for (int j = 1; j <= n; ++j) {
        const double p = rng.uniform();
        x[j - 1] = -alpha_ * (std::log(D) + std::log(std::expm1(-std::log(p) / (j - alpha_))));
        D += std::exp(-x[j - 1] / alpha_);
      }
      break;
    }
    case TailKind::InvertedLogisticScale:
      for (auto& v : x) v = innovation_quantile(rng.uniform());
      break;
    default: {
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z(i) = rng.normal();
      const Eigen::VectorXd m = g_mean_ + g_chol_ * z;
      for (int i = 0; i < n; ++i) x[i] = m(i);
    }
  }
  return x;
}

std::vector<double> TailChainModel::simulate(int T, Rng& rng) const {
  if (T < 0) throw DomainError("simulate: negative T");
  std::vector<double> M(T + 1);
  M[0] = m0();
  const std::vector<double> init = sample_initial(rng);
  for (int t = 1; t < k_ && t <= T; ++t) M[t] = init[t - 1];
  std::vector<double> rho;
  if (kind_ == TailKind::GaussianAR) {
    rho = yw_.extend(T);
    for (int t = 0; t <= T; ++t)
      if (!(rho[t] > 0.0)) throw NumericalError("simulate: Yule-Walker extension is not positive at t=" + std::to_string(t));
  }
  for (int t = k_; t <= T; ++t) {
    std::span<const double> w(M.data() + t - k_, k_);
    double loc, scale;
    if (kind_ == TailKind::GaussianAR) {
      loc = psi_a_impl(w, std::span<const double>(rho).subspan(t - k_, k_), rho[t]);
      scale = rho[t];
    } else if (kind_ == TailKind::InvertedLogisticScale) {
      loc = 0.0;
      scale = psi_b_inverted(t, w);
    } else {
      loc = psi_a_impl(w, {}, 0.0);
      scale = 1.0;
    }
    M[t] = loc + scale * innovation_quantile(rng.uniform());
  }
  return M;
}

Remainder TailChainModel::finite_level_remainder(int t, std::span<const double> x, double v) const {
  if (t < k_) throw DomainError("finite_level_remainder: t must be >= k");
  if (static_cast<int>(x.size()) != k_) throw DomainError("finite_level_remainder: window must have k entries");
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("finite_level_remainder: v must be positive and finite");
  std::vector<double> xm(x.begin(), x.end()), y(k_);
  for (int i = 0; i < k_; ++i) {
    const int s = t - k_ + i;
    if (s == 0) {
      xm[i] = m0();
      y[i] = v;
    } else {
      y[i] = norming_alpha(s) * v + std::pow(v, norming_beta(s)) * xm[i];
    }
    if (kind_ != TailKind::LogisticRW && kind_ != TailKind::HuslerReissRW && !(y[i] > 0.0))
      throw DomainError("finite_level_remainder: state outside the support at this level");
  }
  const double at = kind_ == TailKind::InvertedLogisticScale ? 0.0 : norming_alpha(t) * v;
  const double bt = std::pow(v, norming_beta(t));
  const double by = kernel_b(y);
  Remainder r;
  r.r_a = (at - kernel_a(y) + bt * psi_a(t, xm)) / by;
  r.r_b = 1.0 - bt * psi_b(t, xm) / by;
  return r;
}

PathEnsemble simulate_hidden_tail_chain(const TailChainModel& model, int T, int n_rep,
                                        std::uint64_t seed, int threads) {
  if (T < model.k()) throw DomainError("simulate_hidden_tail_chain: T must be >= k");
  PathEnsemble e(n_rep, T);
  e.seed = seed;
  e.model = model.describe();
  e.norming = model.norming();
  for_each_replicate(n_rep, seed, threads, [&](int r, Rng& rng) {
    const std::vector<double> m = model.simulate(T, rng);
    std::copy(m.begin(), m.end(), e.data.begin() + static_cast<std::ptrdiff_t>(r) * e.width());
  });
  return e;
}

double lamperti_transform(double x, double beta, double b_ones) {
  if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("lamperti_transform: beta must lie in [0,1)");
  if (!(b_ones > 0.0)) throw DomainError("lamperti_transform: b(1) must be positive");
  if (beta == 0.0) return x / b_ones;
  if (x < 0.0) throw DomainError("lamperti_transform: negative input");
  return std::pow(x, 1.0 - beta) / (b_ones * (1.0 - beta));
}

double lamperti_inverse(double z, double beta, double b_ones) {
  if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("lamperti_inverse: beta must lie in [0,1)");
  if (!(b_ones > 0.0)) throw DomainError("lamperti_inverse: b(1) must be positive");
  if (beta == 0.0) return z * b_ones;
  if (z < 0.0) throw DomainError("lamperti_inverse: negative input");
  return std::pow(z * b_ones * (1.0 - beta), 1.0 / (1.0 - beta));
}

std::vector<double> lamperti_transform(std::span<const double> path, double beta, double b_ones) {
  std::vector<double> z(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) z[i] = lamperti_transform(path[i], beta, b_ones);
  return z;
}

std::vector<double> log_transform(std::span<const double> path) {
  std::vector<double> z(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!(path[i] > 0.0)) throw DomainError("log_transform: nonpositive input");
    z[i] = std::log(path[i]);
  }
  return z;
}

std::vector<double> log_inverse(std::span<const double> path) {
  std::vector<double> x(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) x[i] = std::exp(path[i]);
  return x;
}

// ---- asymmetric logistic ---------------------------------------------------

const char* alog_convention_name(AlogConvention c) {
  switch (c) {
    case AlogConvention::AsPublished: return "as-published";
    case AlogConvention::AsStated: return "as-stated";
    case AlogConvention::KernelConsistent: return "kernel-consistent";
  }
  return "?";
}

// "A/b": indicators of the previous pair, then B_t.  No commas, so CSV
// fields need no quoting.
const std::vector<std::string>& AlogTailChain::regime_labels() {
  static const std::vector<std::string> l = {"start", "init/1", "init/0", "11/1", "11/0",
                                             "10/1",  "10/0",   "01/1",   "01/0", "end"};
  return l;
}

AlogTailChain::AlogTailChain(const AlogParams& p, AlogConvention conv)
    : p_(p), conv_(conv), v3_(ExponentMeasure::asymmetric_logistic(p)) {
  p.validate();
}

namespace {

// (1 + r^{-1/nu})^{nu - 1}
double w1(double r, double nu) { return std::exp((nu - 1.0) * std::log1p(std::pow(r, -1.0 / nu))); }

// (1 + e^{-y/nu})^{nu - p}; and its inverse in y.
double logistic_pow(double y, double nu, double p) {
  return std::exp((nu - p) * std::log1p(std::exp(-y / nu)));
}
double logistic_pow_quantile(double u, double nu, double p) {
  return -nu * std::log(std::expm1(std::log(u) / (nu - p)));
}

// log of exp{-(1/nu + 1)(x0 + x1)} (e^{-x0/nu} + e^{-x1/nu})^{nu - 2}
double log_f(double x0, double x1, double nu) {
  return -(1.0 / nu + 1.0) * (x0 + x1) + (nu - 2.0) * log_add_exp(-x0 / nu, -x1 / nu);
}

}  // namespace

double AlogTailChain::m11(double x0, double x1) const {
  const double k01 = p_.th01 * (1.0 - p_.nu01) / p_.nu01;
  const double k012 = p_.th012 * (1.0 - p_.nu012) / p_.nu012;
  const double lr = std::log(k012 / k01) + log_f(x0, x1, p_.nu012) - log_f(x0, x1, p_.nu01);
  return 1.0 / (1.0 + std::exp(lr));
}
double AlogTailChain::m10() const { return p_.th0 / (p_.th0 + p_.th02); }
double AlogTailChain::m01() const { return p_.th1 / (p_.th1 + p_.th01); }
double AlogTailChain::p_b1() const {
  return conv_ == AlogConvention::AsPublished ? p_.th01 + p_.th02 : p_.th01 + p_.th012;
}

double AlogTailChain::g11_1(double y) const { return logistic_pow(y, p_.nu012, 2.0); }
double AlogTailChain::g10_1(double y) const { return logistic_pow(y, p_.nu02, 1.0); }
double AlogTailChain::g01_1(double y) const { return logistic_pow(y, p_.nu01, 1.0); }
double AlogTailChain::g11_0(double y) const { return y <= 0.0 ? 0.0 : -std::expm1(-y); }

double AlogTailChain::v_at(double y0, double y1, double y2) const {
  const double y[3] = {y0, y1, y2};
  return v3_.value(y);
}

double AlogTailChain::g10_0(double y, double x1) const {
  if (y <= 0.0) return 0.0;
  const double f1 = exp_to_frechet(x1), f2 = exp_to_frechet(y);
  const double r = f2 / f1;
  const double br = p_.th1 + p_.th01 * (1.0 + w1(r, p_.nu01)) + p_.th012 * w1(r, p_.nu012);
  const double lg = v_at(kInf, f1, kInf) - v_at(kInf, f1, f2);
  return std::min(1.0, br * std::exp(lg));
}

double AlogTailChain::g01_0(double y, double x0) const {
  if (y <= 0.0) return 0.0;
  const double f0 = exp_to_frechet(x0), f2 = exp_to_frechet(y);
  const double r = f2 / f0;
  const double br = p_.th0 + p_.th01 + p_.th02 * w1(r, p_.nu02) + p_.th012 * w1(r, p_.nu012);
  const double lg = v_at(f0, kInf, kInf) - v_at(f0, kInf, f2);
  return std::min(1.0, br * std::exp(lg));
}

double AlogTailChain::g_init(double y) const {
  const double s = p_.th01 + p_.th012;
  return (p_.th01 * logistic_pow(y, p_.nu01, 1.0) + p_.th012 * logistic_pow(y, p_.nu012, 1.0)) / s;
}

double AlogTailChain::a11(double v1, double v2) const {
  const double nu = p_.nu012;
  return -nu * log_add_exp(-v1 / nu, -v2 / nu);
}

double AlogTailChain::sample_g_raw(bool ten, double x, Rng& rng) const {
  const double u = rng.uniform();
  auto f = [&](double s) { return ten ? g10_0(std::exp(s), x) : g01_0(std::exp(s), x); };
  return std::exp(invert_monotone(f, u, -700.0, std::log(700.0), 1e-12).x);
}

AlogPath AlogTailChain::simulate(int T, Rng& rng) const {
  if (T < 1) throw DomainError("AlogTailChain::simulate: T must be >= 1");
  AlogPath P;
  P.value.assign(T + 1, -kInf);
  P.B.assign(T + 1, -1);
  P.atom.assign(T + 1, -1);
  P.regime.assign(T + 1, kEnd);
  P.value[0] = 0.0;
  P.B[0] = 1;
  P.atom[0] = 0;
  P.regime[0] = kStart;

  if (rng.bernoulli(p_b1())) {
    P.B[1] = 1;
    const double w = p_.th01 / (p_.th01 + p_.th012);
    const double nu = rng.uniform() < w ? p_.nu01 : p_.nu012;
    P.value[1] = logistic_pow_quantile(rng.uniform(), nu, 1.0);
    P.atom[1] = 0;
    P.regime[1] = kInit1;
  } else {
    P.B[1] = 0;
    P.value[1] = rng.exponential();
    P.regime[1] = kInit0;
  }

  for (int t = 2; t <= T; ++t) {
    const int b2 = P.B[t - 2], b1 = P.B[t - 1];
    const double v2 = P.value[t - 2], v1 = P.value[t - 1];
    double m;
    if (b2 == 1 && b1 == 1) m = m11(v2, v1);
    else if (b2 == 1) m = m10();
    else m = m01();
    const double p1 = conv_ == AlogConvention::KernelConsistent ? 1.0 - m : m;
    const int b = rng.bernoulli(p1) ? 1 : 0;
    P.B[t] = b;
    if (b == 1) {
      P.atom[t] = 0;
      if (b2 == 1 && b1 == 1) {
        P.value[t] = a11(v2, v1) + logistic_pow_quantile(rng.uniform(), p_.nu012, 2.0);
        P.regime[t] = k11_1;
      } else if (b2 == 1) {
        P.value[t] = v2 + logistic_pow_quantile(rng.uniform(), p_.nu02, 1.0);
        P.regime[t] = k10_1;
      } else {
        P.value[t] = v1 + logistic_pow_quantile(rng.uniform(), p_.nu01, 1.0);
        P.regime[t] = k01_1;
      }
    } else {
      P.atom[t] = -1;
      if (b2 == 1 && b1 == 1) {
        P.value[t] = rng.exponential();
        P.regime[t] = k11_0;
      } else if (b2 == 1) {
        P.value[t] = sample_g_raw(true, v1, rng);
        P.regime[t] = k10_0;
      } else {
        P.value[t] = sample_g_raw(false, v2, rng);
        P.regime[t] = k01_0;
      }
      if (b1 == 0) {
        P.TB = t;
        break;
      }
    }
  }
  return P;
}

PathEnsemble simulate_alog_tail_chain(const AlogTailChain& chain, int T, int n_rep,
                                      std::uint64_t seed, int threads, std::vector<int>* tb) {
  PathEnsemble e(n_rep, T, true);
  e.seed = seed;
  std::ostringstream os;
  os.precision(17);
  const AlogParams& p = chain.params();
  os << "alog-regime convention=" << alog_convention_name(chain.convention()) << " theta=" << p.th0
     << "," << p.th1 << "," << p.th2 << "," << p.th01 << "," << p.th02 << "," << p.th012
     << " nu=" << p.nu01 << "," << p.nu02 << "," << p.nu012;
  e.model = os.str();
  e.norming = Norming::AsymptoticDependence;
  e.regime_labels = AlogTailChain::regime_labels();
  if (tb) tb->assign(n_rep, -1);
  for_each_replicate(n_rep, seed, threads, [&](int r, Rng& rng) {
    const AlogPath P = chain.simulate(T, rng);
    const std::size_t off = static_cast<std::size_t>(r) * e.width();
    for (int t = 0; t <= T; ++t) {
      e.data[off + t] = P.value[t];
      e.atom[off + t] = P.atom[t];
      e.regime[off + t] = P.regime[t];
    }
    if (tb) (*tb)[r] = P.TB;
  });
  return e;
}

}  // namespace exc
