#include "exc/copula_kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "exc/error.hpp"

namespace exc {

namespace {

// Cheap Genz options for the Husler-Reiss hitting-scenario weights.  They only
// steer which partition is drawn, and a relative error of a few percent there
// is far below the Monte Carlo noise of any downstream statistic.
MvnOptions sampler_mvn_options() {
  MvnOptions o;
  o.abs_tol = 1e-3;
  o.min_points = 256;
  o.max_points = 256;
  o.shifts = 1;
  return o;
}

constexpr int kRejectionCap = 20000;
constexpr int kGibbsSweeps = 200;

}  // namespace

double log_partition_sum(std::span<const double> lw, int n) {
  const auto& parts = set_partitions(n);
  std::vector<double> terms;
  terms.reserve(parts.size());
  for (const auto& p : parts) {
    double s = 0.0;
    for (std::uint32_t b : p) s += lw[b];
    terms.push_back(s);
  }
  return log_sum_exp(terms);
}

MarkovModel MarkovModel::gaussian(const std::vector<double>& rho) {
  if (rho.size() < 2) throw ParameterError("Gaussian copula: need rho_0..rho_k with k >= 1");
  if (rho[0] != 1.0) throw ParameterError("Gaussian copula: rho_0 must equal 1");
  for (std::size_t i = 1; i < rho.size(); ++i)
    if (!(rho[i] > 0.0 && rho[i] < 1.0)) throw ParameterError("Gaussian copula: rho_i must lie in (0,1)");
  MarkovModel m;
  m.kind_ = KernelKind::GaussianCopula;
  m.k_ = static_cast<int>(rho.size()) - 1;
  const int d = m.k_ + 1;
  m.sigma_.resize(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m.sigma_(i, j) = rho[std::abs(i - j)];
  Eigen::LLT<Eigen::MatrixXd> llt(m.sigma_);
  if (llt.info() != Eigen::Success) throw ParameterError("Gaussian copula: Toeplitz matrix not positive definite");
  m.gcoef_.resize(d);
  m.gsd_.resize(d);
  m.gsd_[0] = 1.0;
  for (int j = 1; j < d; ++j) {
    Eigen::MatrixXd s = m.sigma_.topLeftCorner(j, j);
    Eigen::VectorXd c = m.sigma_.block(0, j, j, 1);
    Eigen::VectorXd w = s.llt().solve(c);
    m.gcoef_[j].assign(w.data(), w.data() + j);
    m.gsd_[j] = std::sqrt(1.0 - c.dot(w));
  }
  return m;
}

namespace {

void check_stationary_measure(const ExponentMeasure& e) {
  if (e.family() == Family::HuslerReiss) {
    const auto& s = e.sigma();
    const int d = e.dim();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (std::abs(s(i, j) - s(0, std::abs(i - j))) > 1e-12)
          throw ParameterError("Husler-Reiss kernel: sigma must be Toeplitz for a stationary chain");
  }
}

}  // namespace

MarkovModel MarkovModel::max_stable(const ExponentMeasure& e, int max_order) {
  if (e.dim() < 2) throw ParameterError("max-stable kernel: measure dimension must be >= 2");
  const int k = e.dim() - 1;
  if (k > max_order) throw ParameterError("max-stable kernel: order exceeds max_order");
  if (e.family() != Family::Logistic && k > kMaxPartitionSize)
    throw ParameterError("max-stable kernel: order too large for partition enumeration");
  check_stationary_measure(e);
  MarkovModel m;
  m.kind_ = e.family() == Family::AsymmetricLogistic ? KernelKind::AsymLogistic : KernelKind::MaxStable;
  m.k_ = k;
  if (e.family() == Family::HuslerReiss) m.sigma_ = e.sigma();
  for (int j = 0; j <= k; ++j) m.margins_.push_back(e.marginal((2u << j) - 1u));
  if (e.family() == Family::Logistic) {
    // log a_{n,m}: sum over partitions of {0..n-1} into m blocks of
    // prod c_{|J|}, built by placing the last element in a block of size s.
    const double a = e.alpha();
    std::vector<double> lc(k + 1, 0.0);
    for (int s = 2; s <= k; ++s) lc[s] = lc[s - 1] + std::log((s - 1 - a) / a);
    std::vector<std::vector<double>> la(k + 1, std::vector<double>(k + 1, -kInf));
    la[0][0] = 0.0;
    for (int n = 1; n <= k; ++n)
      for (int mm = 1; mm <= n; ++mm) {
        std::vector<double> t;
        for (int s = 1; s <= n - mm + 1; ++s) {
          if (la[n - s][mm - 1] == -kInf) continue;
          const double lbin = std::lgamma(n) - std::lgamma(s) - std::lgamma(n - s + 1);
          t.push_back(lbin + lc[s] + la[n - s][mm - 1]);
        }
        la[n][mm] = log_sum_exp(t);
      }
    m.log_block_coef_ = std::move(la);
  }
  return m;
}

MarkovModel MarkovModel::inverted_max_stable(const ExponentMeasure& e, int max_order) {
  MarkovModel m = max_stable(e, max_order);
  m.kind_ = KernelKind::InvertedMaxStable;
  return m;
}

MarkovModel MarkovModel::asym_logistic(const AlogParams& p) {
  return max_stable(ExponentMeasure::asymmetric_logistic(p));
}

const ExponentMeasure& MarkovModel::measure() const {
  if (margins_.empty()) throw DomainError("Gaussian copula model has no exponent measure");
  return margins_.back();
}

bool MarkovModel::is_husler_reiss() const {
  return !margins_.empty() && margins_.back().family() == Family::HuslerReiss;
}

std::string MarkovModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case KernelKind::GaussianCopula: os << "gaussian"; break;
    case KernelKind::MaxStable: os << "max-stable"; break;
    case KernelKind::InvertedMaxStable: os << "inverted-max-stable"; break;
    case KernelKind::AsymLogistic: os << "asymmetric-logistic"; break;
  }
  if (kind_ != KernelKind::GaussianCopula) {
    switch (measure().family()) {
      case Family::Logistic: os << "/logistic(alpha=" << measure().alpha() << ")"; break;
      case Family::HuslerReiss: os << "/husler-reiss"; break;
      case Family::AsymmetricLogistic: break;
    }
  }
  os << " k=" << k_;
  return os.str();
}

// log P(Y_j <= yk | Y_{0:j-1} = yprev) for the max-stable vector Y_{0:j}:
//   N(yprev, yk)/N(yprev, inf) * exp(V(yprev, inf) - V(yprev, yk)),
// N the partition sum of prod -V_J over partitions of {0..j-1}.
double MarkovModel::ms_log_cdf(std::span<const double> yprev, double yk) const {
  const int j = static_cast<int>(yprev.size());
  if (j == 0) return -1.0 / yk;
  if (!log_block_coef_.empty()) return ms_log_cdf_logistic(yprev, yk);
  const ExponentMeasure& mj = margins_[j];
  std::vector<double> yf(yprev.begin(), yprev.end());
  yf.push_back(yk);
  std::vector<double> yi(yprev.begin(), yprev.end());
  yi.push_back(kInf);
  const std::uint32_t full = (1u << j) - 1u;
  std::vector<double> num(full + 1, -kInf), den(full + 1, -kInf);
  for (std::uint32_t J = 1; J <= full; ++J) {
    num[J] = mj.log_neg_partial(J, yf);
    den[J] = mj.log_neg_partial(J, yi);
  }
  const double out = log_partition_sum(num, j) - log_partition_sum(den, j) +
                     margins_[j - 1].value(yprev) - mj.value(yf);
  if (std::isnan(out)) throw NumericalError("kernel: partition sum failed in log space");
  return out;
}

// Logistic: prod_{J in p} -V_J depends on y only through S = sum y^{-1/a} and
// the block count m, so N = prod y_i^{-1/a-1} sum_m a_{j,m} S^{m a - j}.
double MarkovModel::ms_log_cdf_logistic(std::span<const double> yprev, double yk) const {
  const int j = static_cast<int>(yprev.size());
  const double a = measure().alpha();
  std::vector<double> lt(j);
  for (int i = 0; i < j; ++i) lt[i] = -std::log(yprev[i]) / a;
  const double ls0 = log_sum_exp(lt);
  double dls;  // log S_full - log S_prev
  if (yk == kInf) {
    dls = 0.0;
  } else {
    const double r = -std::log(yk) / a - ls0;
    dls = r < 0.0 ? std::log1p(std::exp(r)) : r + std::log1p(std::exp(-r));
  }
  const double ls1 = ls0 + dls;
  std::vector<double> t0, t1;
  for (int mm = 1; mm <= j; ++mm) {
    const double la = log_block_coef_[j][mm];
    t0.push_back(la + (mm * a - j) * ls0);
    t1.push_back(la + (mm * a - j) * ls1);
  }
  const double dv = std::exp(a * ls0) * std::expm1(a * dls);
  const double out = log_sum_exp(t1) - log_sum_exp(t0) - dv;
  if (std::isnan(out)) throw NumericalError("kernel: logistic partition sum failed in log space");
  return out;
}

double MarkovModel::conditional_cdf(std::span<const double> prev, double x) const {
  const int j = static_cast<int>(prev.size());
  if (j > k_) throw DomainError("conditional_cdf: too many conditioning values");
  for (double v : prev)
    if (!std::isfinite(v)) throw DomainError("conditional_cdf: state must be finite");
  if (std::isnan(x)) throw DomainError("conditional_cdf: x is NaN");
  if (x <= 0.0) return 0.0;
  if (x == kInf) return 1.0;
  if (kind_ == KernelKind::GaussianCopula) {
    double mu = 0.0;
    for (int t = 0; t < j; ++t) mu += gcoef_[j][t] * exp_to_gauss(prev[t]);
    return norm_cdf((exp_to_gauss(x) - mu) / gsd_[j]);
  }
  for (double v : prev)
    if (!(v > 0.0)) throw DomainError("conditional_cdf: state must be in (0, inf) for this kernel");
  std::vector<double> yp(j);
  if (kind_ == KernelKind::InvertedMaxStable) {
    for (int i = 0; i < j; ++i) yp[i] = 1.0 / prev[i];
    // X = 1/Y componentwise is unit exponential; {X_j <= x} = {Y_j >= 1/x}.
    return std::clamp(-std::expm1(ms_log_cdf(yp, 1.0 / x)), 0.0, 1.0);
  }
  for (int i = 0; i < j; ++i) yp[i] = exp_to_frechet(prev[i]);
  return std::min(1.0, std::exp(ms_log_cdf(yp, exp_to_frechet(x))));
}

double MarkovModel::kernel_cdf(std::span<const double> state, double x) const {
  if (static_cast<int>(state.size()) != k_) throw DomainError("kernel_cdf: state must have k values");
  return conditional_cdf(state, x);
}

double MarkovModel::conditional_quantile(std::span<const double> prev, double p) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("conditional_quantile: p must lie in (0,1)");
  const int j = static_cast<int>(prev.size());
  if (kind_ == KernelKind::GaussianCopula) {
    double mu = 0.0;
    for (int t = 0; t < j; ++t) mu += gcoef_[j][t] * exp_to_gauss(prev[t]);
    return gauss_to_exp(mu + gsd_[j] * norm_quantile(p));
  }
  if (j == 0) return uniform_to_exp(p);
  auto f = [&](double x) { return conditional_cdf(prev, x); };
  return invert_monotone(f, p, kInversionLo, kInversionHi, 1e-10).x;
}

double MarkovModel::conditional_sample(std::span<const double> prev, Rng& rng,
                                       SamplerMethod method) const {
  const int j = static_cast<int>(prev.size());
  if (j > k_) throw DomainError("conditional_sample: too many conditioning values");
  if (method == SamplerMethod::Auto && j > 0 && is_husler_reiss()) {
    for (double v : prev)
      if (!(v > 0.0 && std::isfinite(v))) throw DomainError("conditional_sample: state must be in (0, inf)");
    std::vector<double> yp(j);
    if (kind_ == KernelKind::InvertedMaxStable) {
      for (int i = 0; i < j; ++i) yp[i] = 1.0 / prev[i];
      return 1.0 / hr_exact_sample(yp, rng);
    }
    for (int i = 0; i < j; ++i) yp[i] = exp_to_frechet(prev[i]);
    return frechet_to_exp(hr_exact_sample(yp, rng));
  }
  return conditional_quantile(prev, rng.uniform());
}

double MarkovModel::kernel_sample(std::span<const double> state, Rng& rng, SamplerMethod method) const {
  if (static_cast<int>(state.size()) != k_) throw DomainError("kernel_sample: state must have k values");
  return conditional_sample(state, rng, method);
}

namespace {

// Draw from N(mu, S) truncated to x_a < ub_a for a < nc (the first nc
// coordinates); the rest are free.  Rejection first, Gibbs on the truncated
// block when acceptance is too rare.
Eigen::VectorXd truncated_gaussian(const Eigen::VectorXd& mu, const Eigen::MatrixXd& s,
                                   const Eigen::VectorXd& ub, Rng& rng) {
  const int n = static_cast<int>(mu.size());
  const int nc = static_cast<int>(ub.size());
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError("hitting-scenario sampler: conditional covariance not PD");
  Eigen::MatrixXd L = llt.matrixL();
  Eigen::VectorXd z(n), x(n);
  // L is lower triangular, so x_a only needs z_0..z_a and a draw can be
  // dropped at the first violated bound.
  for (int it = 0; it < kRejectionCap; ++it) {
    int a = 0;
    for (; a < n; ++a) {
      z(a) = rng.normal();
      double v = mu(a);
      for (int b = 0; b <= a; ++b) v += L(a, b) * z(b);
      x(a) = v;
      if (a < nc && !(v < ub(a))) break;
    }
    if (a == n) return x;
  }
  // Gibbs on the constrained block, then the free block from its conditional.
  Eigen::MatrixXd scc = s.topLeftCorner(nc, nc);
  Eigen::MatrixXd prec = scc.inverse();
  Eigen::VectorXd xc(nc);
  for (int a = 0; a < nc; ++a) xc(a) = std::min(mu(a), ub(a) - std::sqrt(scc(a, a)));
  for (int sweep = 0; sweep < kGibbsSweeps; ++sweep)
    for (int a = 0; a < nc; ++a) {
      double m = mu(a);
      for (int b = 0; b < nc; ++b)
        if (b != a) m -= prec(a, b) / prec(a, a) * (xc(b) - mu(b));
      const double sd = 1.0 / std::sqrt(prec(a, a));
      const double beta = (ub(a) - m) / sd;
      const double lp = log_norm_cdf(beta) + std::log(rng.uniform());
      double zq;
      if (lp > -700.0) {
        zq = norm_quantile(std::exp(lp));
      } else {
        // Far lower tail: invert log Phi(z) ~ log phi(z) - log(-z).
        zq = beta;
        for (int nt = 0; nt < 30; ++nt) zq -= (log_norm_cdf(zq) - lp) / (1.0 / mills_ratio(-zq));
      }
      xc(a) = std::min(m + sd * zq, std::nextafter(ub(a), -kInf));
    }
  x.head(nc) = xc;
  if (n > nc) {
    const int nf = n - nc;
    Eigen::MatrixXd sfc = s.bottomLeftCorner(nf, nc);
    Eigen::MatrixXd kk = sfc * prec;
    Eigen::VectorXd mf = mu.tail(nf) + kk * (xc - mu.head(nc));
    Eigen::MatrixXd sf = s.bottomRightCorner(nf, nf) - kk * sfc.transpose();
    sf = 0.5 * (sf + sf.transpose());
    Eigen::MatrixXd Lf = sf.llt().matrixL();
    Eigen::VectorXd zf(nf);
    for (int a = 0; a < nf; ++a) zf(a) = rng.normal();
    x.tail(nf) = mf + Lf * zf;
  }
  return x;
}

}  // namespace

// Exact draw of Y_j given Y_{0:j-1} = yprev for a Husler-Reiss vector in unit
// Frechet margins (hitting-scenario construction of the conditional law of a
// max-stable vector).  The conditioning values are attained by one extremal
// function per block of a random partition; the remaining atoms of the
// Poisson process are those lying below yprev everywhere.
double MarkovModel::hr_exact_sample(std::span<const double> yprev, Rng& rng) const {
  const int j = static_cast<int>(yprev.size());
  const ExponentMeasure wm = margins_[j - 1].with_mvn_options(sampler_mvn_options());
  const std::uint32_t full = (1u << j) - 1u;
  std::vector<double> lw(full + 1, -kInf);
  for (std::uint32_t J = 1; J <= full; ++J) lw[J] = wm.log_neg_partial(J, yprev);

  const auto& parts = set_partitions(j);
  std::vector<double> lp(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) {
    double s = 0.0;
    for (std::uint32_t b : parts[p]) s += lw[b];
    lp[p] = s;
  }
  const double lmax = *std::max_element(lp.begin(), lp.end());
  if (!std::isfinite(lmax)) throw NumericalError("hitting-scenario sampler: all partition weights vanish");
  double tot = 0.0;
  for (double& v : lp) tot += (v = std::exp(v - lmax));
  double uu = rng.uniform() * tot;
  std::size_t pick = 0;
  for (; pick + 1 < parts.size(); ++pick) {
    uu -= lp[pick];
    if (uu <= 0.0) break;
  }

  double best = 0.0;
  for (std::uint32_t J : parts[pick]) {
    const int r = std::countr_zero(J);
    // Tilted Gaussian at r over every other coordinate 0..j, ordered as
    // (constrained C, free j, conditioning J \ {r}).
    std::vector<int> cset, jset;
    for (int i = 0; i < j; ++i) {
      if (i == r) continue;
      ((J >> i & 1u) ? jset : cset).push_back(i);
    }
    std::vector<int> order = cset;
    order.push_back(j);
    order.insert(order.end(), jset.begin(), jset.end());
    TiltedGaussian g = hr_tilted(sigma_, r, order);
    const int nr = static_cast<int>(cset.size()) + 1;
    const int nj = static_cast<int>(jset.size());
    Eigen::VectorXd mu = g.mean.head(nr);
    Eigen::MatrixXd s = g.cov.topLeftCorner(nr, nr);
    if (nj > 0) {
      Eigen::VectorXd dj(nj);
      for (int a = 0; a < nj; ++a) dj(a) = std::log(yprev[jset[a]] / yprev[r]);
      Eigen::MatrixXd sjj = g.cov.bottomRightCorner(nj, nj);
      Eigen::MatrixXd srj = g.cov.topRightCorner(nr, nj);
      Eigen::MatrixXd kk = sjj.llt().solve(srj.transpose()).transpose();
      mu += kk * (dj - g.mean.tail(nj));
      s -= kk * srj.transpose();
      s = 0.5 * (s + s.transpose());
    }
    Eigen::VectorXd ub(nr - 1);
    for (int a = 0; a + 1 < nr; ++a) ub(a) = std::log(yprev[cset[a]] / yprev[r]);
    Eigen::VectorXd d = truncated_gaussian(mu, s, ub, rng);
    best = std::max(best, yprev[r] * std::exp(d(nr - 1)));
  }

  // Remaining atoms: zeta * Y with Y the extremal function tilted at j
  // (Y_j = 1), zeta the points of a unit-rate process on (0, inf) with
  // intensity zeta^{-2}, generated in decreasing order as 1/Gamma_n.
  std::vector<int> prev_idx(j);
  for (int i = 0; i < j; ++i) prev_idx[i] = i;
  TiltedGaussian g = hr_tilted(sigma_, j, prev_idx);
  Eigen::MatrixXd L = g.cov.llt().matrixL();
  Eigen::VectorXd z(j);
  double gamma = 0.0;
  for (;;) {
    gamma += rng.exponential();
    const double zeta = 1.0 / gamma;
    if (zeta <= best) break;
    for (int a = 0; a < j; ++a) z(a) = rng.normal();
    Eigen::VectorXd w = g.mean + L * z;
    bool below = true;
    for (int a = 0; a < j && below; ++a) below = std::log(zeta) + w(a) < std::log(yprev[a]);
    if (below) {
      best = zeta;
      break;
    }
  }
  return best;
}

std::vector<double> MarkovModel::sample_initial_conditioned(double u, Rng& rng, SamplerMethod method) const {
  if (!(u >= 0.0)) throw DomainError("sample_initial_conditioned: u must be >= 0");
  std::vector<double> x;
  x.reserve(k_);
  x.push_back(u + rng.exponential());
  for (int j = 1; j < k_; ++j) x.push_back(conditional_sample(x, rng, method));
  return x;
}

std::vector<double> MarkovModel::simulate_conditioned_chain(double u, int T, Rng& rng,
                                                            SamplerMethod method) const {
  if (T < k_) throw DomainError("simulate_conditioned_chain: T must be >= k");
  std::vector<double> path = sample_initial_conditioned(u, rng, method);
  path.reserve(T + 1);
  for (int t = k_; t <= T; ++t)
    path.push_back(kernel_sample(std::span<const double>(path.data() + t - k_, k_), rng, method));
  return path;
}

std::vector<double> MarkovModel::simulate_stationary_chain(int T, Rng& rng, int burn_in,
                                                           SamplerMethod method) const {
  if (T < 0 || burn_in < 0) throw DomainError("simulate_stationary_chain: negative length");
  // u = 0 makes X_0 an ordinary unit exponential, so the initial block is a
  // draw from the stationary k-dimensional margin.
  std::vector<double> win = sample_initial_conditioned(0.0, rng, method);
  std::vector<double> out;
  out.reserve(T + 1);
  const long total = static_cast<long>(burn_in) + T + 1;
  std::vector<double> path = win;
  for (long t = k_; t < total; ++t) {
    path.push_back(kernel_sample(std::span<const double>(path.data() + path.size() - k_, k_), rng, method));
    if (path.size() > static_cast<std::size_t>(4 * k_ + 64)) path.erase(path.begin(), path.end() - k_);
    if (t >= burn_in) out.push_back(path.back());
  }
  // Initial block counts toward the output when burn-in is shorter than k.
  if (burn_in < k_) {
    std::vector<double> head(win.begin() + burn_in, win.end());
    out.insert(out.begin(), head.begin(), head.end());
  }
  out.resize(T + 1);
  return out;
}

}  // namespace exc
