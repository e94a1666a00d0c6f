#include "exc/extremal_measures.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "exc/error.hpp"

namespace exc {

namespace {

void check_positive(std::span<const double> y) {
  for (double v : y)
    if (!(v > 0.0)) throw DomainError("exponent measure: coordinates must be positive");
}

// log of prod_{j=1}^{m-1} (j - nu)/nu, the coefficient of -d^m/dy^m of a
// logistic term.
double log_logistic_coef(int m, double nu) {
  double s = 0.0;
  for (int j = 1; j < m; ++j) s += std::log((j - nu) / nu);
  return s;
}

// log sum_{i in A, y_i finite} y_i^{-1/nu}; -inf when every coordinate is removed.
double log_term_sum(std::uint32_t subset, double nu, std::span<const double> y) {
  double m = -kInf;
  double buf[32];
  int n = 0;
  for (int i = 0; i < static_cast<int>(y.size()); ++i) {
    if (!(subset >> i & 1u) || y[i] == kInf) continue;
    buf[n] = -std::log(y[i]) / nu;
    m = std::max(m, buf[n]);
    ++n;
  }
  if (n == 0) return -kInf;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(buf[i] - m);
  return m + std::log(s);
}

std::vector<int> bits_of(std::uint32_t mask) {
  std::vector<int> out;
  for (int i = 0; mask; ++i, mask >>= 1)
    if (mask & 1u) out.push_back(i);
  return out;
}

}  // namespace

void AlogParams::validate() const {
  for (double t : {th0, th1, th2, th01, th02, th012})
    if (!(t > 0.0)) throw ParameterError("asymmetric logistic: theta must be positive");
  for (double n : {nu01, nu02, nu012})
    if (!(n > 0.0 && n < 1.0)) throw ParameterError("asymmetric logistic: nu must lie in (0,1)");
  const double c0 = th0 + th01 + th02 + th012;
  const double c1 = th1 + 2.0 * th01 + th012;
  const double c2 = th2 + th01 + th02 + th012;
  if (std::abs(c0 - 1.0) > 1e-12 || std::abs(c1 - 1.0) > 1e-12 || std::abs(c2 - 1.0) > 1e-12)
    throw ParameterError("asymmetric logistic: margin constraints violated (sums " +
                         std::to_string(c0) + ", " + std::to_string(c1) + ", " +
                         std::to_string(c2) + ")");
}

ExponentMeasure ExponentMeasure::logistic(int dim, double alpha) {
  if (dim < 1 || dim > 31) throw ParameterError("logistic: dim out of range");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("logistic: alpha must lie in (0,1]");
  ExponentMeasure m;
  m.family_ = Family::Logistic;
  m.dim_ = dim;
  m.alpha_ = alpha;
  m.terms_.push_back({(1u << dim) - 1u, 1.0, dim == 1 ? 1.0 : alpha});
  return m;
}

ExponentMeasure ExponentMeasure::asymmetric_logistic(const AlogParams& p) {
  p.validate();
  ExponentMeasure m;
  m.family_ = Family::AsymmetricLogistic;
  m.dim_ = 3;
  m.alog_ = p;
  m.terms_ = {{0b001, p.th0, 1.0},      {0b010, p.th1, 1.0},    {0b100, p.th2, 1.0},
              {0b011, p.th01, p.nu01},  {0b110, p.th01, p.nu01}, {0b101, p.th02, p.nu02},
              {0b111, p.th012, p.nu012}};
  return m;
}

ExponentMeasure ExponentMeasure::husler_reiss(const Eigen::MatrixXd& sigma, const MvnOptions& opt) {
  const int d = static_cast<int>(sigma.rows());
  if (d < 1 || sigma.cols() != d) throw ParameterError("Husler-Reiss: sigma must be square");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ParameterError("Husler-Reiss: sigma must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw ParameterError("Husler-Reiss: sigma not positive definite");
  for (int i = 1; i < d; ++i)
    if (std::abs(sigma(i, i) - sigma(0, 0)) > 1e-12)
      throw ParameterError("Husler-Reiss: sigma must have a common diagonal");
  ExponentMeasure m;
  m.family_ = Family::HuslerReiss;
  m.dim_ = d;
  m.sigma_ = sigma;
  m.mvn_ = opt;
  return m;
}

ExponentMeasure ExponentMeasure::with_mvn_options(const MvnOptions& opt) const {
  ExponentMeasure m = *this;
  m.mvn_ = opt;
  return m;
}

double ExponentMeasure::value(std::span<const double> y) const {
  if (static_cast<int>(y.size()) != dim_) throw DomainError("exponent measure: wrong dimension");
  check_positive(y);
  if (family_ == Family::HuslerReiss) return hr_value(y);
  double v = 0.0;
  for (const auto& t : terms_) {
    double ls = log_term_sum(t.subset, t.nu, y);
    if (ls != -kInf) v += t.theta * std::exp(t.nu * ls);
  }
  return v;
}

double ExponentMeasure::log_neg_partial(std::uint32_t J, std::span<const double> y) const {
  if (static_cast<int>(y.size()) != dim_) throw DomainError("exponent measure: wrong dimension");
  if (J == 0 || (J >> dim_) != 0) throw DomainError("v_partial: index set out of range");
  check_positive(y);
  for (int i = 0; i < dim_; ++i)
    if ((J >> i & 1u) && y[i] == kInf) return -kInf;
  if (family_ == Family::HuslerReiss) return hr_log_neg_partial(J, y);

  const int m = std::popcount(J);
  double sum_log_y = 0.0;
  for (int i = 0; i < dim_; ++i)
    if (J >> i & 1u) sum_log_y += std::log(y[i]);
  double buf[64];
  int n = 0;
  for (const auto& t : terms_) {
    if ((J & t.subset) != J) continue;
    if (t.nu == 1.0 && m > 1) continue;  // linear in each coordinate
    double ls = log_term_sum(t.subset, t.nu, y);
    buf[n++] = std::log(t.theta) + log_logistic_coef(m, t.nu) + (t.nu - m) * ls -
               (1.0 / t.nu + 1.0) * sum_log_y;
  }
  return log_sum_exp(std::span<const double>(buf, n));
}

double ExponentMeasure::partial(std::uint32_t J, std::span<const double> y) const {
  return -std::exp(log_neg_partial(J, y));
}

ExponentMeasure ExponentMeasure::marginal(std::uint32_t keep) const {
  std::vector<int> idx = bits_of(keep);
  if (idx.empty() || idx.back() >= dim_) throw DomainError("marginal: bad index set");
  const int d = static_cast<int>(idx.size());
  if (family_ == Family::Logistic) return logistic(d, alpha_);
  if (family_ == Family::HuslerReiss) {
    Eigen::MatrixXd s(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) s(i, j) = sigma_(idx[i], idx[j]);
    return husler_reiss(s, mvn_);
  }
  ExponentMeasure m;
  m.family_ = family_;
  m.dim_ = d;
  m.alog_ = alog_;
  // Terms restricted to the kept coordinates; a term that loses coordinates
  // keeps its logistic form on the survivors, one that loses all vanishes.
  for (const auto& t : terms_) {
    std::uint32_t sub = 0;
    for (int i = 0; i < d; ++i)
      if (t.subset >> idx[i] & 1u) sub |= 1u << i;
    if (sub == 0) continue;
    m.terms_.push_back({sub, t.theta, std::popcount(sub) == 1 ? 1.0 : t.nu});
  }
  return m;
}

TiltedGaussian hr_tilted(const Eigen::MatrixXd& sigma, int r, std::span<const int> others) {
  TiltedGaussian g;
  g.idx.assign(others.begin(), others.end());
  const int n = static_cast<int>(others.size());
  g.mean.resize(n);
  g.cov.resize(n, n);
  for (int a = 0; a < n; ++a) {
    const int j = others[a];
    g.mean(a) = sigma(j, r) - 0.5 * sigma(j, j) - 0.5 * sigma(r, r);
    for (int b = 0; b < n; ++b) {
      const int l = others[b];
      g.cov(a, b) = sigma(j, l) - sigma(j, r) - sigma(l, r) + sigma(r, r);
    }
  }
  return g;
}

double ExponentMeasure::hr_value(std::span<const double> y) const {
  std::vector<int> fin;
  for (int i = 0; i < dim_; ++i)
    if (y[i] != kInf) fin.push_back(i);
  if (fin.empty()) return 0.0;
  if (fin.size() == 1) return 1.0 / y[fin[0]];
  double v = 0.0;
  std::vector<int> others;
  for (int i : fin) {
    others.clear();
    for (int j : fin)
      if (j != i) others.push_back(j);
    TiltedGaussian g = hr_tilted(sigma_, i, others);
    Eigen::VectorXd b(others.size());
    for (std::size_t a = 0; a < others.size(); ++a)
      b(a) = std::log(y[others[a]] / y[i]) - g.mean(a);
    v += mvn_cdf(b, g.cov, mvn_).value / y[i];
  }
  return v;
}

// -V_J(y) = y_r^{-1} prod_{i in J} y_i^{-1} * phi(d_J' - mu_J'; S_J'J')
//           * Phi(d_C - mu_{C|J'}; S_{C|J'}),
// with r = min J, d_j = log(y_j/y_r), (mu, S) the tilted Gaussian at r,
// J' = J \ {r} and C the finite coordinates outside J.
double ExponentMeasure::hr_log_neg_partial(std::uint32_t J, std::span<const double> y) const {
  const int r = std::countr_zero(J);
  std::vector<int> others;
  for (int i = 0; i < dim_; ++i) {
    if (i == r || y[i] == kInf) continue;
    others.push_back(i);
  }
  TiltedGaussian g = hr_tilted(sigma_, r, others);
  std::vector<int> pos_j, pos_c;
  for (std::size_t a = 0; a < others.size(); ++a)
    ((J >> others[a] & 1u) ? pos_j : pos_c).push_back(static_cast<int>(a));

  double out = -std::log(y[r]);
  for (int i = 0; i < dim_; ++i)
    if (J >> i & 1u) out -= std::log(y[i]);

  Eigen::VectorXd d(others.size());
  for (std::size_t a = 0; a < others.size(); ++a) d(a) = std::log(y[others[a]] / y[r]);

  const int nj = static_cast<int>(pos_j.size()), nc = static_cast<int>(pos_c.size());
  Eigen::VectorXd dj(nj), mj(nj), dc(nc), mc(nc);
  Eigen::MatrixXd sjj(nj, nj), scj(nc, nj), scc(nc, nc);
  for (int a = 0; a < nj; ++a) {
    dj(a) = d(pos_j[a]);
    mj(a) = g.mean(pos_j[a]);
    for (int b = 0; b < nj; ++b) sjj(a, b) = g.cov(pos_j[a], pos_j[b]);
  }
  for (int a = 0; a < nc; ++a) {
    dc(a) = d(pos_c[a]);
    mc(a) = g.mean(pos_c[a]);
    for (int b = 0; b < nj; ++b) scj(a, b) = g.cov(pos_c[a], pos_j[b]);
    for (int b = 0; b < nc; ++b) scc(a, b) = g.cov(pos_c[a], pos_c[b]);
  }
  if (nj > 0) out += mvn_log_pdf(dj, mj, sjj);
  if (nc > 0) {
    Eigen::VectorXd mu = mc;
    Eigen::MatrixXd s = scc;
    if (nj > 0) {
      Eigen::LLT<Eigen::MatrixXd> llt(sjj);
      Eigen::MatrixXd k = llt.solve(scj.transpose()).transpose();
      mu += k * (dj - mj);
      s -= k * scj.transpose();
      s = 0.5 * (s + s.transpose());
    }
    double p = mvn_cdf(dc - mu, s, mvn_).value;
    out += p > 0.0 ? std::log(p) : -kInf;
  }
  return out;
}

double v_logistic(std::span<const double> y, double alpha) {
  return ExponentMeasure::logistic(static_cast<int>(y.size()), alpha).value(y);
}

double v_husler_reiss(std::span<const double> y, const Eigen::MatrixXd& sigma, const MvnOptions& opt) {
  return ExponentMeasure::husler_reiss(sigma, opt).value(y);
}

double v_asym_logistic(std::span<const double> y, const AlogParams& p) {
  if (y.size() != 3) throw DomainError("v_asym_logistic: y must have 3 coordinates");
  return ExponentMeasure::asymmetric_logistic(p).value(y);
}

namespace {
std::uint32_t mask_of(std::span<const int> J, int dim) {
  if (static_cast<int>(J.size()) > dim) throw DomainError("v_partial: |J| exceeds dimension");
  std::uint32_t mask = 0;
  for (int j : J) {
    if (j < 0 || j >= dim) throw DomainError("v_partial: index out of range");
    if (mask >> j & 1u) throw DomainError("v_partial: repeated index");
    mask |= 1u << j;
  }
  return mask;
}
}  // namespace

double v_partial(const ExponentMeasure& m, std::span<const int> J, std::span<const double> y) {
  return m.partial(mask_of(J, m.dim()), y);
}

double v_partial_fd(const ExponentMeasure& m, std::span<const int> J, std::span<const double> y) {
  mask_of(J, m.dim());
  const int k = static_cast<int>(J.size());
  const double step = std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (k + 2));
  std::vector<double> h(k), z(y.begin(), y.end());
  double denom = 1.0;
  for (int a = 0; a < k; ++a) {
    h[a] = step * y[J[a]];
    denom *= 2.0 * h[a];
  }
  double acc = 0.0;
  for (std::uint32_t s = 0; s < (1u << k); ++s) {
    int sign = 1;
    for (int a = 0; a < k; ++a) {
      const bool plus = s >> a & 1u;
      z[J[a]] = y[J[a]] + (plus ? h[a] : -h[a]);
      if (!plus) sign = -sign;
    }
    acc += sign * m.value(z);
  }
  return acc / denom;
}

}  // namespace exc
