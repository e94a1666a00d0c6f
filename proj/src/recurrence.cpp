#include "exc/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "exc/error.hpp"
#include "exc/numerics.hpp"

namespace exc {

using cd = std::complex<double>;

void HomogeneousFamily::validate() const {
  if (gamma.empty()) throw ParameterError("HomogeneousFamily: gamma must be nonempty");
  if (!(c > 0.0) || !std::isfinite(c)) throw ParameterError("HomogeneousFamily: c must be positive and finite");
  double s = 0.0;
  for (double g : gamma) {
    if (!(g > 0.0)) throw ParameterError("HomogeneousFamily: gamma_i must be positive");
    s += g;
  }
  if (std::abs(s - 1.0) > 1e-12) throw ParameterError("HomogeneousFamily: gamma must sum to 1");
  if (std::isnan(delta)) throw ParameterError("HomogeneousFamily: delta is NaN");
}

double HomogeneousFamily::entropy() const {
  double s = 0.0;
  for (double g : gamma) s -= g * std::log(g);
  return s;
}

double HomogeneousFamily::operator()(std::span<const double> x) const {
  const int n = k();
  if (static_cast<int>(x.size()) != n) throw DomainError("HomogeneousFamily: wrong number of arguments");
  for (double v : x)
    if (!(v > 0.0)) throw DomainError("HomogeneousFamily: arguments must be positive");
  if (delta == kInf || delta == -kInf) {
    double best = gamma[0] * x[0];
    for (int i = 1; i < n; ++i) {
      const double v = gamma[i] * x[i];
      best = delta > 0 ? std::max(best, v) : std::min(best, v);
    }
    return c * best;
  }
  if (delta == 0.0) {
    double s = std::log(c) - entropy();
    for (int i = 0; i < n; ++i) s += gamma[i] * std::log(x[i]);
    return std::exp(s);
  }
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) {
    const double lg = std::log(gamma[i]);
    t[i] = lg + delta * (lg + std::log(x[i]));
  }
  return std::exp(std::log(c) + log_sum_exp(t) / delta);
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::GeneralDelta: return "general";
    case Regime::DeltaZero: return "delta_zero";
    case Regime::DeltaPlusInf: return "delta_plus_inf";
    case Regime::DeltaMinusInf: return "delta_minus_inf";
  }
  return "?";
}

void validate_alpha_init(std::span<const double> init, int k) {
  if (k < 1) throw DomainError("recurrence: k must be >= 1");
  if (static_cast<int>(init.size()) != k - 1)
    throw DomainError("recurrence: need k-1 initial values alpha_1..alpha_{k-1}");
  for (double a : init)
    if (!(a > 0.0 && a < 1.0)) throw DomainError("recurrence: initial alpha_t must lie in (0,1)");
}

std::vector<double> iterate_alpha(const Functional& a, int k, std::span<const double> init, int T) {
  validate_alpha_init(init, k);
  if (T < 0) throw DomainError("iterate_alpha: T must be >= 0");
  std::vector<double> out{1.0};
  out.insert(out.end(), init.begin(), init.end());
  for (int t = k; t <= T; ++t) {
    const double v = a(std::span<const double>(out.data() + t - k, k));
    if (!(v > 0.0) || !std::isfinite(v))
      throw NumericalError("iterate_alpha: nonpositive or non-finite alpha_" + std::to_string(t));
    out.push_back(v);
  }
  out.resize(T + 1);
  return out;
}

std::vector<cd> companion_roots(std::span<const double> lag_coef) {
  const int k = static_cast<int>(lag_coef.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
  for (int l = 0; l < k; ++l) m(0, l) = lag_coef[l];
  for (int i = 1; i < k; ++i) m(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("companion_roots: eigenvalue iteration failed");
  std::vector<cd> r(k);
  for (int i = 0; i < k; ++i) r[i] = es.eigenvalues()(i);
  return r;
}

namespace {

bool close(cd a, cd b, double tol) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

std::vector<std::vector<int>> single_linkage(std::span<const cd> r, double tol) {
  const int n = static_cast<int>(r.size());
  std::vector<int> lab(n);
  std::iota(lab.begin(), lab.end(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (lab[j] < lab[i] && close(r[i], r[j], tol)) {
          lab[i] = lab[j];
          changed = true;
        }
  }
  std::vector<std::vector<int>> g;
  for (int l = 0; l < n; ++l) {
    std::vector<int> m;
    for (int i = 0; i < n; ++i)
      if (lab[i] == l) m.push_back(i);
    if (!m.empty()) g.push_back(m);
  }
  return g;
}

// Greedy complete linkage: a root joins the first group all of whose
// members are within tol.
std::vector<std::vector<int>> complete_linkage(std::span<const cd> r, double tol) {
  std::vector<std::vector<int>> g;
  for (int i = 0; i < static_cast<int>(r.size()); ++i) {
    bool placed = false;
    for (auto& grp : g) {
      if (std::all_of(grp.begin(), grp.end(), [&](int j) { return close(r[i], r[j], tol); })) {
        grp.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) g.push_back({i});
  }
  return g;
}

// Coefficients of p(x) = x^k - sum_l a_l x^{k-l}, highest degree first.
std::vector<double> char_poly(std::span<const double> lag_coef) {
  std::vector<double> p{1.0};
  for (double a : lag_coef) p.push_back(-a);
  return p;
}

cd poly_deriv_eval(const std::vector<double>& p, int d, cd x) {
  const int deg = static_cast<int>(p.size()) - 1;
  cd acc = 0.0;
  for (int i = 0; i <= deg - d; ++i) {
    // coefficient of x^{deg-i} differentiated d times
    double f = p[i];
    for (int s = 0; s < d; ++s) f *= deg - i - s;
    acc = acc * x + f;
  }
  return acc;
}

// A root of multiplicity m is a simple root of p^{(m-1)}; polish the
// cluster centre by Newton on it.
cd polish(const std::vector<double>& p, int m, cd x) {
  for (int it = 0; it < 20; ++it) {
    const cd f = poly_deriv_eval(p, m - 1, x);
    const cd df = poly_deriv_eval(p, m, x);
    if (std::abs(df) == 0.0) break;
    const cd nx = x - f / df;
    if (!(std::abs(poly_deriv_eval(p, m - 1, nx)) < std::abs(f))) break;
    x = nx;
  }
  return x;
}

// Fit constants of sum_i sum_j C_ij t^j r_i^t to target[t], t = 0..k-1.
void fit_constants(RecurrenceSolution& s, const std::vector<double>& target) {
  const int k = s.k;
  Eigen::MatrixXcd V(k, k);
  int col = 0;
  for (const auto& g : s.roots)
    for (int j = 0; j < g.multiplicity; ++j, ++col)
      for (int t = 0; t < k; ++t) V(t, col) = (j == 0 ? 1.0 : std::pow(static_cast<double>(t), j)) * std::pow(g.root, t);
  Eigen::VectorXcd b(k);
  for (int t = 0; t < k; ++t) b(t) = target[t];
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(V);
  const auto& sv = svd.singularValues();
  s.vandermonde_cond = sv(k - 1) > 0 ? sv(0) / sv(k - 1) : kInf;
  if (s.vandermonde_cond > 1e12)
    s.warnings.push_back("ill-conditioned confluent Vandermonde system (cond = " +
                         std::to_string(s.vandermonde_cond) + ")");
  Eigen::VectorXcd x = V.fullPivLu().solve(b);
  s.constants.clear();
  col = 0;
  for (const auto& g : s.roots) {
    std::vector<cd> row;
    for (int j = 0; j < g.multiplicity; ++j) row.push_back(x(col++));
    s.constants.push_back(row);
  }
}

void set_roots(RecurrenceSolution& s, std::span<const double> lag_coef, double tol) {
  const std::vector<cd> raw = companion_roots(lag_coef);
  const RootClustering rc = cluster_roots(raw, tol);
  s.grouping_single = rc.single;
  s.grouping_complete = rc.complete;
  s.clustering_ambiguous = rc.ambiguous;
  if (s.clustering_ambiguous) s.warnings.push_back("root clustering is ambiguous at tol " + std::to_string(tol));
  const std::vector<double> p = char_poly(lag_coef);
  s.roots.clear();
  for (const auto& grp : s.grouping_single) {
    cd mean = 0.0;
    for (int i : grp) mean += raw[i];
    mean /= static_cast<double>(grp.size());
    const int m = static_cast<int>(grp.size());
    cd r = m > 1 ? polish(p, m, mean) : raw[grp[0]];
    // Conjugate pairs and real roots stay exactly so.
    if (std::abs(r.imag()) <= 1e-14 * std::abs(r)) r = r.real();
    s.roots.push_back({r, m});
  }
}

}  // namespace

RootClustering cluster_roots(std::span<const cd> roots, double tol) {
  RootClustering rc;
  rc.single = single_linkage(roots, tol);
  rc.complete = complete_linkage(roots, tol);
  auto canon = [](std::vector<std::vector<int>> g) {
    for (auto& v : g) std::sort(v.begin(), v.end());
    std::sort(g.begin(), g.end());
    return g;
  };
  rc.ambiguous = canon(rc.single) != canon(rc.complete);
  return rc;
}

std::complex<double> RecurrenceSolution::transformed(double t) const {
  cd acc = 0.0;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    const cd rt = std::pow(roots[i].root, t);
    for (std::size_t j = 0; j < constants[i].size(); ++j)
      acc += constants[i][j] * (j == 0 ? 1.0 : std::pow(t, static_cast<double>(j))) * rt;
  }
  if (regime == Regime::DeltaZero) acc += drift * t;
  return acc;
}

double RecurrenceSolution::log_alpha(double t) const {
  if (regime == Regime::DeltaPlusInf || regime == Regime::DeltaMinusInf)
    throw DomainError("RecurrenceSolution: no closed form in the infinite-delta regimes");
  double mag = 0.0;
  for (std::size_t i = 0; i < roots.size(); ++i)
    for (std::size_t j = 0; j < constants[i].size(); ++j)
      mag += std::abs(constants[i][j]) * std::pow(t, static_cast<double>(j)) * std::pow(std::abs(roots[i].root), t);
  const cd v = transformed(t);
  if (std::abs(v.imag()) > 1e-9 * std::max(mag, std::abs(v.real())))
    throw NumericalError("RecurrenceSolution: evaluator is not real at t = " + std::to_string(t));
  if (regime == Regime::DeltaZero) return v.real();
  if (!(v.real() > 0.0)) throw NumericalError("RecurrenceSolution: alpha_t^delta is not positive");
  return std::log(v.real()) / delta;
}

double RecurrenceSolution::alpha(double t) const { return std::exp(log_alpha(t)); }

std::vector<double> RecurrenceSolution::sequence(int T) const {
  std::vector<double> out(T + 1);
  for (int t = 0; t <= T; ++t) out[t] = alpha(t);
  return out;
}

RecurrenceSolution solve_closed_form(const HomogeneousFamily& fam, std::span<const double> init, double cluster_tol) {
  fam.validate();
  const int k = fam.k();
  validate_alpha_init(init, k);
  if (!std::isfinite(fam.delta) || fam.delta == 0.0)
    throw DomainError("solve_closed_form: delta must be finite and nonzero");
  RecurrenceSolution s;
  s.regime = Regime::GeneralDelta;
  s.k = k;
  s.delta = fam.delta;
  // y_t = alpha_t^delta;  y_t = c^delta sum_l gamma_{k+1-l}^{1+delta} y_{t-l}
  std::vector<double> lag(k);
  for (int l = 1; l <= k; ++l)
    lag[l - 1] = std::exp(fam.delta * std::log(fam.c) + (1.0 + fam.delta) * std::log(fam.gamma[k - l]));
  set_roots(s, lag, cluster_tol);
  std::vector<double> y{1.0};
  for (double a : init) y.push_back(std::pow(a, fam.delta));
  fit_constants(s, y);
  return s;
}

RecurrenceSolution solve_delta_zero(const HomogeneousFamily& fam, std::span<const double> init, double cluster_tol) {
  fam.validate();
  const int k = fam.k();
  validate_alpha_init(init, k);
  if (fam.delta != 0.0) throw DomainError("solve_delta_zero: delta must be 0");
  RecurrenceSolution s;
  s.regime = Regime::DeltaZero;
  s.k = k;
  s.delta = 0.0;
  std::vector<double> lag(k);
  double moment = 0.0;
  for (int l = 1; l <= k; ++l) {
    lag[l - 1] = fam.gamma[k - l];
    moment += l * lag[l - 1];
  }
  // The lag weights sum to one, so the constant forcing log c - I(gamma)
  // has the particular solution drift * t.
  s.drift = (std::log(fam.c) - fam.entropy()) / moment;
  set_roots(s, lag, cluster_tol);
  std::vector<double> z{0.0};
  for (double a : init) z.push_back(std::log(a));
  for (int t = 0; t < k; ++t) z[t] -= s.drift * t;
  fit_constants(s, z);
  return s;
}

RecurrenceSolution solve(const HomogeneousFamily& fam, std::span<const double> init, double cluster_tol) {
  if (fam.delta == 0.0) return solve_delta_zero(fam, init, cluster_tol);
  return solve_closed_form(fam, init, cluster_tol);
}

ExtremumSequence solve_delta_inf(const HomogeneousFamily& fam, std::span<const double> init, int T) {
  fam.validate();
  const int k = fam.k();
  validate_alpha_init(init, k);
  if (fam.delta != kInf && fam.delta != -kInf) throw DomainError("solve_delta_inf: delta must be +inf or -inf");
  if (T < 0) throw DomainError("solve_delta_inf: T must be >= 0");
  const bool mx = fam.delta > 0;
  ExtremumSequence out;
  out.alpha.push_back(1.0);
  out.alpha.insert(out.alpha.end(), init.begin(), init.end());
  out.lags.assign(k, 0);
  for (int t = k; t <= T; ++t) {
    int best_l = 1;
    double best = fam.gamma[k - 1] * out.alpha[t - 1];
    for (int l = 2; l <= k; ++l) {
      const double v = fam.gamma[k - l] * out.alpha[t - l];
      if (mx ? v > best : v < best) {
        best = v;
        best_l = l;
      }
    }
    out.alpha.push_back(fam.c * best);
    out.lags.push_back(best_l);
  }
  out.alpha.resize(T + 1);
  out.lags.resize(T + 1);
  return out;
}

namespace {
void check_beta(double beta, int k, int T) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("beta_sequence: beta must lie in (0,1)");
  if (k < 1) throw DomainError("beta_sequence: k must be >= 1");
  if (T < 0) throw DomainError("beta_sequence: T must be >= 0");
}
}  // namespace

// Both forms carry the integer exponent n_t with beta_t = beta^{n_t}.
std::vector<double> beta_sequence(double beta, int k, int T) {
  check_beta(beta, k, T);
  std::vector<double> out(T + 1, 1.0);
  for (int t = 1; t <= T; ++t) out[t] = std::pow(beta, 1 + (t - 1) / k);
  return out;
}

std::vector<double> beta_sequence_recursive(double beta, int k, int T) {
  check_beta(beta, k, T);
  std::vector<int> n(T + 1, 0);
  for (int t = 1; t <= T; ++t) {
    if (t < k) {
      n[t] = 1;
      continue;
    }
    // largest beta_{t-i} is the smallest exponent
    int m = n[t - 1];
    for (int i = 2; i <= k; ++i) m = std::min(m, n[t - i]);
    n[t] = 1 + m;
  }
  std::vector<double> out(T + 1);
  for (int t = 0; t <= T; ++t) out[t] = std::pow(beta, n[t]);
  return out;
}

std::vector<double> YuleWalker::extend(int T) const {
  const int k = static_cast<int>(phi.size());
  std::vector<double> r(rho.begin(), rho.end());
  for (int t = k + 1; t <= T; ++t) {
    double v = 0.0;
    for (int i = 1; i <= k; ++i) v += phi[i - 1] * r[t - i];
    r.push_back(v);
  }
  r.resize(T + 1);
  return r;
}

YuleWalker gaussian_yule_walker(std::span<const double> rho) {
  const int k = static_cast<int>(rho.size());
  if (k < 1) throw DomainError("gaussian_yule_walker: need at least one autocorrelation");
  YuleWalker yw;
  yw.rho.push_back(1.0);
  yw.rho.insert(yw.rho.end(), rho.begin(), rho.end());
  Eigen::MatrixXd full(k + 1, k + 1);
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= k; ++j) full(i, j) = yw.rho[std::abs(i - j)];
  Eigen::LLT<Eigen::MatrixXd> llt(full);
  if (llt.info() != Eigen::Success) throw ParameterError("gaussian_yule_walker: Toeplitz matrix is not positive definite");
  const Eigen::MatrixXd sub = full.topLeftCorner(k, k);
  const Eigen::VectorXd rhs = full.col(0).tail(k);
  const Eigen::VectorXd phi = sub.llt().solve(rhs);
  yw.phi.assign(phi.data(), phi.data() + k);
  const Eigen::MatrixXd q = llt.solve(Eigen::MatrixXd::Identity(k + 1, k + 1));
  yw.q_kk = q(k, k);
  for (int i = 1; i <= k; ++i) yw.phi_precision.push_back(-q(k - i, k) / q(k, k));
  return yw;
}

Functional gaussian_functional(std::span<const double> phi) {
  std::vector<double> p(phi.begin(), phi.end());
  return [p](std::span<const double> x) {
    const int k = static_cast<int>(p.size());
    if (static_cast<int>(x.size()) != k) throw DomainError("gaussian_functional: wrong number of arguments");
    double s = 0.0;
    for (int i = 1; i <= k; ++i) s += p[i - 1] * std::sqrt(x[k - i]);
    return s * s;
  };
}

}  // namespace exc
