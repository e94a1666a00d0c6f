#include "exc/mc_lab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "exc/error.hpp"
#include "exc/numerics.hpp"

namespace exc {

PathEnsemble simulate_conditioned_ensemble(const MarkovModel& model, double u, int T, int n_rep,
                                           std::uint64_t seed, int threads, SamplerMethod method) {
  if (T < 0 || n_rep < 0) throw DomainError("simulate_conditioned_ensemble: negative shape");
  PathEnsemble e(n_rep, T);
  e.u = u;
  e.seed = seed;
  e.model = model.describe();
  for_each_replicate(n_rep, seed, threads, [&](int r, Rng& rng) {
    const std::vector<double> x = model.simulate_conditioned_chain(u, T, rng, method);
    std::copy(x.begin(), x.end(), e.data.begin() + static_cast<std::ptrdiff_t>(r) * e.width());
  });
  return e;
}

PathEnsemble renormalize(const PathEnsemble& raw, Norming norming, std::span<const double> alpha,
                         std::span<const double> beta) {
  if (raw.norming != Norming::None) throw DomainError("renormalize: ensemble is already normalized");
  if (!std::isfinite(raw.u)) throw DomainError("renormalize: ensemble has no threshold");
  const bool need = norming == Norming::LocationScale || norming == Norming::ScaleOnly;
  if (need && (static_cast<int>(alpha.size()) <= raw.T || static_cast<int>(beta.size()) <= raw.T))
    throw DomainError("renormalize: norming sequences do not cover 0..T");
  PathEnsemble e = raw;
  e.norming = norming;
  for (int r = 0; r < e.n_rep; ++r) {
    const double x0 = raw.at(r, 0);
    e.at(r, 0) = x0 - raw.u;
    for (int t = 1; t <= e.T; ++t) {
      const double x = raw.at(r, t);
      switch (norming) {
        case Norming::LocationScale: e.at(r, t) = (x - alpha[t] * x0) / std::pow(x0, beta[t]); break;
        case Norming::ScaleOnly: e.at(r, t) = x / std::pow(x0, beta[t]); break;
        case Norming::AsymptoticDependence: e.at(r, t) = x - x0; break;
        case Norming::None: break;
      }
    }
  }
  return e;
}

PathEnsemble renormalize(const PathEnsemble& raw, const TailChainModel& model) {
  std::vector<double> a(raw.T + 1), b(raw.T + 1);
  for (int t = 0; t <= raw.T; ++t) {
    a[t] = model.norming_alpha(t);
    b[t] = model.norming_beta(t);
  }
  return renormalize(raw, model.norming(), a, b);
}

double ks_distance(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw DomainError("ks_distance: empty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw DomainError("ks_distance: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() || j < y.size()) {
    double v;
    if (j == y.size() || (i < x.size() && x[i] <= y[j])) v = x[i];
    else v = y[j];
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

namespace {

double quantile7(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

QuantileBands quantile_bands(const PathEnsemble& e, std::span<const double> probs,
                             const std::vector<bool>& keep) {
  for (double p : probs)
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile_bands: probabilities must lie in (0,1)");
  if (static_cast<int>(keep.size()) != e.n_rep) throw DomainError("quantile_bands: mask has the wrong size");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  QuantileBands qb;
  qb.probs.assign(probs.begin(), probs.end());
  int kept = 0;
  for (bool k : keep) kept += k;
  std::vector<double> c;
  for (int t = 0; t <= e.T; ++t) {
    c.clear();
    int atoms = 0;
    for (int r = 0; r < e.n_rep; ++r) {
      if (!keep[r]) continue;
      if (e.atom_at(r, t) != 0) ++atoms;
      else c.push_back(e.at(r, t));
    }
    std::sort(c.begin(), c.end());
    std::vector<double> row;
    for (double p : probs) row.push_back(c.empty() ? nan : quantile7(c, p));
    qb.q.push_back(row);
    qb.n_finite.push_back(static_cast<int>(c.size()));
    qb.atom_mass.push_back(kept ? atoms / static_cast<double>(kept) : nan);
    if (c.empty()) {
      qb.mean.push_back(nan);
      qb.se.push_back(nan);
      continue;
    }
    double m = 0.0;
    for (double v : c) m += v;
    m /= c.size();
    double s = 0.0;
    for (double v : c) s += (v - m) * (v - m);
    qb.mean.push_back(m);
    qb.se.push_back(c.size() > 1 ? std::sqrt(s / (c.size() - 1) / c.size()) : nan);
  }
  return qb;
}

QuantileBands quantile_bands(const PathEnsemble& e, std::span<const double> probs) {
  return quantile_bands(e, probs, std::vector<bool>(e.n_rep, true));
}

ConditionedSampler conditioned_sampler(const MarkovModel& model, SamplerMethod method) {
  // Short horizons still draw the full initial window, then truncate.
  return [model, method](double u, int T, Rng& rng) {
    auto x = model.simulate_conditioned_chain(u, std::max(T, model.k()), rng, method);
    x.resize(T + 1);
    return x;
  };
}

ChiResult chi_estimate(const ConditionedSampler& sampler, std::span<const int> A, double u, long n,
                       std::uint64_t seed, int threads) {
  if (A.empty()) throw DomainError("chi_estimate: empty lag set");
  if (!(u > 0.0 && u < 1.0)) throw DomainError("chi_estimate: level must lie in (0,1)");
  if (n < 1 || n > std::numeric_limits<int>::max()) throw DomainError("chi_estimate: bad replicate count");
  int T = 0;
  for (int j : A) {
    if (j < 1) throw DomainError("chi_estimate: lags must be >= 1");
    T = std::max(T, j);
  }
  const double ue = -std::log1p(-u);
  std::vector<char> hit(n, 0);
  for_each_replicate(static_cast<int>(n), seed, threads, [&](int r, Rng& rng) {
    const std::vector<double> x = sampler(ue, T, rng);
    bool all = true;
    for (int j : A) all = all && x[j] > ue;
    hit[r] = all;
  });
  ChiResult res;
  res.n = n;
  for (char h : hit) res.joint += h;
  res.estimate = res.joint / static_cast<double>(n);
  res.se = std::sqrt(res.estimate * (1.0 - res.estimate) / n);
  res.expected_iid = n * std::pow(1.0 - u, static_cast<double>(A.size()));
  if (res.expected_iid < 50.0)
    res.warnings.push_back("fewer than 50 joint exceedances expected under independence; increase n");
  if (res.joint < 50) res.warnings.push_back("fewer than 50 joint exceedances observed; standard error unreliable");
  return res;
}

bool ConvergenceReport::all_decreasing() const {
  return std::all_of(decreasing.begin(), decreasing.end(), [](bool b) { return b; });
}
bool ConvergenceReport::all_final_ok() const {
  return std::all_of(final_ok.begin(), final_ok.end(), [](bool b) { return b; });
}

ConvergenceReport convergence_diagnostic(const MarkovModel& model, const TailChainModel& tail,
                                         std::span<const double> u_grid, std::span<const int> lags,
                                         int n, std::uint64_t seed, int threads, double tol) {
  if (u_grid.empty() || lags.empty()) throw DomainError("convergence_diagnostic: empty grid");
  if (model.k() != tail.k()) throw DomainError("convergence_diagnostic: model and tail chain orders differ");
  int T = tail.k();
  for (int l : lags) {
    if (l < 1) throw DomainError("convergence_diagnostic: lags must be >= 1");
    T = std::max(T, l);
  }
  ConvergenceReport rep;
  rep.model = model.describe();
  rep.tail_model = tail.describe();
  rep.u_grid.assign(u_grid.begin(), u_grid.end());
  rep.lags.assign(lags.begin(), lags.end());
  rep.tol = tol;
  rep.k = tail.k();
  rep.n = n;
  rep.seed = seed;
  const PathEnsemble te = simulate_hidden_tail_chain(tail, T, n, splitmix64(seed), threads);
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const PathEnsemble raw =
        simulate_conditioned_ensemble(model, u_grid[i], T, n, splitmix64(seed + 1 + i), threads);
    const PathEnsemble ce = renormalize(raw, tail);
    std::vector<double> row;
    for (int l : lags) row.push_back(ks_distance(ce.column(l), te.column(l)));
    rep.ks.push_back(row);
    rep.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  for (std::size_t j = 0; j < lags.size(); ++j) {
    bool dec = true;
    for (std::size_t i = 0; i + 1 < u_grid.size(); ++i) dec = dec && rep.ks[i + 1][j] < rep.ks[i][j];
    rep.decreasing.push_back(dec);
    rep.final_ok.push_back(lags[j] > rep.k || rep.ks.back()[j] < tol);
  }
  return rep;
}

double kernel_limit_discrepancy(const MarkovModel& model, const TailChainModel& tail, double u,
                                std::span<const double> m, std::span<const double> x_grid) {
  const int k = tail.k();
  if (model.k() != k || static_cast<int>(m.size()) != k)
    throw DomainError("kernel_limit_discrepancy: window must have k entries");
  std::vector<double> mm(m.begin(), m.end()), y(k);
  mm[0] = tail.m0();
  y[0] = u;
  for (int s = 1; s < k; ++s) y[s] = tail.norming_alpha(s) * u + std::pow(u, tail.norming_beta(s)) * mm[s];
  const double ak = tail.norming() == Norming::ScaleOnly ? 0.0 : tail.norming_alpha(k) * u;
  const double bk = std::pow(u, tail.norming_beta(k));
  const double pa = tail.psi_a(k, mm), pb = tail.psi_b(k, mm);
  double worst = 0.0;
  for (double x : x_grid) {
    const double f = model.kernel_cdf(y, ak + bk * (pa + pb * x));
    worst = std::max(worst, std::abs(f - tail.innovation_cdf(x)));
  }
  return worst;
}

std::vector<double> innovation_grid(const TailChainModel& tail, int points) {
  if (points < 2) throw DomainError("innovation_grid: need at least two points");
  std::vector<double> x;
  for (int i = 0; i < points; ++i) x.push_back(tail.innovation_quantile(0.025 + 0.95 * i / (points - 1)));
  return x;
}

Correlation column_correlation(const PathEnsemble& e, int t) {
  if (t < 0 || t > e.T) throw DomainError("column_correlation: t out of range");
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  long n = 0;
  for (int r = 0; r < e.n_rep; ++r) {
    if (e.atom_at(r, 0) != 0 || e.atom_at(r, t) != 0) continue;
    const double x = e.at(r, 0), y = e.at(r, t);
    sx += x; sy += y; sxx += x * x; syy += y * y; sxy += x * y;
    ++n;
  }
  if (n < 3) throw DomainError("column_correlation: too few finite pairs");
  const double cx = sxx - sx * sx / n, cy = syy - sy * sy / n, cxy = sxy - sx * sy / n;
  return {cxy / std::sqrt(cx * cy), 1.0 / std::sqrt(static_cast<double>(n))};
}

}  // namespace exc
