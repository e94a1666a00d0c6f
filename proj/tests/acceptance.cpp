// One line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "exc/copula_kernels.hpp"
#include "exc/extremal_measures.hpp"
#include "exc/mc_lab.hpp"
#include "exc/recurrence.hpp"
#include "exc/tail_chain.hpp"
#include "support.hpp"

using namespace exc;

namespace {

const std::vector<double> kGaussRho{1.0, 0.70, 0.57, 0.47, 0.39, 0.33};
const std::vector<double> kHrRho{1.0, 0.9, 0.7, 0.5, 0.3, 0.1};
constexpr double kInvAlpha = 0.27;
constexpr double kLogAlpha = 0.32;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

Outcome c1() {
  std::mt19937_64 g(2024);
  double worst = 0.0, worst0 = 0.0;
  auto iterate = [](const HomogeneousFamily& f, const std::vector<double>& init) {
    return iterate_alpha([&](std::span<const double> x) { return f(x); }, f.k(), init, 50);
  };
  for (int rep = 0; rep < 200; ++rep) {
    const auto d = testing::random_draw(g, false);
    const auto sol = solve_closed_form(d.fam, d.init);
    const auto it = iterate(d.fam, d.init);
    for (int t = 0; t <= 50; ++t) worst = std::max(worst, std::abs(sol.alpha(t) - it[t]));
    const auto z = testing::random_draw(g, true);
    const auto sz = solve_delta_zero(z.fam, z.init);
    const auto iz = iterate(z.fam, z.init);
    for (int t = 0; t <= 50; ++t) worst0 = std::max(worst0, std::abs(sz.log_alpha(t) - std::log(iz[t])));
  }
  return {worst < 1e-8 && worst0 < 1e-8,
          "closed form " + fmt(worst) + ", delta=0 (log) " + fmt(worst0) + ", tol 1e-8"};
}

Outcome c2() {
  const auto yw = gaussian_yule_walker(std::span<const double>(kGaussRho).subspan(1));
  const int k = static_cast<int>(kGaussRho.size()) - 1;
  std::vector<double> init;
  for (int i = 1; i < k; ++i) init.push_back(kGaussRho[i] * kGaussRho[i]);
  const auto a = iterate_alpha(gaussian_functional(yw.phi), k, init, 100);
  const auto rho = yw.extend(100);
  double worst = 0.0;
  for (int t = 0; t <= 100; ++t) worst = std::max(worst, std::abs(a[t] - rho[t] * rho[t]));
  return {worst < 1e-12, "max |alpha_t - rho_t^2| over t<=100 = " + fmt(worst)};
}

Outcome c3() {
  const std::vector<double> w{0.0, 0.2, -0.3, 0.1, 0.4};
  const double u = 20.0;
  MvnOptions opt;
  opt.abs_tol = 1e-4;
  const auto lt = TailChainModel::logistic_rw(5, kLogAlpha);
  const double dl = kernel_limit_discrepancy(MarkovModel::max_stable(ExponentMeasure::logistic(6, kLogAlpha)),
                                             lt, u, w, innovation_grid(lt));
  const auto gt = TailChainModel::gaussian_ar(kGaussRho);
  const double dg = kernel_limit_discrepancy(MarkovModel::gaussian(kGaussRho), gt, u, w, innovation_grid(gt));
  const auto ht = TailChainModel::husler_reiss_rw(toeplitz(kHrRho));
  const double dh = kernel_limit_discrepancy(
      MarkovModel::max_stable(ExponentMeasure::husler_reiss(toeplitz(kHrRho), opt)), ht, u, w, innovation_grid(ht));
  return {dl < 1e-3 && dg < 1e-2 && dh < 1e-2, "u=20 max|F_u - K|: logistic " + fmt(dl) + " (tol 1e-3), gaussian " +
                                                   fmt(dg) + " (tol 1e-2), husler-reiss " + fmt(dh) + " (tol 1e-2)"};
}

Outcome c4() {
  const std::vector<double> ug{3.0, 6.0, 9.0};
  std::vector<int> lags;
  for (int l = 1; l <= 10; ++l) lags.push_back(l);
  struct Case {
    const char* name;
    MarkovModel m;
    TailChainModel t;
  };
  const std::vector<Case> cases = {
      {"gaussian", MarkovModel::gaussian(kGaussRho), TailChainModel::gaussian_ar(kGaussRho)},
      {"logistic", MarkovModel::max_stable(ExponentMeasure::logistic(6, kLogAlpha)),
       TailChainModel::logistic_rw(5, kLogAlpha)},
      {"husler-reiss", MarkovModel::max_stable(ExponentMeasure::husler_reiss(toeplitz(kHrRho))),
       TailChainModel::husler_reiss_rw(toeplitz(kHrRho))},
      {"inverted-logistic", MarkovModel::inverted_max_stable(ExponentMeasure::logistic(6, kInvAlpha)),
       TailChainModel::inverted_logistic(5, kInvAlpha)}};
  bool all = true;
  std::string detail;
  for (const auto& c : cases) {
    const auto rep = convergence_diagnostic(c.m, c.t, ug, lags, 10000, 4004);
    double worst9 = 0.0;
    for (std::size_t j = 0; j < lags.size(); ++j)
      if (lags[j] <= rep.k) worst9 = std::max(worst9, rep.ks.back()[j]);
    std::string nondec;
    for (std::size_t j = 0; j < lags.size(); ++j)
      if (!rep.decreasing[j]) nondec += (nondec.empty() ? "" : ",") + std::to_string(lags[j]);
    const bool ok = rep.all_decreasing() && rep.all_final_ok();
    all = all && ok;
    detail += std::string(detail.empty() ? "" : "; ") + c.name + (ok ? " ok" : " FAIL") + " KS(u=9, lag<=k) max " +
              fmt(worst9) + (nondec.empty() ? "" : ", not decreasing at lags " + nondec);
  }
  return {all, detail};
}

double width(const QuantileBands& b, int t) { return b.q[t].back() - b.q[t].front(); }

Outcome c5() {
  const int T = 40, n = 10000;
  const std::vector<double> probs{0.025, 0.5, 0.975};
  const auto ga = simulate_hidden_tail_chain(TailChainModel::gaussian_ar(kGaussRho), T, n, 501);
  const auto ba = quantile_bands(ga, probs);
  int mean_bad = 0, width_bad = 0;
  for (int t = 1; t <= T; ++t)
    if (std::abs(ba.mean[t]) >= 3 * ba.se[t]) ++mean_bad;
  for (int t = 20; t < T; ++t)
    if (!(width(ba, t + 1) < width(ba, t))) ++width_bad;
  const int k = 5;
  const auto ib = quantile_bands(simulate_hidden_tail_chain(TailChainModel::inverted_logistic(k, kInvAlpha), T, n, 502), probs);
  int block_bad = 0, block_checks = 0;
  for (int s = k + 1; s + k - 1 <= T; s += k)
    for (int i = 0; i + 1 < k; ++i, ++block_checks)
      if (!(width(ib, s + i + 1) < width(ib, s + i))) ++block_bad;
  const auto lb = quantile_bands(simulate_hidden_tail_chain(TailChainModel::logistic_rw(k, kLogAlpha), T, n, 503), probs);
  const auto hb = quantile_bands(simulate_hidden_tail_chain(TailChainModel::husler_reiss_rw(toeplitz(kHrRho)), T, n, 504), probs);
  bool finite = true;
  for (int t = 0; t <= T; ++t)
    for (const auto* b : {&lb, &hb})
      for (double q : b->q[t]) finite = finite && std::isfinite(q);
  return {mean_bad == 0 && width_bad == 0 && block_bad == 0 && finite,
          "(a) |mean| >= 3se at " + std::to_string(mean_bad) + "/" + std::to_string(T) + " lags, width not shrinking at " +
              std::to_string(width_bad) + " of t=20.." + std::to_string(T - 1) + "; (b) within-block increases " +
              std::to_string(block_bad) + "/" + std::to_string(block_checks) + "; (c),(d) bands finite: " +
              (finite ? "yes" : "no")};
}

Outcome c6() {
  const AlogTailChain ch(AlogParams{});
  std::vector<int> tb;
  simulate_alog_tail_chain(ch, 1000, 10000, 6006, 1, &tb);
  double s = 0.0;
  int censored = 0;
  for (int v : tb) {
    if (v < 0) ++censored;
    s += v;
  }
  const double mean = s / tb.size();
  return {censored == 0 && mean >= 8.0 && mean <= 8.9,
          "mean T^B = " + fmt(mean) + " over 1e4 replicates, target [8.0, 8.9]" +
              (censored ? ", " + std::to_string(censored) + " censored" : "")};
}

Outcome c7() {
  int fails = 0;
  std::ostringstream note;
  MvnOptions opt;
  opt.abs_tol = 1e-9;
  const std::vector<ExponentMeasure> ms = {ExponentMeasure::logistic(4, 0.4),
                                           ExponentMeasure::husler_reiss(toeplitz(std::vector<double>{1.0, 0.8, 0.5}), opt),
                                           ExponentMeasure::asymmetric_logistic(AlogParams{})};
  double hom = 0.0, marg = 0.0;
  for (const auto& m : ms) {
    const int d = m.dim();
    std::vector<double> y(d), sy(d);
    for (int i = 0; i < d; ++i) {
      y[i] = 0.4 + 0.7 * i;
      sy[i] = 3.0 * y[i];
    }
    hom = std::max(hom, std::abs(m.value(sy) - m.value(y) / 3.0) / m.value(y));
    for (int i = 0; i < d; ++i) {
      std::vector<double> e(d, kInf);
      e[i] = 1.7;
      marg = std::max(marg, std::abs(m.value(e) - 1.0 / 1.7));
    }
  }
  if (hom > 1e-10) ++fails;
  if (marg > 1e-6) ++fails;
  note << "homogeneity " << fmt(hom) << ", margins " << fmt(marg);

  double eq = 0.0;
  std::mt19937_64 g(7);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  const auto lt = TailChainModel::logistic_rw(5, kLogAlpha);
  const auto ht = TailChainModel::husler_reiss_rw(toeplitz(kHrRho));
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> w(5), ws(5);
    const double c = 10.0 * U(g);
    for (int i = 0; i < 5; ++i) {
      w[i] = U(g);
      ws[i] = w[i] + c;
    }
    for (const auto* t : {&lt, &ht})
      eq = std::max(eq, std::abs(t->psi_a(5, ws) - t->psi_a(5, w) - c) / (1.0 + std::abs(c)));
  }
  if (eq > 1e-14) ++fails;
  note << ", equivariance " << fmt(eq);

  const double hr1 = std::abs(ht.hr_coef().sum() - 1.0);
  if (hr1 > 1e-10) ++fails;
  note << ", HR identity " << fmt(hr1);

  bool beta_ok = true;
  for (int k = 1; k <= 6; ++k)
    for (double b : {0.1, 0.5, 0.73, 0.99}) beta_ok = beta_ok && beta_sequence(b, k, 200) == beta_sequence_recursive(b, k, 200);
  if (!beta_ok) ++fails;
  note << ", beta closed form " << (beta_ok ? "exact" : "differs");

  const double zero[1] = {0.0}, one[1] = {1.0};
  bool red = true;
  for (const auto& t : {TailChainModel::logistic_rw(1, 0.4), TailChainModel::husler_reiss_rw(toeplitz(std::vector<double>{1.0, 0.5}))})
    red = red && t.psi_a(1, zero) == 0.0 && t.psi_b(1, zero) == 1.0;
  const auto it = TailChainModel::inverted_logistic(1, 0.4);
  red = red && it.psi_a(1, one) == 0.0 && std::abs(it.psi_b(1, one) - 1.0) < 1e-15;
  if (!red) ++fails;
  note << ", k=1 reduction " << (red ? "holds" : "fails");
  return {fails == 0, note.str()};
}

Outcome c8() {
  const ConditionedSampler perfect = [](double u, int T, Rng& rng) {
    return std::vector<double>(T + 1, u + rng.exponential());
  };
  const ConditionedSampler iid = [](double u, int T, Rng& rng) {
    std::vector<double> x(T + 1);
    x[0] = u + rng.exponential();
    for (int t = 1; t <= T; ++t) x[t] = rng.exponential();
    return x;
  };
  bool ok = true;
  for (const std::vector<int>& A : {std::vector<int>{1}, std::vector<int>{1, 2}, std::vector<int>{2, 3, 5}})
    for (double u : {0.9, 0.95, 0.999}) ok = ok && chi_estimate(perfect, A, u, 10000, 81).estimate == 1.0;
  std::string d = std::string("perfect double ") + (ok ? "1 exactly" : "not 1");
  for (const std::vector<int>& A : {std::vector<int>{1}, std::vector<int>{1, 2}}) {
    const ChiResult r = chi_estimate(iid, A, 0.95, 1000000, 82);
    const double p = std::pow(0.05, static_cast<double>(A.size()));
    const double z = (r.estimate - p) / r.se;
    ok = ok && std::abs(z) < 3.0;
    d += "; iid |A|=" + std::to_string(A.size()) + " z = " + fmt(z);
  }
  return {ok, d};
}

}  // namespace

int main() {
  struct Item {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const std::vector<Item> items = {
      {1, "recurrence oracle equivalence", 5, c1},
      {2, "extremal Yule-Walker equals rho_t^2", 1, c2},
      {3, "kernel-limit oracles", 30, c3},
      {4, "weak-convergence diagnostic", 600, c4},
      {5, "tail-chain quantile bands", 300, c5},
      {6, "regime chain mean T^B", 60, c6},
      {7, "structural invariants", 10, c7},
      {8, "chi sanity", 30, c8},
  };
  int failed = 0;
  for (const auto& it : items) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = it.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = sec < it.limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %d [%s] %s: %s; %.1f s (limit %.0f s)\n", it.id, pass ? "PASS" : "FAIL", it.name,
                o.detail.c_str(), sec, it.limit_s);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
