#include "exc/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "exc/copula_kernels.hpp"
#include "exc/error.hpp"
#include "exc/extremal_measures.hpp"
#include "exc/mc_lab.hpp"
#include "exc/numerics.hpp"
#include "exc/recurrence.hpp"
#include "exc/tail_chain.hpp"

namespace exc::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Reference parameter sets used by fig1, fig2 and the family defaults.
const std::vector<double> kGaussRho{1.0, 0.70, 0.57, 0.47, 0.39, 0.33};
const std::vector<double> kHrRow{1.0, 0.9, 0.7, 0.5, 0.3, 0.1};
constexpr double kLogAlpha = 0.32;
constexpr double kInvAlpha = 0.27;
constexpr int kFigK = 5;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, std::string s) {
  s = trim(s);
  if (!s.empty() && s[0] == '+') s.erase(0, 1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': not a number: '" + s + "'");
  return v;
}

long long parse_int(const std::string& key, std::string s) {
  s = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': not an integer: '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& key, std::string s) {
  s = trim(s);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': not an unsigned 64-bit integer: '" + s + "'");
  return v;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

// Typed access to a Config; every key must be read by the command.
class Params {
 public:
  explicit Params(Config c) : c_(std::move(c)) {}

  bool has(const std::string& k) const { return c_.count(k) > 0; }
  std::string str(const std::string& k, const std::string& def) {
    used_.insert(k);
    const auto it = c_.find(k);
    return it == c_.end() ? def : it->second;
  }
  std::string choice(const std::string& k, const std::string& def, const std::vector<std::string>& allowed) {
    const std::string v = str(k, def);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string msg = "key '" + k + "': '" + v + "' is not one of";
      for (const auto& a : allowed) msg += " " + a;
      throw ConfigError(msg);
    }
    return v;
  }
  double num(const std::string& k, double def) {
    used_.insert(k);
    return has(k) ? parse_double(k, c_.at(k)) : def;
  }
  double num(const std::string& k) {
    require(k);
    return num(k, 0.0);
  }
  int integer(const std::string& k, int def, int lo = std::numeric_limits<int>::min(),
              int hi = std::numeric_limits<int>::max()) {
    used_.insert(k);
    const long long v = has(k) ? parse_int(k, c_.at(k)) : def;
    if (v < lo || v > hi)
      throw ConfigError("key '" + k + "': " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    return static_cast<int>(v);
  }
  bool flag(const std::string& k, bool def) {
    const std::string v = str(k, def ? "true" : "false");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + k + "': expected true/false, got '" + v + "'");
  }
  std::vector<double> list(const std::string& k, const std::vector<double>& def) {
    used_.insert(k);
    if (!has(k)) return def;
    std::vector<double> out;
    for (const auto& s : split_list(c_.at(k))) out.push_back(parse_double(k, s));
    return out;
  }
  std::vector<double> list(const std::string& k) {
    require(k);
    return list(k, {});
  }
  std::vector<int> int_list(const std::string& k, const std::vector<int>& def) {
    used_.insert(k);
    if (!has(k)) return def;
    std::vector<int> out;
    for (const auto& s : split_list(c_.at(k))) {
      const long long v = parse_int(k, s);
      if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
        throw ConfigError("key '" + k + "': value out of range");
      out.push_back(static_cast<int>(v));
    }
    return out;
  }
  void require(const std::string& k) const {
    if (!has(k)) throw ConfigError("missing required key '" + k + "'");
  }
  // Unknown or irrelevant keys are schema violations.
  void finish() const {
    for (const auto& [k, v] : c_)
      if (!used_.count(k)) throw ConfigError("unknown key '" + k + "' for this command");
  }

 private:
  Config c_;
  std::set<std::string> used_;
};

struct Context {
  std::string command;
  fs::path out;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<std::string> written;

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(out);
    std::ofstream f(out / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (out / name).string());
    f << content;
    if (!f) throw ConfigError("write failed: " + (out / name).string());
    written.push_back(name);
  }
};

std::string num17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

std::string prob_label(double p) {
  char b[40];
  std::snprintf(b, sizeof b, "q%g", p);
  return b;
}

json jnum(double v) {
  if (std::isfinite(v)) return v;
  return num17(v);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---- model construction

const std::vector<std::string> kFamilies{"gaussian", "logistic", "inverted-logistic", "husler-reiss",
                                         "inverted-husler-reiss", "alog"};

AlogParams alog_params(Params& p) {
  AlogParams a;
  a.th0 = p.num("theta0", a.th0);
  a.th1 = p.num("theta1", a.th1);
  a.th2 = p.num("theta2", a.th2);
  a.th01 = p.num("theta01", a.th01);
  a.th02 = p.num("theta02", a.th02);
  a.th012 = p.num("theta012", a.th012);
  a.nu01 = p.num("nu01", a.nu01);
  a.nu02 = p.num("nu02", a.nu02);
  a.nu012 = p.num("nu012", a.nu012);
  a.validate();
  return a;
}

MvnOptions mvn_options(Params& p) {
  MvnOptions o;
  o.abs_tol = p.num("mvn_tol", o.abs_tol);
  return o;
}

// Family keys: gaussian rho; logistic / inverted-logistic alpha, k;
// husler-reiss / inverted-husler-reiss sigma (first row of the Toeplitz
// matrix), mvn_tol; alog theta*, nu*.
MarkovModel build_model(const std::string& family, Params& p) {
  if (family == "gaussian") return MarkovModel::gaussian(p.list("rho", kGaussRho));
  if (family == "logistic" || family == "inverted-logistic") {
    const double a = p.num("alpha", family == "logistic" ? kLogAlpha : kInvAlpha);
    const int k = p.integer("k", kFigK, 1, kDefaultMaxOrder);
    const auto m = ExponentMeasure::logistic(k + 1, a);
    return family == "logistic" ? MarkovModel::max_stable(m) : MarkovModel::inverted_max_stable(m);
  }
  if (family == "husler-reiss" || family == "inverted-husler-reiss") {
    const auto sigma = p.list("sigma", kHrRow);
    const auto m = ExponentMeasure::husler_reiss(toeplitz(sigma), mvn_options(p));
    return family == "husler-reiss" ? MarkovModel::max_stable(m) : MarkovModel::inverted_max_stable(m);
  }
  return MarkovModel::asym_logistic(alog_params(p));
}

// The tail chain of a family, reading the same keys as build_model.
TailChainModel tail_for_family(const std::string& family, Params& p) {
  if (family == "gaussian") return TailChainModel::gaussian_ar(p.list("rho", kGaussRho));
  if (family == "logistic") return TailChainModel::logistic_rw(p.integer("k", kFigK, 1, kDefaultMaxOrder), p.num("alpha", kLogAlpha));
  if (family == "inverted-logistic")
    return TailChainModel::inverted_logistic(p.integer("k", kFigK, 1, kDefaultMaxOrder), p.num("alpha", kInvAlpha));
  if (family == "husler-reiss") return TailChainModel::husler_reiss_rw(toeplitz(p.list("sigma", kHrRow)));
  throw ConfigError("family '" + family + "' has no implemented tail chain");
}

SamplerMethod sampler_method(Params& p) {
  return p.choice("method", "auto", {"auto", "inversion"}) == "auto" ? SamplerMethod::Auto
                                                                       : SamplerMethod::Inversion;
}

AlogConvention alog_convention(Params& p) {
  const std::string c = p.choice("convention", "as-published", {"as-published", "as-stated", "kernel-consistent"});
  if (c == "as-stated") return AlogConvention::AsStated;
  if (c == "kernel-consistent") return AlogConvention::KernelConsistent;
  return AlogConvention::AsPublished;
}

std::vector<double> band_probs(Params& p) {
  auto probs = p.list("probs", {0.025, 0.5, 0.975});
  if (probs.empty()) throw ConfigError("key 'probs': empty list");
  return probs;
}

// ---- CSV

const char* kPathHeader = "replicate,t,value,atom_flag,regime\n";

std::string paths_csv(const PathEnsemble& e, int max_rep = -1, const std::vector<bool>* keep = nullptr,
                      int t_max = -1) {
  std::string s = kPathHeader;
  int shown = 0;
  const int tm = t_max < 0 ? e.T : std::min(t_max, e.T);
  for (int r = 0; r < e.n_rep; ++r) {
    if (keep && !(*keep)[r]) continue;
    if (max_rep >= 0 && shown >= max_rep) break;
    ++shown;
    for (int t = 0; t <= tm; ++t) {
      s += std::to_string(r);
      s += ',';
      s += std::to_string(t);
      s += ',';
      s += num17(e.at(r, t));
      s += ',';
      s += std::to_string(static_cast<int>(e.atom_at(r, t)));
      s += ',';
      if (!e.regime.empty()) s += e.regime_labels.at(e.regime[static_cast<std::size_t>(r) * e.width() + t]);
      s += '\n';
    }
  }
  return s;
}

std::string bands_csv(const QuantileBands& b, int t_max = -1) {
  std::string s = "t,n_finite,atom_mass,mean,se";
  for (double p : b.probs) s += "," + prob_label(p);
  s += '\n';
  const int T = static_cast<int>(b.mean.size()) - 1;
  const int tm = t_max < 0 ? T : std::min(t_max, T);
  for (int t = 0; t <= tm; ++t) {
    s += std::to_string(t) + "," + std::to_string(b.n_finite[t]) + "," + num17(b.atom_mass[t]) + "," +
         num17(b.mean[t]) + "," + num17(b.se[t]);
    for (double q : b.q[t]) s += "," + num17(q);
    s += '\n';
  }
  return s;
}

json meta(const Context& c, const std::string& model) {
  return json{{"command", c.command}, {"seed", c.seed}, {"model", model},
              {"replicate_seed", "splitmix64(seed ^ splitmix64(r))"}};
}

// ---- commands

void cmd_solve_recurrence(Params& p, Context& c) {
  HomogeneousFamily fam;
  fam.c = p.num("c", 1.0);
  fam.gamma = p.list("gamma");
  fam.delta = p.num("delta", 1.0);
  const auto init = p.list("alpha_init", {});
  const int T = p.integer("T", 50, 0);
  const double tol = p.num("cluster_tol", 1e-6);
  p.finish();
  fam.validate();
  validate_alpha_init(init, fam.k());

  const auto it = iterate_alpha([&](std::span<const double> x) { return fam(x); }, fam.k(), init, T);
  std::vector<double> closed(T + 1);
  std::vector<int> lags(T + 1, 0);
  json j{{"c", fam.c}, {"gamma", fam.gamma}, {"delta", jnum(fam.delta)}, {"k", fam.k()}, {"alpha_init", init}};
  if (std::isinf(fam.delta)) {
    const auto ex = solve_delta_inf(fam, init, T);
    closed = ex.alpha;
    lags = ex.lags;
    j["regime"] = regime_name(fam.delta > 0 ? Regime::DeltaPlusInf : Regime::DeltaMinusInf);
  } else {
    const auto sol = solve(fam, init, tol);
    closed = sol.sequence(T);
    j["regime"] = regime_name(sol.regime);
    json roots = json::array();
    for (const auto& g : sol.roots)
      roots.push_back({{"re", g.root.real()}, {"im", g.root.imag()}, {"multiplicity", g.multiplicity}});
    j["roots"] = roots;
    json cs = json::array();
    for (const auto& row : sol.constants) {
      json r = json::array();
      for (const auto& z : row) r.push_back({{"re", z.real()}, {"im", z.imag()}});
      cs.push_back(r);
    }
    j["constants"] = cs;
    j["drift"] = sol.drift;
    j["vandermonde_cond"] = jnum(sol.vandermonde_cond);
    j["warnings"] = sol.warnings;
    j["clustering_ambiguous"] = sol.clustering_ambiguous;
    if (sol.clustering_ambiguous) {
      j["grouping_single"] = sol.grouping_single;
      j["grouping_complete"] = sol.grouping_complete;
    }
  }
  std::string s = "t,alpha,alpha_iterated,lag\n";
  for (int t = 0; t <= T; ++t)
    s += std::to_string(t) + "," + num17(closed[t]) + "," + num17(it[t]) + "," + std::to_string(lags[t]) + "\n";
  c.write("alpha.csv", s);
  c.write("solution.json", dump(j));
}

void cmd_beta_seq(Params& p, Context& c) {
  const double beta = p.num("beta");
  const int k = p.integer("k", 1, 1);
  const int T = p.integer("T", 50, 0);
  p.finish();
  const auto a = beta_sequence(beta, k, T);
  const auto b = beta_sequence_recursive(beta, k, T);
  std::string s = "t,beta,beta_recursive\n";
  for (int t = 0; t <= T; ++t) s += std::to_string(t) + "," + num17(a[t]) + "," + num17(b[t]) + "\n";
  c.write("beta.csv", s);
}

void cmd_simulate_chain(Params& p, Context& c) {
  const std::string family = p.choice("family", "gaussian", kFamilies);
  const MarkovModel m = build_model(family, p);
  const double u = p.num("u", 6.0);
  const int T = p.integer("T", 20, 0);
  const int n = p.integer("n_rep", 1000, 1);
  const SamplerMethod method = sampler_method(p);
  const bool tail_norm = p.choice("norming", "none", {"none", "tail"}) == "tail";
  std::optional<TailChainModel> tail;
  if (tail_norm) tail = tail_for_family(family, p);
  p.finish();
  PathEnsemble e = simulate_conditioned_ensemble(m, u, T, n, c.seed, c.threads, method);
  if (tail) e = renormalize(e, *tail);
  c.write("paths.csv", paths_csv(e));
  json j = meta(c, m.describe());
  j["u"] = u;
  j["T"] = T;
  j["n_rep"] = n;
  j["norming"] = norming_name(e.norming);
  c.write("meta.json", dump(j));
}

void write_tail_outputs(Context& c, const PathEnsemble& e, const std::vector<double>& probs, bool paths,
                        const std::string& prefix) {
  if (paths) c.write(prefix + "paths.csv", paths_csv(e));
  c.write(prefix + "bands.csv", bands_csv(quantile_bands(e, probs)));
}

std::string tb_csv(const std::vector<int>& tb) {
  std::string s = "replicate,TB\n";
  for (std::size_t r = 0; r < tb.size(); ++r) s += std::to_string(r) + "," + std::to_string(tb[r]) + "\n";
  return s;
}

void cmd_simulate_tail_chain(Params& p, Context& c) {
  const std::string kind =
      p.choice("kind", "gaussian-ar", {"gaussian-ar", "logistic-rw", "husler-reiss-rw", "inverted-logistic", "alog"});
  const int T = p.integer("T", 40, 0);
  const int n = p.integer("n_rep", 1000, 1);
  const auto probs = band_probs(p);
  const bool paths = p.flag("paths", true);
  if (kind == "alog") {
    const AlogTailChain ch(alog_params(p), alog_convention(p));
    p.finish();
    std::vector<int> tb;
    const PathEnsemble e = simulate_alog_tail_chain(ch, T, n, c.seed, c.threads, &tb);
    write_tail_outputs(c, e, probs, paths, "");
    c.write("tb.csv", tb_csv(tb));
    json j = meta(c, e.model);
    j["convention"] = alog_convention_name(ch.convention());
    c.write("meta.json", dump(j));
    return;
  }
  const std::string family = kind == "gaussian-ar"       ? "gaussian"
                             : kind == "logistic-rw"     ? "logistic"
                             : kind == "husler-reiss-rw" ? "husler-reiss"
                                                         : "inverted-logistic";
  const TailChainModel tail = tail_for_family(family, p);
  p.finish();
  if (T < tail.k()) throw ConfigError("T must be at least k = " + std::to_string(tail.k()));
  const PathEnsemble e = simulate_hidden_tail_chain(tail, T, n, c.seed, c.threads);
  write_tail_outputs(c, e, probs, paths, "");
  c.write("meta.json", dump(meta(c, tail.describe())));
}

void cmd_validate(Params& p, Context& c) {
  const std::string family = p.choice("family", "logistic", kFamilies);
  const MarkovModel m = build_model(family, p);
  const TailChainModel tail = tail_for_family(family, p);
  const auto ug = p.list("u_grid", {3.0, 6.0, 9.0});
  std::vector<int> def_lags(10);
  for (int i = 0; i < 10; ++i) def_lags[i] = i + 1;
  const auto lags = p.int_list("lags", def_lags);
  const int n = p.integer("n", 10000, 2);
  const double tol = p.num("tol", 0.05);
  p.finish();
  const auto rep = convergence_diagnostic(m, tail, ug, lags, n, c.seed, c.threads, tol);
  json j = meta(c, rep.model);
  j["tail_model"] = rep.tail_model;
  j["u_grid"] = rep.u_grid;
  j["lags"] = rep.lags;
  j["ks"] = rep.ks;
  j["decreasing"] = rep.decreasing;
  j["final_ok"] = rep.final_ok;
  j["k"] = rep.k;
  j["tol"] = rep.tol;
  j["n"] = rep.n;
  j["all_decreasing"] = rep.all_decreasing();
  j["all_final_ok"] = rep.all_final_ok();
  c.write("report.json", dump(j));
  // Kept apart so that report.json is reproducible byte for byte.
  c.write("timing.json", dump(json{{"u_grid", rep.u_grid}, {"seconds", rep.seconds}}));
}

void cmd_chi(Params& p, Context& c) {
  const std::string family = p.choice("family", "gaussian", kFamilies);
  const MarkovModel m = build_model(family, p);
  const auto A = p.int_list("A", {1});
  const auto levels = p.list("levels", {0.9, 0.95, 0.99});
  const long n = p.integer("n", 10000, 1);
  const SamplerMethod method = sampler_method(p);
  p.finish();
  const auto sampler = conditioned_sampler(m, method);
  json res = json::array();
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const ChiResult r = chi_estimate(sampler, A, levels[i], n, splitmix64(c.seed + i), c.threads);
    res.push_back({{"u", levels[i]}, {"estimate", r.estimate}, {"se", r.se}, {"n", r.n}, {"joint", r.joint},
                   {"expected_iid", r.expected_iid}, {"warnings", r.warnings}});
  }
  json j = meta(c, m.describe());
  j["A"] = A;
  j["results"] = res;
  j["level_seed"] = "splitmix64(seed + i) for levels[i]";
  c.write("chi.json", dump(j));
}

void cmd_fig1(Params& p, Context& c) {
  const std::string panel = p.choice("panel", "all", {"a", "b", "c", "d", "all"});
  const int T = p.integer("T", 40, kFigK);
  const int n = p.integer("n_rep", 10000, 1);
  const auto probs = band_probs(p);
  const int shown = p.integer("paths_shown", 20, 0);
  p.finish();
  const std::vector<std::pair<std::string, TailChainModel>> panels{
      {"a", TailChainModel::gaussian_ar(kGaussRho)},
      {"b", TailChainModel::inverted_logistic(kFigK, kInvAlpha)},
      {"c", TailChainModel::logistic_rw(kFigK, kLogAlpha)},
      {"d", TailChainModel::husler_reiss_rw(toeplitz(kHrRow))}};
  json j = meta(c, "fig1");
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const auto& [name, tail] = panels[i];
    if (panel != "all" && panel != name) continue;
    // Panels draw from their own streams so a single panel matches "all".
    const PathEnsemble e = simulate_hidden_tail_chain(tail, T, n, splitmix64(c.seed + i), c.threads);
    c.write("fig1_" + name + "_bands.csv", bands_csv(quantile_bands(e, probs)));
    c.write("fig1_" + name + "_paths.csv", paths_csv(e, shown));
    j["panels"][name] = tail.describe();
  }
  j["panel_seed"] = "splitmix64(seed + i), i = 0..3 for a..d";
  j["T"] = T;
  j["n_rep"] = n;
  c.write("fig1_meta.json", dump(j));
}

void cmd_fig2(Params& p, Context& c) {
  const int T = p.integer("T", 1000, 2);
  const int n = p.integer("n_rep", 10000, 1);
  const int cond = p.integer("condition_tb", 8, 2);
  const auto probs = band_probs(p);
  const int shown = p.integer("paths_shown", 20, 0);
  const AlogTailChain ch(alog_params(p), alog_convention(p));
  p.finish();
  std::vector<int> tb;
  const PathEnsemble e = simulate_alog_tail_chain(ch, T, n, c.seed, c.threads, &tb);

  std::map<int, long> hist;
  long censored = 0;
  double sum = 0.0, sum2 = 0.0;
  for (int v : tb) {
    if (v < 0) {
      ++censored;
      continue;
    }
    ++hist[v];
    sum += v;
    sum2 += static_cast<double>(v) * v;
  }
  const double done = static_cast<double>(n - censored);
  const double mean = done > 0 ? sum / done : std::numeric_limits<double>::quiet_NaN();
  const double var = done > 1 ? (sum2 - done * mean * mean) / (done - 1) : std::numeric_limits<double>::quiet_NaN();
  std::string hs = "TB,count\n";
  for (const auto& [v, cnt] : hist) hs += std::to_string(v) + "," + std::to_string(cnt) + "\n";
  c.write("fig2_tb_hist.csv", hs);
  c.write("fig2_tb.csv", tb_csv(tb));

  std::vector<bool> keep(n);
  long n_cond = 0;
  for (int r = 0; r < n; ++r) {
    keep[r] = tb[r] == cond;
    if (keep[r]) ++n_cond;
  }
  if (n_cond > 0) {
    c.write("fig2_bands_tb" + std::to_string(cond) + ".csv", bands_csv(quantile_bands(e, probs, keep), cond));
    c.write("fig2_paths_tb" + std::to_string(cond) + ".csv", paths_csv(e, shown, &keep, cond));
  }
  json j = meta(c, e.model);
  j["convention"] = alog_convention_name(ch.convention());
  j["T"] = T;
  j["n_rep"] = n;
  j["mean_TB"] = jnum(mean);
  j["sd_TB"] = jnum(std::sqrt(var));
  j["se_mean_TB"] = jnum(std::sqrt(var / done));
  j["censored"] = censored;
  j["condition_tb"] = cond;
  j["n_condition_tb"] = n_cond;
  c.write("fig2_summary.json", dump(j));
}

using Command = void (*)(Params&, Context&);

const std::vector<std::tuple<std::string, std::string, Command>>& commands() {
  static const std::vector<std::tuple<std::string, std::string, Command>> cmds{
      {"solve-recurrence", "norming-slope recurrence: alpha.csv, solution.json", cmd_solve_recurrence},
      {"beta-seq", "scale exponents beta_t: beta.csv", cmd_beta_seq},
      {"simulate-chain", "chains conditioned on X_0 > u: paths.csv, meta.json", cmd_simulate_chain},
      {"simulate-tail-chain", "hidden tail chains: paths.csv, bands.csv, meta.json", cmd_simulate_tail_chain},
      {"validate", "KS convergence diagnostic: report.json, timing.json", cmd_validate},
      {"chi", "chi_A(u) estimates: chi.json", cmd_chi},
      {"fig1", "tail-chain bands for the four reference models (panels a-d)", cmd_fig1},
      {"fig2", "asymmetric-logistic termination time and conditioned bands", cmd_fig2}};
  return cmds;
}

void error_json(const Context& c, const std::string& kind, const std::string& msg) {
  const json j{{"error", kind}, {"command", c.command}, {"message", msg}, {"seed", c.seed}};
  std::cerr << j.dump() << "\n";
  try {
    fs::create_directories(c.out);
    std::ofstream(c.out / "error.json") << dump(j);
  } catch (...) {
  }
}

}  // namespace

Config parse_config_text(const std::string& text) {
  Config c;
  std::stringstream ss(text);
  std::string line;
  int no = 0;
  while (std::getline(ss, line)) {
    ++no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(no) + ": expected key = value");
    const std::string k = trim(line.substr(0, eq));
    if (k.empty()) throw ConfigError("config line " + std::to_string(no) + ": empty key");
    if (!c.emplace(k, trim(line.substr(eq + 1))).second)
      throw ConfigError("config line " + std::to_string(no) + ": repeated key '" + k + "'");
  }
  return c;
}

Config parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Extremes of k-th order Markov chains", args.empty() ? "exc" : args[0]};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  std::string seed_arg, threads_arg;
  auto* seed_opt = app.add_option("--seed", seed_arg, "64-bit master seed (default 1)");
  auto* threads_opt = app.add_option("--threads", threads_arg, std::string("worker threads (default $") + kThreadsEnv + " or 1)");
  app.add_option("--config", config_path, "key = value file");
  app.add_option("--out", out_dir, "output directory");
  std::vector<std::string> overrides;
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [name, desc, fn] : commands()) {
    auto* sc = app.add_subcommand(name, desc);
    sc->fallthrough();
    sc->add_option("overrides", overrides, "key=value settings, applied after --config");
    subs.emplace_back(sc, fn);
  }

  std::vector<char*> argv;
  std::vector<std::string> store = args;
  if (store.empty()) store.push_back("exc");
  for (auto& s : store) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  Context ctx;
  ctx.out = out_dir;
  Command fn = nullptr;
  for (const auto& [sc, f] : subs)
    if (sc->parsed()) {
      ctx.command = sc->get_name();
      fn = f;
    }

  try {
    Config cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + o + "': expected key=value");
      cfg[trim(o.substr(0, eq))] = trim(o.substr(eq + 1));
    }
    Params p(std::move(cfg));
    ctx.seed = p.has("seed") ? parse_u64("seed", p.str("seed", "")) : 1;
    if (seed_opt->count()) ctx.seed = parse_u64("--seed", seed_arg);
    std::string th;
    if (const char* env = std::getenv(kThreadsEnv)) th = env;
    th = p.str("threads", th);
    if (threads_opt->count()) th = threads_arg;
    const long long nt = th.empty() ? 1 : parse_int("threads", th);
    if (nt < 1 || nt > 1024) throw ConfigError("threads must lie in [1, 1024]");
    ctx.threads = static_cast<int>(nt);
    fn(p, ctx);
  } catch (const ConfigError& e) {
    error_json(ctx, "config", e.what());
    return kConfigError;
  } catch (const ParameterError& e) {
    error_json(ctx, "config", e.what());
    return kConfigError;
  } catch (const DomainError& e) {
    error_json(ctx, "config", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    error_json(ctx, "numerical", e.what());
    return kNumericalError;
  }
  return kOk;
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace exc::cli
