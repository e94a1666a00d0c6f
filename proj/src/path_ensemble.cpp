#include "exc/path_ensemble.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>

#include "exc/error.hpp"

namespace exc {

const char* norming_name(Norming n) {
  switch (n) {
    case Norming::None: return "none";
    case Norming::LocationScale: return "location-scale";
    case Norming::ScaleOnly: return "scale-only";
    case Norming::AsymptoticDependence: return "asymptotic-dependence";
  }
  return "?";
}

PathEnsemble::PathEnsemble(int n, int T_, bool extended) : n_rep(n), T(T_) {
  if (n < 0 || T_ < 0) throw DomainError("PathEnsemble: negative shape");
  data.assign(static_cast<std::size_t>(n) * (T_ + 1), 0.0);
  if (extended) {
    atom.assign(data.size(), 0);
    regime.assign(data.size(), 0);
  }
}

std::vector<double> PathEnsemble::column(int t) const {
  if (t < 0 || t > T) throw DomainError("PathEnsemble::column: t out of range");
  std::vector<double> c;
  c.reserve(n_rep);
  for (int r = 0; r < n_rep; ++r)
    if (atom_at(r, t) == 0) c.push_back(at(r, t));
  return c;
}

void for_each_replicate(int n, std::uint64_t seed, int threads,
                        const std::function<void(int, Rng&)>& body) {
  const int nt = std::max(1, std::min(threads, n));
  auto run = [&](int lo, int hi) {
    for (int r = lo; r < hi; ++r) {
      Rng rng(replicate_seed(seed, static_cast<std::uint64_t>(r)));
      body(r, rng);
    }
  };
  if (nt == 1) {
    run(0, n);
    return;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < nt; ++w) {
    const int lo = static_cast<int>(static_cast<long>(n) * w / nt);
    const int hi = static_cast<int>(static_cast<long>(n) * (w + 1) / nt);
    pool.emplace_back([&, lo, hi] {
      try {
        run(lo, hi);
      } catch (...) {
        std::lock_guard<std::mutex> g(mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace exc
