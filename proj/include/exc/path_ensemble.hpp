#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "exc/rng.hpp"

namespace exc {

enum class Norming { None, LocationScale, ScaleOnly, AsymptoticDependence };
const char* norming_name(Norming n);

// n_rep x (T+1) paths, row-major.  atom and regime are either empty or the
// same shape as data: atom is 0 for an ordinary value, +1 / -1 for a
// +inf / -inf atom of the limit law; regime indexes regime_labels.
struct PathEnsemble {
  int n_rep = 0;
  int T = 0;
  std::vector<double> data;
  std::vector<std::int8_t> atom;
  std::vector<std::uint8_t> regime;
  std::vector<std::string> regime_labels;
  double u = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 0;
  std::string model;
  Norming norming = Norming::None;

  PathEnsemble() = default;
  PathEnsemble(int n, int T_, bool extended = false);

  int width() const { return T + 1; }
  double& at(int r, int t) { return data[static_cast<std::size_t>(r) * width() + t]; }
  double at(int r, int t) const { return data[static_cast<std::size_t>(r) * width() + t]; }
  bool has_atoms() const { return !atom.empty(); }
  std::int8_t atom_at(int r, int t) const { return atom.empty() ? 0 : atom[static_cast<std::size_t>(r) * width() + t]; }
  // Values of column t, skipping atoms.
  std::vector<double> column(int t) const;
};

// Runs body(r, rng) for r = 0..n-1, replicate r seeded with
// replicate_seed(seed, r).  Replicates are split into contiguous chunks over
// `threads` workers; results depend only on (seed, r).  The first exception
// thrown by any replicate is rethrown.
void for_each_replicate(int n, std::uint64_t seed, int threads,
                        const std::function<void(int, Rng&)>& body);

}  // namespace exc
