#pragma once

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "exc/recurrence.hpp"

namespace exc::testing {

// Random family whose alpha_t decays: the characteristic polynomial has
// spectral radius < 1 in y = alpha^delta for delta > 0, > 1 for delta < 0.
struct Draw {
  HomogeneousFamily fam;
  std::vector<double> init;
};

inline Draw random_draw(std::mt19937_64& g, bool zero_delta) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> K(1, 5);
  Draw d;
  const int k = K(g);
  d.fam.gamma.resize(k);
  for (auto& v : d.fam.gamma) v = 0.05 + U(g);
  const double s = std::accumulate(d.fam.gamma.begin(), d.fam.gamma.end(), 0.0);
  for (auto& v : d.fam.gamma) v /= s;
  for (int i = 1; i < k; ++i) d.init.push_back(0.05 + 0.9 * U(g));
  if (zero_delta) {
    d.fam.delta = 0.0;
    d.fam.c = std::exp(d.fam.entropy()) * (0.3 + 0.65 * U(g));
  } else {
    d.fam.delta = (U(g) < 0.5 ? -1.0 : 1.0) * (0.2 + 2.8 * U(g));
    double m = 0.0;
    for (double gm : d.fam.gamma) m += std::pow(gm, 1 + d.fam.delta);
    // c^delta * m is the sum of the lag coefficients
    const double target = d.fam.delta > 0 ? 0.3 + 0.6 * U(g) : 1.2 + 2.0 * U(g);
    d.fam.c = std::pow(target / m, 1.0 / d.fam.delta);
  }
  return d;
}

}  // namespace exc::testing
