#pragma once

#include <cstdint>
#include <random>

namespace exc {

// splitmix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of replicate r under master seed s: splitmix64(s ^ splitmix64(r)).
// Replicates are independent streams and the result does not depend on how
// replicates are scheduled across threads.
constexpr std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t r) {
  return splitmix64(master ^ splitmix64(r));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform on the open interval (0,1): 53 random bits, offset by half a step.
  double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }
  double exponential();
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace exc
