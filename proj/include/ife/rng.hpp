#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ife/tensor.hpp"

namespace ife {

// Counter-based generator (splitmix64 core). All randomness in the project
// flows through this so that runs are reproducible independent of the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    uint64_t bound = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return static_cast<int>(x % bound);
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Mixes (seed, tag) into an independent 64-bit seed so that e.g. environment
// randomness and weight init never share a sequence.
uint64_t derive_seed(uint64_t seed, uint64_t tag);
Rng derive_rng(uint64_t seed, uint64_t tag);

// Orthogonal init for a rows x cols weight matrix (rows orthonormal if
// rows <= cols, else columns), scaled by gain. Conv weights are initialized
// by flattening all non-output dims into the columns.
std::vector<double> orthogonal_matrix(int rows, int cols, double gain, Rng& rng);

Tensor orthogonal_param(const Shape& shape, double gain, Rng& rng);

}  // namespace ife
