#ifndef HOMCTX_RNG_HPP
#define HOMCTX_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "error.hpp"

namespace homctx {

/// mt19937_64 with hand-rolled output transforms so streams are pinned to the
/// engine alone (identical seed, identical draws, on any platform).
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t raw() { return gen_(); }

  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }  // [0, 1)

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    const int span = hi - lo + 1;
    int v = lo + static_cast<int>(uniform() * span);
    return v > hi ? hi : v;
  }

  double normal() {  // Box-Muller, no caching
    double u1 = uniform();
    while (u1 <= 0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793 * u2);
  }

  /// Draw an index proportional to non-negative weights.
  int categorical(std::span<const double> weights) {
    double total = 0;
    for (double w : weights) total += w;
    if (!(total > 0)) fail(ErrorCode::numeric, "categorical: weights sum to zero");
    double u = uniform() * total;
    for (size_t i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace homctx

#endif
