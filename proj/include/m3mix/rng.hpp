#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace m3mix {

// Counter-based generator: output n is splitmix64(key + n * golden), where the key
// is derived from (seed, stream). 64-bit counter state; distinct streams never share
// a key, so parallel chains seeded with one seed and different stream ids are
// reproducible and independent.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  double uniform();  // [0, 1)
  double normal();
  double gamma(double shape);  // unit scale
  double chiSquared(double dof);
  // Index drawn proportionally to non-negative weights. Weights need not be normalized.
  std::size_t categorical(std::span<const double> weights);

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace m3mix
