#pragma once

// Portable random streams. The engine is std::mt19937_64, whose output is
// fixed by the standard; the distributions below are written out by hand
// because std::*_distribution output differs between standard libraries.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace micropump {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Mixes a base seed with stream identifiers into an independent seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream) noexcept;

std::uint64_t double_bits(double value) noexcept;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform on {0, ..., n - 1} without modulo bias.
  std::size_t index(std::size_t n);
  double normal();

  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

  // k distinct indices from {0, ..., n - 1}, in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace micropump
