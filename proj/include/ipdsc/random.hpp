#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>
#include <vector>

namespace ipdsc {

// All randomness flows through a 64-bit Mersenne twister. Its output sequence
// is fixed by the standard; the distributions below are written out by hand
// because std::uniform_*_distribution is implementation-defined.
using rng_type = std::mt19937_64;

// Seeds an engine from several 64-bit words (e.g. dataset seed + config index)
// so that independent streams can be derived deterministically.
inline rng_type make_rng(std::initializer_list<std::uint64_t> words) {
  std::vector<std::uint32_t> seq;
  seq.reserve(words.size() * 2);
  for (auto w : words) {
    seq.push_back(static_cast<std::uint32_t>(w));
    seq.push_back(static_cast<std::uint32_t>(w >> 32));
  }
  std::seed_seq ss(seq.begin(), seq.end());
  return rng_type(ss);
}

// Uniform on [0, 1) with 53 bits of resolution.
inline double uniform01(rng_type& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on the open interval (0, 1); the zero endpoint is resampled.
inline double uniform_open01(rng_type& rng) {
  for (;;) {
    const double u = uniform01(rng);
    if (u > 0.0) return u;
  }
}

// Unbiased integer in [0, bound) by rejection. bound must be positive.
inline std::uint64_t uniform_below(rng_type& rng, std::uint64_t bound) {
  const std::uint64_t limit = rng_type::max() - rng_type::max() % bound;
  for (;;) {
    const std::uint64_t x = rng();
    if (x < limit) return x % bound;
  }
}

template <typename T>
void shuffle(std::vector<T>& items, rng_type& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace ipdsc
