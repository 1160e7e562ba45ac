#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace ckit {

// 64-bit FNV-1a. Stable across platforms; used for stream derivation and
// corpus fingerprints.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t splitmix64(std::uint64_t x);

// Seed for the random stream of (seed, tag, index). Every shuffle in a
// curriculum draws from the stream of its (seed, strategy, epoch) so a single
// epoch can be regenerated without replaying the ones before it.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index);

// mt19937_64 with a portable bounded draw. std::uniform_int_distribution and
// std::shuffle are implementation-defined, so they are not used for anything
// that ends up in a manifest.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller (portable, unlike std::normal_distribution).
  double normal();

 private:
  std::mt19937_64 engine_;
};

// Fisher-Yates, back to front.
template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace ckit
