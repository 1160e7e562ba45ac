#include "ckit/segments.hpp"

#include <algorithm>
#include <string>

#include "ckit/error.hpp"

namespace ckit {

std::vector<std::size_t> balanced_segment_ends(std::span<const std::uint64_t> weights, std::size_t segments) {
  const std::size_t n = weights.size();
  if (segments == 0) throw Error("segment count must be >= 1");
  if (segments > n) {
    throw Error("cannot split " + std::to_string(n) + " items into " + std::to_string(segments) + " segments");
  }
  std::vector<std::uint64_t> prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + weights[i];

  using Wide = unsigned __int128;
  const Wide m = segments;
  const auto distance = [&](std::size_t j, Wide target) {
    const Wide v = m * prefix[j];
    return v > target ? v - target : target - v;
  };

  std::vector<std::size_t> ends;
  ends.reserve(segments);
  std::size_t prev = 0;
  for (std::size_t s = 0; s + 1 < segments; ++s) {
    const std::size_t lo = prev + 1;
    const std::size_t hi = n - (segments - 1 - s);
    const Wide target = static_cast<Wide>(s + 1) * prefix[n];
    // First j in [lo, hi] with m * prefix[j] >= target.
    const auto it = std::partition_point(prefix.begin() + static_cast<std::ptrdiff_t>(lo),
                                         prefix.begin() + static_cast<std::ptrdiff_t>(hi) + 1,
                                         [&](std::uint64_t p) { return m * p < target; });
    std::size_t j = std::min<std::size_t>(static_cast<std::size_t>(it - prefix.begin()), hi);
    if (j > lo && distance(j - 1, target) <= distance(j, target)) --j;
    ends.push_back(j);
    prev = j;
  }
  ends.push_back(n);
  return ends;
}

}  // namespace ckit
