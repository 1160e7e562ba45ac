#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ckit {

// Splits a sequence of positive weights into `segments` non-empty contiguous
// runs whose weight totals are as even as possible. Boundary s is placed at
// the position whose prefix total is closest to (s+1)/segments of the whole
// (earlier position on a tie), never reordering the input. Returns the
// exclusive end index of each segment.
std::vector<std::size_t> balanced_segment_ends(std::span<const std::uint64_t> weights, std::size_t segments);

}  // namespace ckit
