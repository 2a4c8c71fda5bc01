#pragma once

#include <cstdint>
#include <vector>

namespace active_vision {

/// Binary mask in row-major order.
using Mask = std::vector<bool>;

/// Alternating run lengths over row-major order; the first run counts zeros
/// and may be 0. Throws InvalidInput if mask.size() != width * height.
std::vector<std::uint32_t> rle_encode(const Mask& mask, int width, int height);

/// Throws ProtocolError if the runs do not sum to width * height.
Mask rle_decode(const std::vector<std::uint32_t>& runs, int width, int height);

}  // namespace active_vision
