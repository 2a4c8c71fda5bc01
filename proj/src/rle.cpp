#include "active_vision/rle.hpp"

#include "active_vision/errors.hpp"

#include <string>

namespace active_vision {

std::vector<std::uint32_t> rle_encode(const Mask& mask, int width, int height) {
  if (width < 0 || height < 0 || mask.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidInput("mask size does not match width*height");
  }
  std::vector<std::uint32_t> runs;
  bool current = false;
  std::uint32_t length = 0;
  for (bool bit : mask) {
    if (bit != current) {
      runs.push_back(length);
      current = bit;
      length = 0;
    }
    ++length;
  }
  runs.push_back(length);
  return runs;
}

Mask rle_decode(const std::vector<std::uint32_t>& runs, int width, int height) {
  const std::uint64_t expected = static_cast<std::uint64_t>(width) * static_cast<std::uint64_t>(height);
  std::uint64_t total = 0;
  for (auto run : runs) total += run;
  if (width < 0 || height < 0 || total != expected) {
    throw ProtocolError("rle runs sum to " + std::to_string(total) + ", expected " + std::to_string(expected));
  }
  Mask mask;
  mask.reserve(expected);
  bool bit = false;
  for (auto run : runs) {
    mask.insert(mask.end(), run, bit);
    bit = !bit;
  }
  return mask;
}

}  // namespace active_vision
