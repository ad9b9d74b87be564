#pragma once

#include <cstdint>
#include <vector>

#include "voxagent/digest.hpp"

namespace voxagent {

/// 8-bit single-channel image, row-major, row 0 first.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
  bool operator==(const GrayImage&) const = default;
};

/// Deterministic PNG (grayscale, bit depth 8, filter 0 on every row,
/// zlib level 6). Identical images always yield identical bytes.
Bytes encode_png(const GrayImage& image);

/// Decodes the subset of PNG that encode_png produces (gray8, filter 0,
/// non-interlaced). Throws Error(Malformed) on anything else.
GrayImage decode_png(std::span<const std::uint8_t> png);

}  // namespace voxagent
