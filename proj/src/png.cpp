#include "voxagent/png.hpp"

#include <zlib.h>

#include <array>
#include <cstring>

#include "voxagent/error.hpp"

namespace voxagent {
namespace {

constexpr std::array<std::uint8_t, 8> kSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

void put_u32(Bytes& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  return (std::uint32_t{in[at]} << 24) | (std::uint32_t{in[at + 1]} << 16) |
         (std::uint32_t{in[at + 2]} << 8) | std::uint32_t{in[at + 3]};
}

void put_chunk(Bytes& out, const char type[4], const Bytes& data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t crc_from = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + crc_from, static_cast<uInt>(out.size() - crc_from));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

Bytes encode_png(const GrayImage& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.pixels.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw Error(Errc::BadArgs, "image dimensions do not match pixel buffer");
  }
  Bytes raw;
  raw.reserve(static_cast<std::size_t>(image.width + 1) * image.height);
  for (int r = 0; r < image.height; ++r) {
    raw.push_back(0);
    const auto* row = image.pixels.data() + static_cast<std::size_t>(r) * image.width;
    raw.insert(raw.end(), row, row + image.width);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  Bytes packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
    throw Error(Errc::Io, "zlib compression failed");
  }
  packed.resize(packed_size);

  Bytes out(kSignature.begin(), kSignature.end());
  Bytes ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.insert(ihdr.end(), {8, 0, 0, 0, 0});
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

GrayImage decode_png(std::span<const std::uint8_t> png) {
  if (png.size() < kSignature.size() ||
      std::memcmp(png.data(), kSignature.data(), kSignature.size()) != 0) {
    throw Error(Errc::Malformed, "not a PNG");
  }
  GrayImage image;
  Bytes packed;
  std::size_t at = kSignature.size();
  bool seen_end = false;
  while (at + 12 <= png.size()) {
    const std::uint32_t len = get_u32(png, at);
    if (at + 12 + len > png.size()) break;
    const std::string type(reinterpret_cast<const char*>(png.data() + at + 4), 4);
    const auto data = png.subspan(at + 8, len);
    if (type == "IHDR") {
      if (len != 13) throw Error(Errc::Malformed, "bad IHDR");
      image.width = static_cast<int>(get_u32(data, 0));
      image.height = static_cast<int>(get_u32(data, 4));
      if (data[8] != 8 || data[9] != 0 || data[12] != 0) {
        throw Error(Errc::Malformed, "only 8-bit grayscale non-interlaced PNG supported");
      }
    } else if (type == "IDAT") {
      packed.insert(packed.end(), data.begin(), data.end());
    } else if (type == "IEND") {
      seen_end = true;
      break;
    }
    at += 12 + len;
  }
  if (!seen_end || image.width <= 0 || image.height <= 0) throw Error(Errc::Malformed, "truncated PNG");

  const std::size_t stride = static_cast<std::size_t>(image.width) + 1;
  Bytes raw(stride * image.height);
  uLongf raw_size = static_cast<uLongf>(raw.size());
  if (uncompress(raw.data(), &raw_size, packed.data(), static_cast<uLong>(packed.size())) != Z_OK ||
      raw_size != raw.size()) {
    throw Error(Errc::Malformed, "bad PNG image data");
  }
  image.pixels.reserve(static_cast<std::size_t>(image.width) * image.height);
  for (int r = 0; r < image.height; ++r) {
    if (raw[r * stride] != 0) throw Error(Errc::Malformed, "unsupported PNG filter");
    image.pixels.insert(image.pixels.end(), raw.begin() + r * stride + 1, raw.begin() + (r + 1) * stride);
  }
  return image;
}

}  // namespace voxagent
