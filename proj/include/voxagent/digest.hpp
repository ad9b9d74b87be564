#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace voxagent {

using Bytes = std::vector<std::uint8_t>;

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view text);

/// Canonical text form used everywhere a JSON value is hashed or written:
/// sorted keys, no insignificant whitespace, shortest round-trip numbers.
std::string canonical(const nlohmann::json& value);

inline std::string digest_of(const nlohmann::json& value) {
  return sha256_hex(canonical(value));
}

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

/// Rounds to a fixed number of decimals, half away from zero.
double round_to(double value, int decimals);

Bytes read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> data);
void write_file_text(const std::string& path, std::string_view text);

inline std::span<const std::uint8_t> as_bytes(std::string_view text) {
  return {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()};
}

}  // namespace voxagent
