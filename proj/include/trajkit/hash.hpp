// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace trajkit {

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// Standard base64 (RFC 4648) with padding.
std::string base64_encode(std::string_view data);

/// Stable 64-bit string hash (FNV-1a); identical across platforms.
std::uint64_t stable_hash(std::string_view s);

/// SplitMix64 finalizer, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x);

inline std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t value) {
  return mix_seed(seed ^ mix_seed(value + 0x9e3779b97f4a7c15ULL));
}

}  // namespace trajkit
