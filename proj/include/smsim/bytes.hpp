#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smsim {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

/// Virtual simulation time in milliseconds.
using SimTime = std::int64_t;

inline constexpr SimTime kSecond = 1000;
inline constexpr SimTime kMinute = 60 * kSecond;
inline constexpr SimTime kHour = 60 * kMinute;

/// Lowercase hex, two characters per byte.
std::string to_hex(ByteView data);

/// Accepts upper- or lowercase hex; throws std::invalid_argument on odd
/// length or a non-hex character.
Bytes from_hex(std::string_view hex);

Bytes to_bytes(std::string_view text);
std::string to_text(ByteView data);

/// Service short codes are 5 or 6 decimal digits.
bool is_short_code(std::string_view number);

bool is_digit_string(std::string_view s);

/// Splitmix64 step; used to derive independent per-component seeds from a
/// scenario seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace smsim
