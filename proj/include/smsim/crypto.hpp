#pragma once

#include <stdexcept>
#include <string_view>

#include "smsim/bytes.hpp"

// Thin wrapper over libcrypto. Hash algorithms are selected by a configuration
// label: "SHA-256" (default), "SHA-1" or "MD5".
namespace smsim::crypto {

class CryptoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kDefaultHash = "SHA-256";

bool is_supported_hash(std::string_view label);

Bytes hash(std::string_view label, ByteView data);

/// HMAC over the labelled hash.
Bytes keyed_hash(std::string_view label, ByteView key, ByteView data);

/// Constant-time comparison for tags of equal length.
bool equal_tags(ByteView a, ByteView b);

}  // namespace smsim::crypto
