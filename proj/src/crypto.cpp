#include "smsim/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <string>

namespace smsim::crypto {

namespace {
const EVP_MD* lookup(std::string_view label) {
  if (label == "SHA-256") return EVP_sha256();
  if (label == "SHA-1") return EVP_sha1();
  if (label == "MD5") return EVP_md5();
  return nullptr;
}

const EVP_MD* require(std::string_view label) {
  const EVP_MD* md = lookup(label);
  if (md == nullptr) throw CryptoError("unsupported hash label: " + std::string(label));
  return md;
}
}  // namespace

bool is_supported_hash(std::string_view label) { return lookup(label) != nullptr; }

Bytes hash(std::string_view label, ByteView data) {
  const EVP_MD* md = require(label);
  Bytes out(static_cast<std::size_t>(EVP_MD_get_size(md)));
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1) {
    throw CryptoError("digest computation failed");
  }
  out.resize(len);
  return out;
}

Bytes keyed_hash(std::string_view label, ByteView key, ByteView data) {
  const EVP_MD* md = require(label);
  Bytes out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  // HMAC() rejects a null key pointer even for zero length.
  static const std::uint8_t kEmpty = 0;
  const std::uint8_t* key_ptr = key.empty() ? &kEmpty : key.data();
  if (HMAC(md, key_ptr, static_cast<int>(key.size()), data.data(), data.size(), out.data(), &len) ==
      nullptr) {
    throw CryptoError("keyed hash computation failed");
  }
  out.resize(len);
  return out;
}

bool equal_tags(ByteView a, ByteView b) {
  return a.size() == b.size() && CRYPTO_memcmp(a.data(), b.data(), a.size()) == 0;
}

}  // namespace smsim::crypto
