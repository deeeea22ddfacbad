#pragma once

#include <span>
#include <string>
#include <string_view>

namespace fedsim::util {

// Incremental SHA-256 over OpenSSL's EVP interface.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const unsigned char> bytes);
  Sha256& update(std::string_view text);
  Sha256& update_u64(unsigned long long value);
  Sha256& update_f64(double value);

  // Lowercase hex digest; the object cannot be updated afterwards.
  std::string hex_digest();

 private:
  struct Impl;
  Impl* impl_;
};

std::string sha256_hex(std::string_view text);

}  // namespace fedsim::util
