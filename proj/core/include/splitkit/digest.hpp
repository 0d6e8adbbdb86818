#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace splitkit {

// Streaming FNV-1a (64-bit) content digest. This is an integrity check for
// manifests and caches, not a cryptographic hash.
class Digest {
 public:
  Digest& update(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }

  Digest& update(std::string_view s) { return update(s.data(), s.size()); }

  template <typename T>
  Digest& update_value(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    return update(&v, sizeof(v));
  }

  std::uint64_t value() const { return state_; }

  // 16 lowercase hex characters.
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string digest_hex(std::string_view bytes) {
  return Digest().update(bytes).hex();
}

}  // namespace splitkit
