#include "splitkit/digest.hpp"

namespace splitkit {

std::string Digest::hex() const {
  static const char* kDigits = "0123456789abcdef";
  std::string out(16, '0');
  std::uint64_t v = state_;
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace splitkit
