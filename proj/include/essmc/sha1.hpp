#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "essmc/errors.hpp"

// Minimal SHA-1, used for content-addressed provenance of run artifacts.
// The git_blob_sha1 variant matches `git hash-object` on the same bytes.

namespace essmc {

class Sha1 {
 public:
  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    total_ += len;
    while (len > 0) {
      const std::size_t take = std::min(len, std::size_t(64) - fill_);
      std::memcpy(buf_.data() + fill_, p, take);
      fill_ += take;
      p += take;
      len -= take;
      if (fill_ == 64) {
        process_block();
        fill_ = 0;
      }
    }
  }

  std::string hex_digest() {
    const std::uint64_t bits = total_ * 8;
    const std::uint8_t pad = 0x80;
    update(&pad, 1);
    const std::uint8_t zero = 0;
    while (fill_ != 56) update(&zero, 1);
    std::uint8_t len_be[8];
    for (int i = 0; i < 8; ++i)
      len_be[i] = std::uint8_t(bits >> (56 - 8 * i));
    update(len_be, 8);

    static const char* hexc = "0123456789abcdef";
    std::string out;
    out.reserve(40);
    for (const std::uint32_t word : h_)
      for (int i = 28; i >= 0; i -= 4) out.push_back(hexc[(word >> i) & 0xF]);
    return out;
  }

 private:
  void process_block() {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(buf_[4 * i]) << 24) |
             (std::uint32_t(buf_[4 * i + 1]) << 16) |
             (std::uint32_t(buf_[4 * i + 2]) << 8) |
             std::uint32_t(buf_[4 * i + 3]);
    for (int i = 16; i < 80; ++i)
      w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);

    std::uint32_t a = h_[0], b = h_[1], c = h_[2], d = h_[3], e = h_[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDC;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6;
      }
      const std::uint32_t tmp = rotl(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rotl(b, 30);
      b = a;
      a = tmp;
    }
    h_[0] += a;
    h_[1] += b;
    h_[2] += c;
    h_[3] += d;
    h_[4] += e;
  }

  static std::uint32_t rotl(std::uint32_t x, int s) {
    return (x << s) | (x >> (32 - s));
  }

  std::array<std::uint32_t, 5> h_{0x67452301, 0xEFCDAB89, 0x98BADCFE,
                                  0x10325476, 0xC3D2E1F0};
  std::array<std::uint8_t, 64> buf_{};
  std::size_t fill_ = 0;
  std::uint64_t total_ = 0;
};

inline std::string sha1_hex(const void* data, std::size_t len) {
  Sha1 h;
  h.update(data, len);
  return h.hex_digest();
}

inline std::string sha1_hex(const std::string& s) {
  return sha1_hex(s.data(), s.size());
}

// Hash as git would: "blob <size>\0" prefix, then the content.
inline std::string git_blob_sha1(const void* data, std::size_t len) {
  Sha1 h;
  const std::string prefix = "blob " + std::to_string(len) + '\0';
  h.update(prefix.data(), prefix.size());
  h.update(data, len);
  return h.hex_digest();
}

inline std::string git_blob_sha1_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for hashing: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return git_blob_sha1(bytes.data(), bytes.size());
}

// Content hash of the running executable, cached after the first call.
inline const std::string& binary_sha1_self() {
  static const std::string digest = [] {
    try {
      return git_blob_sha1_file("/proc/self/exe");
    } catch (const Error&) {
      return std::string("unavailable");
    }
  }();
  return digest;
}

}  // namespace essmc
