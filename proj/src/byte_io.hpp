#pragma once

// Little-endian encoding helpers shared by the snapshot and checkpoint formats.

#include "cpd/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace cpd::detail {

std::uint32_t crc32_bytes(std::span<const unsigned char> bytes);

class ByteWriter {
 public:
  template <class T>
  void put(T value) {
    static_assert(std::is_integral_v<T> || (std::is_floating_point_v<T> && sizeof(T) == 8));
    std::uint64_t bits = 0;
    if constexpr (std::is_floating_point_v<T>)
      bits = std::bit_cast<std::uint64_t>(value);
    else
      bits = static_cast<std::uint64_t>(value);
    for (std::size_t k = 0; k < sizeof(T); ++k) buf_.push_back(static_cast<unsigned char>(bits >> (8 * k)));
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void put_crc() { put(crc32_bytes(buf_)); }
  std::vector<unsigned char>& bytes() { return buf_; }
  void clear() { buf_.clear(); }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    std::uint64_t bits = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) bits |= static_cast<std::uint64_t>(bytes_[pos_ + k]) << (8 * k);
    pos_ += sizeof(T);
    if constexpr (std::is_floating_point_v<T>)
      return std::bit_cast<T>(bits);
    else
      return static_cast<T>(bits);
  }
  const unsigned char* take(std::size_t n) {
    need(n);
    const unsigned char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("truncated data");
  }
  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace cpd::detail
