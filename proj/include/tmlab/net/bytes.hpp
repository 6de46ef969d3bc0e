#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tmlab::net {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string to_string(ByteView b) {
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

inline ByteView as_view(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Raised by every decoder in this module when a buffer cannot hold the
// structure it claims to hold. `offset` is where decoding stopped.
class MalformedPacket : public std::runtime_error {
 public:
  MalformedPacket(std::string what, std::size_t offset)
      : std::runtime_error(std::move(what)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Big-endian appender.
class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void u24(std::uint32_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 16));
    u16(static_cast<std::uint16_t>(v));
  }
  void u32(std::uint32_t v) {
    u16(static_cast<std::uint16_t>(v >> 16));
    u16(static_cast<std::uint16_t>(v));
  }
  void bytes(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void bytes(std::string_view s) { bytes(as_view(s)); }

  std::size_t size() const { return out_.size(); }

  // Overwrite a previously reserved 16-bit slot.
  void patch_u16(std::size_t at, std::uint16_t v) {
    out_.at(at) = static_cast<std::uint8_t>(v >> 8);
    out_.at(at + 1) = static_cast<std::uint8_t>(v);
  }
  void patch_u24(std::size_t at, std::uint32_t v) {
    out_.at(at) = static_cast<std::uint8_t>(v >> 16);
    patch_u16(at + 1, static_cast<std::uint16_t>(v));
  }

 private:
  Bytes& out_;
};

// Big-endian cursor that throws MalformedPacket on overrun.
class ByteReader {
 public:
  explicit ByteReader(ByteView data, std::size_t pos = 0) : data_(data), pos_(pos) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::uint32_t u24() {
    need(3);
    std::uint32_t v = (std::uint32_t{data_[pos_]} << 16) | (std::uint32_t{data_[pos_ + 1]} << 8) |
                      data_[pos_ + 2];
    pos_ += 3;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t hi = u16();
    return (hi << 16) | u16();
  }
  ByteView take(std::size_t n) {
    need(n);
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  void skip(std::size_t n) { take(n); }

  std::size_t pos() const { return pos_; }
  void seek(std::size_t p) {
    if (p > data_.size()) throw MalformedPacket("seek past end", p);
    pos_ = p;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool empty() const { return pos_ >= data_.size(); }
  ByteView data() const { return data_; }

 private:
  void need(std::size_t n) const {
    if (n > data_.size() - pos_) throw MalformedPacket("truncated buffer", pos_);
  }

  ByteView data_;
  std::size_t pos_;
};

}  // namespace tmlab::net
