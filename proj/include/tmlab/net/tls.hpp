#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "tmlab/net/bytes.hpp"

namespace tmlab::net {

inline constexpr std::uint8_t kTlsHandshakeRecord = 22;
inline constexpr std::uint8_t kTlsClientHello = 1;
inline constexpr std::size_t kTlsRecordHeaderSize = 5;

struct ByteSpan {
  std::size_t offset = 0;
  std::size_t length = 0;

  std::size_t end() const { return offset + length; }
  bool operator==(const ByteSpan&) const = default;
};

// A single-record TLS 1.2-style ClientHello. Bytes 0-4 are the record
// header, 5-8 the handshake header.
class TlsClientHelloBytes {
 public:
  TlsClientHelloBytes() = default;
  // Throws MalformedPacket unless strict_tls_sni would accept `raw`.
  explicit TlsClientHelloBytes(Bytes raw);

  const Bytes& raw() const { return raw_; }
  std::uint8_t content_type() const { return raw_[0]; }
  std::uint16_t legacy_version() const { return static_cast<std::uint16_t>((raw_[1] << 8) | raw_[2]); }
  std::uint16_t record_length() const { return static_cast<std::uint16_t>((raw_[3] << 8) | raw_[4]); }
  std::uint8_t handshake_type() const { return raw_[5]; }
  std::uint32_t handshake_length() const {
    return (std::uint32_t{raw_[6]} << 16) | (std::uint32_t{raw_[7]} << 8) | raw_[8];
  }
  const std::string& sni() const { return sni_; }
  // The host_name bytes themselves within raw().
  ByteSpan sni_span() const { return sni_span_; }

 private:
  Bytes raw_;
  std::string sni_;
  ByteSpan sni_span_;
};

// The server_name extension comes first, so the name sits at a fixed
// offset (67) for every SNI.
TlsClientHelloBytes build_client_hello(std::string_view sni);

// Full structural parse of one record holding one ClientHello with exactly
// one host_name entry of 1..255 visible ASCII bytes.
std::optional<std::string> strict_tls_sni(ByteView bytes);

// As strict_tls_sni, also reporting where the name lies.
struct TlsSniLocation {
  std::string name;
  ByteSpan span;
};
std::optional<TlsSniLocation> locate_tls_sni(ByteView bytes);

}  // namespace tmlab::net
