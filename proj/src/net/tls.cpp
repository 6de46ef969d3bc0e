#include "tmlab/net/tls.hpp"

#include <array>

#include "tmlab/net/http.hpp"

namespace tmlab::net {
namespace {

constexpr std::uint16_t kExtServerName = 0x0000;
constexpr std::uint16_t kExtSupportedGroups = 0x000a;
constexpr std::uint16_t kExtSignatureAlgorithms = 0x000d;
constexpr std::uint8_t kHostNameType = 0;

constexpr std::array<std::uint16_t, 4> kCipherSuites = {0xc02f, 0xc030, 0xc02b, 0x009c};

std::optional<TlsSniLocation> parse_server_name(ByteReader& r, std::size_t ext_end) {
  std::size_t list_len = r.u16();
  if (r.pos() + list_len != ext_end) return std::nullopt;
  std::optional<TlsSniLocation> found;
  while (r.pos() < ext_end) {
    std::uint8_t type = r.u8();
    std::size_t len = r.u16();
    std::size_t at = r.pos();
    auto name = r.take(len);
    if (r.pos() > ext_end) return std::nullopt;
    if (type != kHostNameType) continue;
    if (found) return std::nullopt;
    found = TlsSniLocation{to_string(name), {at, len}};
  }
  return found;
}

}  // namespace

std::optional<TlsSniLocation> locate_tls_sni(ByteView bytes) {
  try {
    ByteReader r(bytes);
    if (r.u8() != kTlsHandshakeRecord) return std::nullopt;
    if (r.u8() != 0x03) return std::nullopt;
    r.u8();
    std::size_t record_len = r.u16();
    if (bytes.size() != kTlsRecordHeaderSize + record_len) return std::nullopt;
    if (r.u8() != kTlsClientHello) return std::nullopt;
    std::size_t hs_len = r.u24();
    if (hs_len + 4 != record_len) return std::nullopt;

    r.skip(2);   // client version
    r.skip(32);  // random
    r.skip(r.u8());
    std::size_t suites = r.u16();
    if (suites == 0 || suites % 2 != 0) return std::nullopt;
    r.skip(suites);
    std::size_t compression = r.u8();
    if (compression == 0) return std::nullopt;
    r.skip(compression);
    if (r.empty()) return std::nullopt;
    std::size_t ext_total = r.u16();
    if (r.remaining() != ext_total) return std::nullopt;

    std::optional<TlsSniLocation> sni;
    while (!r.empty()) {
      std::uint16_t type = r.u16();
      std::size_t len = r.u16();
      std::size_t end = r.pos() + len;
      if (end > bytes.size()) return std::nullopt;
      if (type == kExtServerName) {
        if (sni) return std::nullopt;
        sni = parse_server_name(r, end);
        if (!sni) return std::nullopt;
      }
      r.seek(end);
    }
    if (!sni || sni->name.empty() || sni->name.size() > 255 || !is_visible_ascii(sni->name)) {
      return std::nullopt;
    }
    return sni;
  } catch (const MalformedPacket&) {
    return std::nullopt;
  }
}

std::optional<std::string> strict_tls_sni(ByteView bytes) {
  auto loc = locate_tls_sni(bytes);
  if (!loc) return std::nullopt;
  return std::move(loc->name);
}

TlsClientHelloBytes::TlsClientHelloBytes(Bytes raw) : raw_(std::move(raw)) {
  auto loc = locate_tls_sni(raw_);
  if (!loc) throw MalformedPacket("not a single-record ClientHello with one SNI", 0);
  sni_ = std::move(loc->name);
  sni_span_ = loc->span;
}

TlsClientHelloBytes build_client_hello(std::string_view sni) {
  Bytes out;
  ByteWriter w(out);
  w.u8(kTlsHandshakeRecord);
  w.u16(0x0301);
  std::size_t record_len_at = w.size();
  w.u16(0);
  w.u8(kTlsClientHello);
  std::size_t hs_len_at = w.size();
  w.u24(0);
  w.u16(0x0303);
  for (int i = 0; i < 32; ++i) w.u8(static_cast<std::uint8_t>(0xa0 + i));
  w.u8(0);  // empty session id
  w.u16(static_cast<std::uint16_t>(kCipherSuites.size() * 2));
  for (auto cs : kCipherSuites) w.u16(cs);
  w.u8(1);
  w.u8(0);  // null compression
  std::size_t ext_len_at = w.size();
  w.u16(0);

  w.u16(kExtServerName);
  w.u16(static_cast<std::uint16_t>(sni.size() + 5));
  w.u16(static_cast<std::uint16_t>(sni.size() + 3));
  w.u8(kHostNameType);
  w.u16(static_cast<std::uint16_t>(sni.size()));
  w.bytes(sni);

  w.u16(kExtSupportedGroups);
  w.u16(6);
  w.u16(4);
  w.u16(0x001d);
  w.u16(0x0017);

  w.u16(kExtSignatureAlgorithms);
  w.u16(6);
  w.u16(4);
  w.u16(0x0403);
  w.u16(0x0804);

  w.patch_u16(ext_len_at, static_cast<std::uint16_t>(out.size() - ext_len_at - 2));
  w.patch_u24(hs_len_at, static_cast<std::uint32_t>(out.size() - hs_len_at - 3));
  w.patch_u16(record_len_at, static_cast<std::uint16_t>(out.size() - kTlsRecordHeaderSize));
  return TlsClientHelloBytes(std::move(out));
}

}  // namespace tmlab::net
