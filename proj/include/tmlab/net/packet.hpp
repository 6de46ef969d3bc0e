#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "tmlab/net/address.hpp"
#include "tmlab/net/bytes.hpp"

namespace tmlab::net {

enum class IpProtocol : std::uint8_t { Icmp = 1, Tcp = 6, Udp = 17 };

struct Ipv4Header {
  std::uint8_t version = 4;
  std::uint8_t header_length_words = 5;
  std::uint8_t tos = 0;
  std::uint16_t total_length = 0;
  std::uint16_t identification = 0;
  std::uint16_t flags_fragment = 0;
  std::uint8_t ttl = 64;
  IpProtocol protocol = IpProtocol::Tcp;
  std::uint16_t header_checksum = 0;
  Ipv4Address src;
  Ipv4Address dst;

  bool operator==(const Ipv4Header&) const = default;
};

inline constexpr std::size_t kIpv4HeaderSize = 20;
inline constexpr std::size_t kTcpHeaderSize = 20;
inline constexpr std::size_t kUdpHeaderSize = 8;
inline constexpr std::size_t kIcmpHeaderSize = 8;

// TCP control bits. Text form uses the single-letter convention
// F S R P A U E C, emitted in that order ("PA" is PSH+ACK).
class TcpFlags {
 public:
  static constexpr std::uint8_t FIN = 0x01;
  static constexpr std::uint8_t SYN = 0x02;
  static constexpr std::uint8_t RST = 0x04;
  static constexpr std::uint8_t PSH = 0x08;
  static constexpr std::uint8_t ACK = 0x10;
  static constexpr std::uint8_t URG = 0x20;
  static constexpr std::uint8_t ECE = 0x40;
  static constexpr std::uint8_t CWR = 0x80;

  constexpr TcpFlags() = default;
  constexpr TcpFlags(std::uint8_t bits) : bits_(bits) {}  // NOLINT: implicit on purpose

  static std::optional<TcpFlags> parse(std::string_view letters);

  constexpr std::uint8_t bits() const { return bits_; }
  constexpr bool has(std::uint8_t mask) const { return (bits_ & mask) != 0; }
  constexpr bool has_all(std::uint8_t mask) const { return (bits_ & mask) == mask; }
  std::string to_string() const;

  constexpr bool operator==(const TcpFlags&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

struct TcpSegment {
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  std::uint8_t data_offset_words = 5;
  TcpFlags flags;
  std::uint16_t window = 65535;
  std::uint16_t checksum = 0;
  std::uint16_t urgent_pointer = 0;
  Bytes options;
  Bytes payload;

  bool operator==(const TcpSegment&) const = default;
};

struct UdpDatagram {
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint16_t length = kUdpHeaderSize;
  std::uint16_t checksum = 0;
  Bytes payload;

  bool operator==(const UdpDatagram&) const = default;
};

// Only Time Exceeded (type 11) is produced in the lab; other types decode
// but carry no interpretation.
struct IcmpMessage {
  static constexpr std::uint8_t kTimeExceeded = 11;

  std::uint8_t type = kTimeExceeded;
  std::uint8_t code = 0;
  std::uint16_t checksum = 0;
  std::uint32_t rest_of_header = 0;
  Bytes payload;

  bool operator==(const IcmpMessage&) const = default;
};

using Transport = std::variant<TcpSegment, UdpDatagram, IcmpMessage>;

struct PacketEnvelope {
  Ipv4Header ip;
  Transport transport;

  bool is_tcp() const { return std::holds_alternative<TcpSegment>(transport); }
  bool is_udp() const { return std::holds_alternative<UdpDatagram>(transport); }
  bool is_icmp() const { return std::holds_alternative<IcmpMessage>(transport); }
  const TcpSegment& tcp() const { return std::get<TcpSegment>(transport); }
  TcpSegment& tcp() { return std::get<TcpSegment>(transport); }
  const UdpDatagram& udp() const { return std::get<UdpDatagram>(transport); }
  UdpDatagram& udp() { return std::get<UdpDatagram>(transport); }
  const IcmpMessage& icmp() const { return std::get<IcmpMessage>(transport); }
  IcmpMessage& icmp() { return std::get<IcmpMessage>(transport); }

  // Application bytes of TCP/UDP, empty for ICMP.
  ByteView payload() const;
  std::uint16_t src_port() const;
  std::uint16_t dst_port() const;

  bool operator==(const PacketEnvelope&) const = default;
};

// Writes every field verbatim; nothing is recomputed.
Bytes encode_packet(const PacketEnvelope& env);

// Throws MalformedPacket on truncation, header_length_words < 5, IP options,
// inconsistent lengths or an unsupported protocol.
PacketEnvelope decode_packet(ByteView bytes);

// Sets all length fields and recomputes IP and transport checksums.
void finalize(PacketEnvelope& env);
// Length fields only; checksums untouched.
void finalize_lengths(PacketEnvelope& env);
// Recompute only the transport checksum (lengths must already be final).
void recompute_transport_checksum(PacketEnvelope& env);
void recompute_ip_checksum(PacketEnvelope& env);

bool ip_checksum_valid(const PacketEnvelope& env);
bool transport_checksum_valid(const PacketEnvelope& env);

struct TcpPacketSpec {
  Ipv4Address src;
  std::uint16_t src_port = 0;
  Ipv4Address dst;
  std::uint16_t dst_port = 0;
  TcpFlags flags;
  std::uint32_t seq = 0;
  std::uint32_t ack = 0;
  Bytes payload;
  std::uint16_t ip_id = 0;
  std::uint8_t ttl = 64;
  std::uint16_t window = 65535;
};

struct UdpPacketSpec {
  Ipv4Address src;
  std::uint16_t src_port = 0;
  Ipv4Address dst;
  std::uint16_t dst_port = 0;
  Bytes payload;
  std::uint16_t ip_id = 0;
  std::uint8_t ttl = 64;
};

PacketEnvelope make_tcp_packet(TcpPacketSpec spec);
PacketEnvelope make_udp_packet(UdpPacketSpec spec);
// ICMP Time Exceeded from `router` quoting the IP header and first eight
// transport bytes of `original`.
PacketEnvelope make_time_exceeded(Ipv4Address router, const PacketEnvelope& original,
                                  std::uint16_t ip_id = 0, std::uint8_t ttl = 64);

// For a Time Exceeded message: the quoted original packet's addressing,
// when enough of it is present.
struct QuotedHeader {
  Ipv4Address src;
  Ipv4Address dst;
  IpProtocol protocol = IpProtocol::Tcp;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t ttl = 0;
};
std::optional<QuotedHeader> quoted_header(const IcmpMessage& icmp);

// One-line human summary used by traces.
std::string describe(const PacketEnvelope& env);

}  // namespace tmlab::net
