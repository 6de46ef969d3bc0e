#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tmlab/net/address.hpp"
#include "tmlab/net/bytes.hpp"

namespace tmlab::net {

namespace dns_type {
inline constexpr std::uint16_t A = 1;
inline constexpr std::uint16_t AAAA = 28;
}  // namespace dns_type
inline constexpr std::uint16_t kDnsClassIn = 1;
inline constexpr std::size_t kDnsHeaderSize = 12;

struct DnsFlags {
  bool qr = false;
  std::uint8_t opcode = 0;
  bool aa = false;
  bool tc = false;
  bool rd = true;
  bool ra = false;
  std::uint8_t z = 0;
  std::uint8_t rcode = 0;

  std::uint16_t pack() const;
  static DnsFlags unpack(std::uint16_t bits);

  bool operator==(const DnsFlags&) const = default;
};

// Declared section counts, held apart from the record lists so that
// count-tampering and malformed injections are representable.
struct DnsCounts {
  std::uint16_t qd = 0;
  std::uint16_t an = 0;
  std::uint16_t ns = 0;
  std::uint16_t ar = 0;

  bool operator==(const DnsCounts&) const = default;
};

struct DnsQuestion {
  std::string qname;  // dotted, no trailing dot
  std::uint16_t qtype = dns_type::A;
  std::uint16_t qclass = kDnsClassIn;

  bool operator==(const DnsQuestion&) const = default;
};

struct DnsResourceRecord {
  std::string name;
  std::uint16_t type = dns_type::A;
  std::uint16_t rclass = kDnsClassIn;
  std::uint32_t ttl = 0;
  Bytes rdata;

  bool operator==(const DnsResourceRecord&) const = default;
};

struct DnsMessage {
  std::uint16_t id = 0;
  DnsFlags flags;
  DnsCounts counts;
  std::vector<DnsQuestion> questions;
  std::vector<DnsResourceRecord> answers;

  bool counts_match_lists() const {
    return counts.qd == questions.size() && counts.an == answers.size() && counts.ns == 0 &&
           counts.ar == 0;
  }

  bool operator==(const DnsMessage&) const = default;
};

// Throws std::invalid_argument for labels over 63 bytes, empty labels or
// names over 255 encoded bytes.
void validate_dns_name(std::string_view name);

// Default counts are qd=1, everything else zero; `counts_override`
// replaces the declared counts without touching the record lists.
DnsMessage build_dns_query(std::string_view qname, std::uint16_t id,
                           std::optional<DnsCounts> counts_override = std::nullopt,
                           std::uint16_t qtype = dns_type::A);

DnsResourceRecord make_a_record(std::string_view name, Ipv4Address addr, std::uint32_t ttl);
std::optional<Ipv4Address> a_record_address(const DnsResourceRecord& rr);

// Declared counts are written as-is, followed by every question and every
// answer. Names are written uncompressed.
Bytes encode_dns(const DnsMessage& msg);

// Tolerant decode: the declared counts are recovered verbatim and the
// question/answer split is chosen so the whole buffer is consumed. Among
// consuming splits, plausible ones (printable names, known classes, 4-byte
// A rdata) win, then the one nearest the declared question count.
// Compression pointers are followed. Throws MalformedPacket if no split
// consumes the buffer.
DnsMessage decode_dns(ByteView bytes);

// Client-grade decode: sections are read strictly by the declared counts
// (authority and additional records are parsed and discarded) and the
// buffer must be consumed exactly.
std::optional<DnsMessage> strict_decode_dns(ByteView bytes);

// Question names of a well-formed DNS message, in order; empty when the
// buffer is not one.
std::vector<std::string> strict_dns_qnames(ByteView bytes);

// Reads a possibly-compressed name starting at r.pos(); advances r past it.
std::string read_dns_name(ByteReader& r);
void write_dns_name(ByteWriter& w, std::string_view name);

}  // namespace tmlab::net
