#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tmlab/blocklist/rule.hpp"
#include "tmlab/net/bytes.hpp"
#include "tmlab/net/dns.hpp"
#include "tmlab/net/tls.hpp"

namespace tmlab::sim {

// Outcome of scanning a (possibly partial) client byte stream.
enum class ScanStatus { Found, NeedMore, Reject };

struct ScanResult {
  ScanStatus status = ScanStatus::Reject;
  std::string name;  // lowercase, set when Found
};

// The censor's HTTP reader. `boundaries` are stream offsets where one TCP
// segment ended and the next began. Accepts only: a known method at offset
// 0 followed by SP, a target, SP and the version "HTTP/1.<digit>" that no
// boundary cuts through; CR or LF directly after the version; then header
// lines up to the blank line. The first "Host:" line whose value starts on
// the same line supplies the name. Nothing is decided before the blank line.
ScanResult scan_http(net::ByteView stream, std::span<const std::size_t> boundaries);

// The censor's ClientHello reader. Boundaries at offsets 1-2 are ignored,
// one at 3-8 rejects, as does one inside the host_name bytes. Only the
// structure up to the server_name extension is examined.
ScanResult scan_tls(net::ByteView stream, std::span<const std::size_t> boundaries);

// Single-segment forms over the first `limit` bytes; an incomplete
// request is absent.
std::optional<std::string> lenient_http_host(net::ByteView segment, std::size_t limit = 4096);
std::optional<std::string> lenient_tls_sni(net::ByteView segment, std::size_t limit = 4096);

// The censor's DNS view of a query: declared counts plus every question it
// could read. In legacy mode questions are read until the buffer runs out,
// regardless of qdcount; otherwise exactly qdcount are read. nullopt for
// responses and anything shorter than a header.
struct DnsQueryView {
  std::uint16_t id = 0;
  net::DnsFlags flags;
  net::DnsCounts counts;
  std::vector<net::DnsQuestion> questions;
};
std::optional<DnsQueryView> lenient_dns_query(net::ByteView payload, bool read_past_qdcount);

}  // namespace tmlab::sim
