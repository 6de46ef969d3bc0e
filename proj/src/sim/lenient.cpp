#include "tmlab/sim/lenient.hpp"

#include <algorithm>
#include <array>
#include <string_view>

#include "tmlab/net/http.hpp"

namespace tmlab::sim {
namespace {

using net::ByteView;

constexpr std::array<std::string_view, 9> kMethods = {"GET",   "POST",    "HEAD",  "PUT",  "DELETE",
                                                      "OPTIONS", "CONNECT", "TRACE", "PATCH"};
constexpr std::string_view kVersionPrefix = "HTTP/1.";
constexpr std::size_t kVersionSize = 8;

ScanResult need_more() { return {ScanStatus::NeedMore, {}}; }
ScanResult reject() { return {ScanStatus::Reject, {}}; }

// True if some boundary lies strictly inside [begin, end).
bool cut_inside(std::span<const std::size_t> boundaries, std::size_t begin, std::size_t end) {
  return std::any_of(boundaries.begin(), boundaries.end(),
                     [&](std::size_t b) { return b > begin && b < end; });
}

std::string_view text(ByteView v) { return {reinterpret_cast<const char*>(v.data()), v.size()}; }

std::string host_from_value(std::string_view value) {
  if (auto colon = value.rfind(':'); colon != std::string_view::npos && colon + 1 < value.size() &&
                                     std::all_of(value.begin() + colon + 1, value.end(),
                                                 [](char c) { return c >= '0' && c <= '9'; })) {
    value = value.substr(0, colon);
  }
  return net::to_lower(value);
}

std::optional<std::string> found_or_absent(const ScanResult& r) {
  if (r.status == ScanStatus::Found) return r.name;
  return std::nullopt;
}

}  // namespace

ScanResult scan_http(ByteView stream, std::span<const std::size_t> boundaries) {
  const std::string_view s = text(stream);
  const std::size_t n = s.size();

  std::size_t sp = s.find(' ');
  if (sp == std::string_view::npos) {
    bool prefix = std::any_of(kMethods.begin(), kMethods.end(),
                              [&](std::string_view m) { return m.starts_with(s); });
    return prefix ? need_more() : reject();
  }
  if (std::find(kMethods.begin(), kMethods.end(), s.substr(0, sp)) == kMethods.end()) return reject();

  std::size_t pos = sp + 1;
  std::size_t target_end = pos;
  while (target_end < n && s[target_end] != ' ') {
    if (s[target_end] == '\r' || s[target_end] == '\n') return reject();
    ++target_end;
  }
  if (target_end == n) return need_more();
  if (target_end == pos) return reject();

  const std::size_t v = target_end + 1;
  for (std::size_t i = 0; i < kVersionSize; ++i) {
    if (v + i >= n) return need_more();
    char c = s[v + i];
    bool ok = i < kVersionPrefix.size() ? c == kVersionPrefix[i] : (c >= '0' && c <= '9');
    if (!ok) return reject();
  }
  if (cut_inside(boundaries, v, v + kVersionSize)) return reject();

  pos = v + kVersionSize;
  if (pos >= n) return need_more();
  if (s[pos] == '\r') {
    if (pos + 1 >= n) return need_more();
    if (s[pos + 1] != '\n') return reject();
    pos += 2;
  } else if (s[pos] == '\n') {
    pos += 1;
  } else {
    return reject();
  }

  std::optional<std::string> host;
  while (true) {
    if (pos >= n) return need_more();
    std::size_t lf = s.find('\n', pos);
    if (lf == std::string_view::npos) return need_more();
    std::string_view line = s.substr(pos, lf - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = lf + 1;
    if (line.empty()) break;
    if (host || line.size() < 5 || !net::iequals(line.substr(0, 5), "host:")) continue;
    std::size_t i = 5;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) host = host_from_value(line.substr(i, j - i));
  }
  if (!host || host->empty()) return reject();
  return {ScanStatus::Found, *host};
}

ScanResult scan_tls(ByteView stream, std::span<const std::size_t> boundaries) {
  const std::size_t n = stream.size();
  if (n >= 1 && stream[0] != net::kTlsHandshakeRecord) return reject();
  if (n >= 2 && stream[1] != 0x03) return reject();
  if (std::any_of(boundaries.begin(), boundaries.end(), [](std::size_t b) { return b >= 3 && b <= 8; })) {
    return reject();
  }
  if (n < 9) return need_more();
  if (stream[5] != net::kTlsClientHello) return reject();

  std::size_t pos = 9;
  auto have = [&](std::size_t k) { return pos + k <= n; };
  auto u8 = [&] { return static_cast<std::size_t>(stream[pos++]); };
  auto u16 = [&] {
    std::size_t v = (std::size_t{stream[pos]} << 8) | stream[pos + 1];
    pos += 2;
    return v;
  };

  if (!have(2 + 32 + 1)) return need_more();
  pos += 2 + 32;
  std::size_t sid = u8();
  if (!have(sid + 2)) return need_more();
  pos += sid;
  std::size_t ciphers = u16();
  if (!have(ciphers + 1)) return need_more();
  pos += ciphers;
  std::size_t comp = u8();
  if (!have(comp + 2)) return need_more();
  pos += comp;
  const std::size_t ext_end = u16() + pos;

  while (pos < ext_end) {
    if (!have(4)) return need_more();
    std::size_t type = u16();
    std::size_t len = u16();
    if (pos + len > ext_end) return reject();
    if (type != 0) {
      if (!have(len)) return need_more();
      pos += len;
      continue;
    }
    if (!have(2 + 1 + 2)) return need_more();
    pos += 2;  // server_name_list length
    if (u8() != 0) return reject();
    std::size_t name_len = u16();
    if (name_len == 0) return reject();
    if (!have(name_len)) return need_more();
    std::string_view name = text(stream.subspan(pos, name_len));
    if (!net::is_visible_ascii(name)) return reject();
    if (cut_inside(boundaries, pos, pos + name_len)) return reject();
    return {ScanStatus::Found, net::to_lower(name)};
  }
  return reject();
}

std::optional<std::string> lenient_http_host(ByteView segment, std::size_t limit) {
  return found_or_absent(scan_http(segment.first(std::min(limit, segment.size())), {}));
}

std::optional<std::string> lenient_tls_sni(ByteView segment, std::size_t limit) {
  return found_or_absent(scan_tls(segment.first(std::min(limit, segment.size())), {}));
}

std::optional<DnsQueryView> lenient_dns_query(ByteView payload, bool read_past_qdcount) {
  if (payload.size() < net::kDnsHeaderSize) return std::nullopt;
  net::ByteReader r(payload);
  DnsQueryView out;
  out.id = r.u16();
  out.flags = net::DnsFlags::unpack(r.u16());
  if (out.flags.qr) return std::nullopt;
  out.counts = {r.u16(), r.u16(), r.u16(), r.u16()};
  const std::size_t want = read_past_qdcount ? std::size_t{256} : out.counts.qd;
  while (out.questions.size() < want && !r.empty()) {
    try {
      net::DnsQuestion q;
      q.qname = net::read_dns_name(r);
      q.qtype = r.u16();
      q.qclass = r.u16();
      out.questions.push_back(std::move(q));
    } catch (const net::MalformedPacket&) {
      break;
    }
  }
  return out;
}

}  // namespace tmlab::sim
