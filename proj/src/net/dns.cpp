#include "tmlab/net/dns.hpp"

#include <cstdlib>
#include <stdexcept>

namespace tmlab::net {
namespace {

constexpr int kMaxPointerHops = 32;

std::optional<DnsQuestion> try_question(ByteReader& r) {
  try {
    DnsQuestion q;
    q.qname = read_dns_name(r);
    q.qtype = r.u16();
    q.qclass = r.u16();
    return q;
  } catch (const MalformedPacket&) {
    return std::nullopt;
  }
}

std::optional<DnsResourceRecord> try_record(ByteReader& r) {
  try {
    DnsResourceRecord rr;
    rr.name = read_dns_name(r);
    rr.type = r.u16();
    rr.rclass = r.u16();
    rr.ttl = r.u32();
    std::uint16_t len = r.u16();
    auto rd = r.take(len);
    rr.rdata.assign(rd.begin(), rd.end());
    return rr;
  } catch (const MalformedPacket&) {
    return std::nullopt;
  }
}

bool plausible_class(std::uint16_t c) { return c == 1 || c == 3 || c == 4 || c == 254 || c == 255; }

bool plausible_name(const std::string& name) {
  for (char c : name) {
    if (c <= 0x20 || c >= 0x7f) return false;
  }
  return true;
}

// A split is plausible when every name is printable, every class is a
// known one and every A record carries four bytes of rdata. Used to break
// ties between splits that all consume the buffer.
bool plausible(const DnsMessage& m) {
  for (const auto& q : m.questions) {
    if (!plausible_class(q.qclass) || !plausible_name(q.qname)) return false;
  }
  for (const auto& rr : m.answers) {
    if (!plausible_class(rr.rclass) || !plausible_name(rr.name)) return false;
    if (rr.type == dns_type::A && rr.rdata.size() != 4) return false;
  }
  return true;
}

// Parses exactly `nq` questions then records until the buffer ends.
std::optional<DnsMessage> try_split(ByteView bytes, std::size_t nq) {
  ByteReader r(bytes, kDnsHeaderSize);
  DnsMessage msg;
  for (std::size_t i = 0; i < nq; ++i) {
    auto q = try_question(r);
    if (!q) return std::nullopt;
    msg.questions.push_back(std::move(*q));
  }
  while (!r.empty()) {
    auto rr = try_record(r);
    if (!rr) return std::nullopt;
    msg.answers.push_back(std::move(*rr));
  }
  return msg;
}

}  // namespace

std::uint16_t DnsFlags::pack() const {
  return static_cast<std::uint16_t>((qr ? 0x8000 : 0) | ((opcode & 0x0f) << 11) | (aa ? 0x0400 : 0) |
                                    (tc ? 0x0200 : 0) | (rd ? 0x0100 : 0) | (ra ? 0x0080 : 0) |
                                    ((z & 0x07) << 4) | (rcode & 0x0f));
}

DnsFlags DnsFlags::unpack(std::uint16_t bits) {
  DnsFlags f;
  f.qr = bits & 0x8000;
  f.opcode = (bits >> 11) & 0x0f;
  f.aa = bits & 0x0400;
  f.tc = bits & 0x0200;
  f.rd = bits & 0x0100;
  f.ra = bits & 0x0080;
  f.z = (bits >> 4) & 0x07;
  f.rcode = bits & 0x0f;
  return f;
}

void validate_dns_name(std::string_view name) {
  if (name.empty()) return;
  std::size_t encoded = 1;
  std::size_t start = 0;
  while (true) {
    auto dot = name.find('.', start);
    auto label = name.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
    if (label.empty()) throw std::invalid_argument("empty DNS label in '" + std::string(name) + "'");
    if (label.size() > 63) throw std::invalid_argument("DNS label longer than 63 bytes");
    encoded += label.size() + 1;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (encoded > 255) throw std::invalid_argument("DNS name longer than 255 bytes");
}

void write_dns_name(ByteWriter& w, std::string_view name) {
  validate_dns_name(name);
  std::size_t start = 0;
  while (start < name.size()) {
    auto dot = name.find('.', start);
    if (dot == std::string_view::npos) dot = name.size();
    w.u8(static_cast<std::uint8_t>(dot - start));
    w.bytes(name.substr(start, dot - start));
    start = dot + 1;
  }
  w.u8(0);
}

std::string read_dns_name(ByteReader& r) {
  std::string name;
  ByteReader cursor = r;
  bool jumped = false;
  int hops = 0;
  std::size_t total = 0;
  while (true) {
    std::uint8_t len = cursor.u8();
    if ((len & 0xc0) == 0xc0) {
      std::uint16_t target = static_cast<std::uint16_t>(((len & 0x3f) << 8) | cursor.u8());
      if (!jumped) r.seek(cursor.pos());
      jumped = true;
      if (++hops > kMaxPointerHops) throw MalformedPacket("DNS compression loop", cursor.pos());
      cursor.seek(target);
      continue;
    }
    if (len & 0xc0) throw MalformedPacket("reserved DNS label type", cursor.pos() - 1);
    if (len == 0) break;
    auto label = cursor.take(len);
    total += len + 1;
    if (total > 255) throw MalformedPacket("DNS name too long", cursor.pos());
    if (!name.empty()) name.push_back('.');
    name.append(reinterpret_cast<const char*>(label.data()), label.size());
  }
  if (!jumped) r.seek(cursor.pos());
  return name;
}

DnsMessage build_dns_query(std::string_view qname, std::uint16_t id,
                           std::optional<DnsCounts> counts_override, std::uint16_t qtype) {
  validate_dns_name(qname);
  DnsMessage msg;
  msg.id = id;
  msg.flags.rd = true;
  msg.questions.push_back({std::string(qname), qtype, kDnsClassIn});
  msg.counts = counts_override.value_or(DnsCounts{1, 0, 0, 0});
  return msg;
}

DnsResourceRecord make_a_record(std::string_view name, Ipv4Address addr, std::uint32_t ttl) {
  DnsResourceRecord rr;
  rr.name = std::string(name);
  rr.type = dns_type::A;
  rr.ttl = ttl;
  Bytes rd;
  ByteWriter(rd).u32(addr.value());
  rr.rdata = std::move(rd);
  return rr;
}

std::optional<Ipv4Address> a_record_address(const DnsResourceRecord& rr) {
  if (rr.type != dns_type::A || rr.rdata.size() != 4) return std::nullopt;
  ByteReader r(rr.rdata);
  return Ipv4Address(r.u32());
}

Bytes encode_dns(const DnsMessage& msg) {
  Bytes out;
  ByteWriter w(out);
  w.u16(msg.id);
  w.u16(msg.flags.pack());
  w.u16(msg.counts.qd);
  w.u16(msg.counts.an);
  w.u16(msg.counts.ns);
  w.u16(msg.counts.ar);
  for (const auto& q : msg.questions) {
    write_dns_name(w, q.qname);
    w.u16(q.qtype);
    w.u16(q.qclass);
  }
  for (const auto& rr : msg.answers) {
    write_dns_name(w, rr.name);
    w.u16(rr.type);
    w.u16(rr.rclass);
    w.u32(rr.ttl);
    if (rr.rdata.size() > 0xffff) throw std::invalid_argument("rdata too long");
    w.u16(static_cast<std::uint16_t>(rr.rdata.size()));
    w.bytes(rr.rdata);
  }
  return out;
}

DnsMessage decode_dns(ByteView bytes) {
  ByteReader r(bytes);
  if (bytes.size() < kDnsHeaderSize) throw MalformedPacket("truncated DNS header", bytes.size());
  std::uint16_t id = r.u16();
  DnsFlags flags = DnsFlags::unpack(r.u16());
  DnsCounts counts{r.u16(), r.u16(), r.u16(), r.u16()};

  // How many questions can be read back to back at all bounds the search.
  std::size_t max_q = 0;
  {
    ByteReader probe(bytes, kDnsHeaderSize);
    while (!probe.empty() && try_question(probe)) ++max_q;
  }
  // Candidate question counts ordered by distance from the declared one.
  std::vector<std::size_t> order;
  if (counts.qd <= max_q) order.push_back(counts.qd);
  for (std::size_t delta = 1; delta <= max_q + counts.qd; ++delta) {
    if (counts.qd + delta <= max_q) order.push_back(counts.qd + delta);
    if (delta <= counts.qd && counts.qd - delta <= max_q) order.push_back(counts.qd - delta);
  }
  std::optional<DnsMessage> fallback;
  for (std::size_t nq : order) {
    auto m = try_split(bytes, nq);
    if (!m) continue;
    m->id = id;
    m->flags = flags;
    m->counts = counts;
    if (plausible(*m)) return *m;
    if (!fallback) fallback = std::move(m);
  }
  if (fallback) return *fallback;
  throw MalformedPacket("DNS body does not parse as questions followed by records", kDnsHeaderSize);
}

std::optional<DnsMessage> strict_decode_dns(ByteView bytes) {
  try {
    ByteReader r(bytes);
    DnsMessage msg;
    msg.id = r.u16();
    msg.flags = DnsFlags::unpack(r.u16());
    msg.counts = {r.u16(), r.u16(), r.u16(), r.u16()};
    for (int i = 0; i < msg.counts.qd; ++i) {
      DnsQuestion q;
      q.qname = read_dns_name(r);
      q.qtype = r.u16();
      q.qclass = r.u16();
      msg.questions.push_back(std::move(q));
    }
    int records = msg.counts.an + msg.counts.ns + msg.counts.ar;
    for (int i = 0; i < records; ++i) {
      DnsResourceRecord rr;
      rr.name = read_dns_name(r);
      rr.type = r.u16();
      rr.rclass = r.u16();
      rr.ttl = r.u32();
      auto rd = r.take(r.u16());
      rr.rdata.assign(rd.begin(), rd.end());
      if (i < msg.counts.an) msg.answers.push_back(std::move(rr));
    }
    if (!r.empty()) return std::nullopt;
    return msg;
  } catch (const MalformedPacket&) {
    return std::nullopt;
  }
}

std::vector<std::string> strict_dns_qnames(ByteView bytes) {
  std::vector<std::string> names;
  if (auto msg = strict_decode_dns(bytes)) {
    for (auto& q : msg->questions) names.push_back(std::move(q.qname));
  }
  return names;
}

}  // namespace tmlab::net
