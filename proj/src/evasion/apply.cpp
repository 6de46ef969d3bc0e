#include "tmlab/evasion/apply.hpp"

#include <charconv>

#include "tmlab/net/dns.hpp"
#include "tmlab/net/http.hpp"

namespace tmlab::evasion {
namespace {

using net::PacketEnvelope;
using K = Action::Kind;

constexpr std::uint16_t kDnsPort = 53;

bool is_dns_query(const PacketEnvelope& p) {
  if (!p.is_udp() || p.udp().dst_port != kDnsPort) return false;
  const auto& b = p.udp().payload;
  return b.size() >= 12 && (b[2] & 0x80) == 0;
}

std::optional<std::uint32_t> parse_u32(const std::string& s) {
  std::uint32_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// A packet on its way through the tree. Checksum overrides are applied
// after the final length/checksum pass at the leaf.
struct Work {
  PacketEnvelope env;
  bool corrupt_transport = false;
  bool corrupt_ip = false;
  std::optional<std::uint16_t> transport_checksum;
  std::optional<std::uint16_t> ip_checksum;
};

class PacketRunner {
 public:
  PacketRunner(const Tree& tree, std::mt19937_64& rng, std::vector<std::string>* warnings)
      : tree_(tree), rng_(rng), warnings_(warnings) {}

  void run(const Action& a, Work w, std::size_t first_leaf) {
    switch (a.kind) {
      case K::Send:
        emit(std::move(w), first_leaf);
        return;
      case K::Drop:
        return;
      case K::Duplicate:
        run(a.children[0], w, first_leaf);
        run(a.children[1], std::move(w), first_leaf + leaf_count(a.children[0]));
        return;
      case K::Fragment:
        fragment(a, std::move(w), first_leaf);
        return;
      case K::Tamper:
        tamper(a, w);
        run(a.children[0], std::move(w), first_leaf);
        return;
      case K::Insert:
      case K::Replace:
        warn("HTTP action reached a packet; sent unchanged");
        run(a.children[0], std::move(w), first_leaf);
        return;
    }
  }

  std::vector<ScheduledPacket> take() { return std::move(out_); }

 private:
  void warn(const std::string& w) {
    if (warnings_) warnings_->push_back(w);
  }

  std::uint16_t wrong(std::uint16_t valid) {
    return static_cast<std::uint16_t>(valid + 1 + rng_() % 0xFFFF);
  }

  void emit(Work w, std::size_t leaf) {
    net::finalize(w.env);
    if (w.corrupt_transport || w.transport_checksum) {
      std::uint16_t v = w.transport_checksum.value_or(0);
      if (w.env.is_tcp()) {
        w.env.tcp().checksum = w.corrupt_transport ? wrong(w.env.tcp().checksum) : v;
      } else if (w.env.is_udp()) {
        w.env.udp().checksum = w.corrupt_transport ? wrong(w.env.udp().checksum) : v;
      }
    }
    if (w.corrupt_ip || w.ip_checksum) {
      w.env.ip.header_checksum = w.corrupt_ip ? wrong(w.env.ip.header_checksum) : *w.ip_checksum;
    }
    auto d = tree_.leaf_delays.find(leaf);
    out_.push_back({std::move(w.env), d == tree_.leaf_delays.end() ? sim::SimDuration{} : d->second});
  }

  void fragment(const Action& a, Work w, std::size_t first_leaf) {
    const std::size_t right_leaf = first_leaf + leaf_count(a.children[0]);
    if (!w.env.is_tcp() || a.index == 0 || a.index >= w.env.tcp().payload.size()) {
      warn("fragment index " + std::to_string(a.index) + " outside the payload; packet sent unchanged");
      run(a.children[0], std::move(w), first_leaf);
      return;
    }
    Work first = w, second = std::move(w);
    auto& p1 = first.env.tcp().payload;
    auto& s2 = second.env.tcp();
    p1.resize(a.index);
    s2.payload.erase(s2.payload.begin(), s2.payload.begin() + static_cast<std::ptrdiff_t>(a.index));
    s2.seq += static_cast<std::uint32_t>(a.index);
    if (a.in_order) {
      run(a.children[0], std::move(first), first_leaf);
      run(a.children[1], std::move(second), right_leaf);
    } else {
      run(a.children[1], std::move(second), right_leaf);
      run(a.children[0], std::move(first), first_leaf);
    }
  }

  void tamper(const Action& a, Work& w) {
    const bool corrupt = a.op == "corrupt";
    const auto number = parse_u32(a.value);
    auto value16 = [&]() -> std::optional<std::uint16_t> {
      if (corrupt) return static_cast<std::uint16_t>(rng_());
      if (!number || *number > 0xFFFF) return std::nullopt;
      return static_cast<std::uint16_t>(*number);
    };
    auto value32 = [&]() -> std::optional<std::uint32_t> {
      if (corrupt) return static_cast<std::uint32_t>(rng_());
      return number;
    };
    const std::string where = a.protocol + ":" + a.field;

    if (a.protocol == "IP") {
      auto v = value16();
      if (a.field == "chksum") {
        if (corrupt) w.corrupt_ip = true;
        else if (v) w.ip_checksum = v;
      } else if (a.field == "ttl" && v && *v <= 0xFF) {
        w.env.ip.ttl = static_cast<std::uint8_t>(*v);
      } else if (a.field == "id" && v) {
        w.env.ip.identification = *v;
      } else {
        warn("cannot tamper " + where);
      }
      return;
    }
    if (a.protocol == "TCP") {
      if (!w.env.is_tcp()) return warn("cannot tamper " + where + " on a non-TCP packet");
      auto& t = w.env.tcp();
      if (a.field == "flags") {
        std::optional<net::TcpFlags> f = corrupt ? net::TcpFlags(static_cast<std::uint8_t>(rng_()))
                                                 : net::TcpFlags::parse(a.value);
        if (f) t.flags = *f;
        else warn("bad flags " + a.value);
      } else if (a.field == "chksum") {
        if (corrupt) w.corrupt_transport = true;
        else if (auto v = value16()) w.transport_checksum = v;
      } else if (a.field == "seq" || a.field == "ack") {
        auto v = value32();
        if (!v) return warn("bad value for " + where);
        (a.field == "seq" ? t.seq : t.ack) = *v;
      } else if (a.field == "window" || a.field == "urgptr") {
        auto v = value16();
        if (!v) return warn("bad value for " + where);
        (a.field == "window" ? t.window : t.urgent_pointer) = *v;
      } else if (a.field == "load") {
        if (corrupt) {
          for (auto& b : t.payload) b = static_cast<std::uint8_t>(rng_());
        } else {
          t.payload = decode_bytes(a.value);
        }
      } else {
        warn("cannot tamper " + where);
      }
      return;
    }
    // DNS
    if (!is_dns_query(w.env)) return warn("cannot tamper " + where + " on a non-DNS packet");
    auto& b = w.env.udp().payload;
    static const std::pair<const char*, std::size_t> header_fields[] = {
        {"id", 0}, {"qdcount", 4}, {"ancount", 6}, {"nscount", 8}, {"arcount", 10}};
    for (auto [name, off] : header_fields) {
      if (a.field != name) continue;
      auto v = value16();
      if (!v) return warn("bad value for " + where);
      b[off] = static_cast<std::uint8_t>(*v >> 8);
      b[off + 1] = static_cast<std::uint8_t>(*v);
      return;
    }
    if (a.field == "question" && a.op == "duplicate") {
      // Appends a copy of the first question; the declared qdcount is kept.
      try {
        net::ByteReader r(b, 12);
        net::read_dns_name(r);
        r.take(4);
        net::Bytes q(b.begin() + 12, b.begin() + static_cast<std::ptrdiff_t>(r.pos()));
        b.insert(b.begin() + static_cast<std::ptrdiff_t>(r.pos()), q.begin(), q.end());
      } catch (const std::exception&) {
        warn("no question to duplicate");
      }
      return;
    }
    warn("cannot tamper " + where);
  }

  const Tree& tree_;
  std::mt19937_64& rng_;
  std::vector<std::string>* warnings_;
  std::vector<ScheduledPacket> out_;
};

// HTTP trees rewrite one header (or the method/version token, carried in
// `value`) into zero or more copies.
void run_http(const Action& a, net::HttpHeaderTokens h, std::vector<net::HttpHeaderTokens>& out) {
  auto repeat = [&] {
    net::Bytes r;
    for (std::size_t i = 0; i < a.count; ++i) r.insert(r.end(), a.bytes.begin(), a.bytes.end());
    return r;
  };
  switch (a.kind) {
    case K::Send:
      out.push_back(std::move(h));
      return;
    case K::Drop:
      return;
    case K::Duplicate:
      run_http(a.children[0], h, out);
      run_http(a.children[1], std::move(h), out);
      return;
    case K::Insert: {
      net::Bytes& target = a.component == "name" ? h.name : h.value;
      net::Bytes r = repeat();
      target.insert(a.position == "start" ? target.begin() : target.end(), r.begin(), r.end());
      run_http(a.children[0], std::move(h), out);
      return;
    }
    case K::Replace:
      (a.component == "name" ? h.name : h.value) = repeat();
      run_http(a.children[0], std::move(h), out);
      return;
    case K::Fragment:
    case K::Tamper:
      run_http(a.children[0], std::move(h), out);
      return;
  }
}

std::vector<ScheduledPacket> apply_http(const Tree& tree, const PacketEnvelope& packet,
                                        std::vector<std::string>* warnings) {
  net::HttpRequestBytes req(packet.tcp().payload);
  net::Bytes raw;
  if (tree.trigger.field == "host") {
    auto idx = req.find_header("Host");
    std::vector<net::HttpHeaderTokens> headers;
    run_http(tree.action, req.view().headers[*idx], headers);
    req.replace_header(*idx, headers);
    raw = req.raw();
  } else {
    net::HttpRequestView v = req.view();
    net::Bytes& token = tree.trigger.field == "method" ? v.method : v.version;
    std::vector<net::HttpHeaderTokens> out;
    run_http(tree.action, {.value = token}, out);
    if (out.size() != 1 || !out[0].name.empty()) {
      if (warnings) warnings->push_back("request-line actions must leave exactly one token; sent unchanged");
      return {{packet, {}}};
    }
    token = out[0].value;
    raw = v.serialize();
  }
  PacketEnvelope p = packet;
  p.tcp().payload = std::move(raw);
  net::finalize(p);
  return {{std::move(p), {}}};
}

}  // namespace

bool trigger_matches(const Trigger& trigger, const PacketEnvelope& packet) {
  const bool any_value = trigger.field == "*" || trigger.value == "*";
  if (trigger.protocol == "TCP") {
    if (!packet.is_tcp()) return false;
    if (any_value) return true;
    auto f = net::TcpFlags::parse(trigger.value);
    return f && *f == packet.tcp().flags;
  }
  if (trigger.protocol == "DNS") {
    if (!is_dns_query(packet)) return false;
    if (any_value) return true;
    if (trigger.field != "qname") return false;
    try {
      auto m = net::decode_dns(packet.udp().payload);
      return !m.questions.empty() && net::iequals(m.questions.front().qname, trigger.value);
    } catch (const std::exception&) {
      return false;
    }
  }
  if (trigger.protocol == "HTTP") {
    if (!packet.is_tcp() || packet.tcp().payload.empty()) return false;
    net::HttpRequestBytes req(packet.tcp().payload);
    const auto& v = req.view();
    if (v.method.empty() || !net::to_string(v.version).starts_with("HTTP/")) return false;
    std::string actual;
    if (trigger.field == "host") {
      auto host = req.header_value("Host");
      if (!host) return false;
      actual = *host;
    } else {
      actual = net::to_string(trigger.field == "method" ? v.method : v.version);
    }
    return trigger.value == "*" || net::iequals(actual, trigger.value);
  }
  return false;
}

std::vector<ScheduledPacket> apply_strategy(const Strategy& strategy, const PacketEnvelope& packet,
                                            std::mt19937_64& rng, std::vector<std::string>* warnings) {
  for (const auto& tree : strategy.outbound) {
    if (!trigger_matches(tree.trigger, packet)) continue;
    if (tree.trigger.protocol == "HTTP") return apply_http(tree, packet, warnings);
    PacketRunner runner(tree, rng, warnings);
    runner.run(tree.action, {.env = packet}, 0);
    return runner.take();
  }
  return {{packet, {}}};
}

std::vector<ScheduledPacket> apply_strategy(const Strategy& strategy, const std::vector<PacketEnvelope>& stream,
                                            std::uint64_t seed, std::vector<std::string>* warnings) {
  std::mt19937_64 rng(seed);
  std::vector<ScheduledPacket> out;
  for (const auto& p : stream) {
    auto part = apply_strategy(strategy, p, rng, warnings);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

}  // namespace tmlab::evasion
