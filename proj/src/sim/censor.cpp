#include "tmlab/sim/censor.hpp"

#include <algorithm>
#include <stdexcept>

#include "tmlab/net/dns.hpp"
#include "tmlab/sim/lenient.hpp"

namespace tmlab::sim {
namespace {

using net::PacketEnvelope;
using net::TcpFlags;

constexpr std::uint8_t kInspectFlags = TcpFlags::PSH | TcpFlags::FIN | TcpFlags::URG | TcpFlags::ACK;
constexpr std::uint32_t kInjectedTtl = 300;
const net::Ipv4Address kSinkhole(127, 0, 0, 1);

}  // namespace

FilterSet FilterSet::everything() {
  FilterSet f;
  f.all_ = true;
  return f;
}

bool FilterSet::contains(net::Ipv4Address ip) const {
  if (all_ || hosts_.contains(ip)) return true;
  return std::any_of(prefixes_.begin(), prefixes_.end(), [&](const net::Ipv4Prefix& p) { return p.contains(ip); });
}

void validate(const CensorConfig& c) {
  for (SimDuration d : {c.residual_window, c.trigger_min, c.trigger_max, c.freepass_window}) {
    if (d <= SimDuration::zero()) throw std::invalid_argument("censor durations must be positive");
  }
  if (c.trigger_min >= c.trigger_max) throw std::invalid_argument("trigger_min must be below trigger_max");
  if (c.ban_policy.enabled && c.ban_policy.window <= SimDuration::zero()) {
    throw std::invalid_argument("ban window must be positive");
  }
}

FlowKey FlowKey::normalized() const {
  FlowKey r = reversed();
  return std::tie(r.src_ip, r.src_port) < std::tie(src_ip, src_port) ? r : *this;
}

std::string FlowKey::to_string() const {
  return src_ip.to_string() + ":" + std::to_string(src_port) + ">" + dst_ip.to_string() + ":" +
         std::to_string(dst_port);
}

FlowKey flow_of(const PacketEnvelope& env) {
  return {env.ip.src, env.src_port(), env.ip.dst, env.dst_port()};
}

Censor::Censor(CensorConfig config) : config_(std::move(config)) { validate(config_); }

bool Censor::is_banned(net::Ipv4Address src, SimTime t) const {
  auto it = state_.banned_sources.find(src);
  return it != state_.banned_sources.end() && (!it->second || t < *it->second);
}

void Censor::decay(net::Ipv4Address src, SimTime t) {
  auto it = state_.source_injection_counts.find(src);
  if (it == state_.source_injection_counts.end()) return;
  auto& q = it->second;
  while (!q.empty() && t - q.front() >= config_.ban_policy.window) q.pop_front();
  if (q.empty()) state_.source_injection_counts.erase(it);
}

std::vector<PacketEnvelope> Censor::on_packet(const PacketEnvelope& env, SimTime t) {
  if (env.is_icmp()) return {};
  if (!config_.filtered_ips.contains(env.ip.src) && !config_.filtered_ips.contains(env.ip.dst)) return {};
  decay(env.ip.src, t);
  if (is_banned(env.ip.src, t)) return {};
  return env.is_udp() ? on_udp(env, t) : on_tcp(env, t);
}

std::vector<PacketEnvelope> Censor::on_udp(const PacketEnvelope& env, SimTime t) {
  const auto& udp = env.udp();
  auto query = lenient_dns_query(udp.payload, config_.legacy_dns_count_bug);
  if (!query) return {};
  const auto& c = query->counts;
  const std::size_t limit = config_.dns_count_threshold;
  if (c.qd > limit || c.an > limit || c.ns > limit || c.ar > limit) return {};
  auto hit = std::find_if(query->questions.begin(), query->questions.end(), [&](const net::DnsQuestion& q) {
    return config_.blocklists.blocked(blocklist::Protocol::Dns, q.qname);
  });
  if (hit == query->questions.end()) return {};

  // One answer per question read; the declared counts echo the query, so a
  // query with an undeclared extra question gets a self-inconsistent reply.
  net::DnsMessage reply;
  reply.id = query->id;
  reply.flags = query->flags;
  reply.flags.qr = true;
  reply.flags.ra = true;
  reply.flags.rcode = 0;
  std::size_t echoed = std::min<std::size_t>(c.qd, query->questions.size());
  reply.questions.assign(query->questions.begin(), query->questions.begin() + echoed);
  for (const auto& q : query->questions) reply.answers.push_back(net::make_a_record(q.qname, kSinkhole, kInjectedTtl));
  reply.counts = {static_cast<std::uint16_t>(echoed),
                  static_cast<std::uint16_t>(config_.legacy_dns_count_bug ? echoed : reply.answers.size()), 0, 0};

  PacketEnvelope out = net::make_udp_packet({.src = env.ip.dst,
                                             .src_port = udp.dst_port,
                                             .dst = env.ip.src,
                                             .dst_port = udp.src_port,
                                             .payload = net::encode_dns(reply),
                                             .ip_id = config_.injection_ip_id,
                                             .ttl = config_.injection_ttl});
  record(env, t, InjectionKind::DnsResponse, "dns", hit->qname, out);
  return {out};
}

PacketEnvelope Censor::make_rst(const PacketEnvelope& trigger) const {
  const auto& tcp = trigger.tcp();
  const bool syn = tcp.flags.has(TcpFlags::SYN);
  std::uint32_t advance = static_cast<std::uint32_t>(tcp.payload.size()) + (syn ? 1 : 0);
  return net::make_tcp_packet({.src = trigger.ip.dst,
                               .src_port = tcp.dst_port,
                               .dst = trigger.ip.src,
                               .dst_port = tcp.src_port,
                               .flags = syn ? TcpFlags(TcpFlags::RST | TcpFlags::ACK) : TcpFlags(TcpFlags::RST),
                               .seq = tcp.ack,
                               .ack = tcp.seq + advance,
                               .ip_id = config_.injection_ip_id,
                               .ttl = config_.injection_ttl,
                               .window = 0});
}

std::vector<PacketEnvelope> Censor::on_tcp(const PacketEnvelope& env, SimTime t) {
  const auto& tcp = env.tcp();
  const FlowKey directed = flow_of(env);
  const FlowKey flow = directed.normalized();
  const TcpFlags flags = tcp.flags;

  if (flags.has(TcpFlags::RST | TcpFlags::FIN)) {
    state_.tcb.erase(flow);
    state_.pending.erase(flow);
    state_.ignored[flow] = t;
    state_.rst_seen[flow] = t;
    state_.streams.erase(directed);
    state_.streams.erase(directed.reversed());
    return {};
  }

  if (flags.has(TcpFlags::SYN)) {
    if (!flags.has(TcpFlags::ACK)) {
      auto rst = state_.rst_seen.find(flow);
      if (rst != state_.rst_seen.end() && t - rst->second < config_.freepass_window) {
        state_.ignored[flow] = t;
        state_.pending.erase(flow);
      } else {
        state_.tcb[flow] = TcbEntry{};
        state_.ignored.erase(flow);
      }
      state_.streams.erase(directed);
      state_.streams.erase(directed.reversed());
    } else if (auto it = state_.tcb.find(flow); it != state_.tcb.end()) {
      it->second.handshake_seen = true;
    }
  }

  if (state_.ignored.contains(flow)) return {};

  if (auto it = state_.residual.find(flow); it != state_.residual.end()) {
    if (t - it->second <= config_.residual_window) {
      PacketEnvelope rst = make_rst(env);
      it->second = t;
      record(env, t, InjectionKind::Rst, "residual", {}, rst);
      return {rst};
    }
    state_.residual.erase(it);
  }

  // A pending entry predates this packet; the inspection below can only
  // create one, never satisfy it.
  std::optional<SimTime> armed;
  if (auto it = state_.pending.find(flow); it != state_.pending.end()) {
    if (t - it->second > config_.trigger_max) {
      state_.pending.erase(it);
    } else {
      armed = it->second;
    }
  }

  if (flags.has(kInspectFlags) && !tcp.payload.empty()) {
    if (auto match = inspect(env, t)) {
      auto tcb = state_.tcb.find(flow);
      if (tcb != state_.tcb.end() && tcb->second.handshake_seen) {
        PacketEnvelope rst = make_rst(env);
        state_.residual[flow] = t;
        record(env, t, InjectionKind::Rst, std::string(blocklist::protocol_name(match->second)), match->first, rst);
        return {rst};
      }
      if (!armed) {
        state_.pending[flow] = t;
        return {};
      }
    }
  }

  if (armed && t - *armed >= config_.trigger_min) {
    PacketEnvelope rst = make_rst(env);
    state_.residual[flow] = t;
    state_.pending.erase(flow);
    record(env, t, InjectionKind::Rst, "second-packet", {}, rst);
    return {rst};
  }
  return {};
}

std::optional<std::pair<std::string, blocklist::Protocol>> Censor::inspect(const PacketEnvelope& env, SimTime t) {
  const auto& tcp = env.tcp();
  const FlowKey key = flow_of(env);
  auto [it, fresh] = state_.streams.try_emplace(key);
  StreamInspector& s = it->second;
  if (!fresh && t - s.last_seen > config_.residual_window) {
    s = StreamInspector{};
    fresh = true;
  }
  s.last_seen = t;
  if (fresh) s.next_seq = tcp.seq;
  if (s.done) return std::nullopt;
  // Retransmissions and out-of-order data are not re-read.
  if (tcp.seq != s.next_seq) return std::nullopt;
  s.next_seq = tcp.seq + static_cast<std::uint32_t>(tcp.payload.size());

  const std::size_t limit = config_.inspect_byte_limit;
  if (!s.buffer.empty()) s.boundaries.push_back(s.buffer.size());
  std::size_t room = limit > s.buffer.size() ? limit - s.buffer.size() : 0;
  std::size_t take = std::min(room, tcp.payload.size());
  s.buffer.insert(s.buffer.end(), tcp.payload.begin(), tcp.payload.begin() + static_cast<std::ptrdiff_t>(take));
  if (take < tcp.payload.size()) s.truncated = true;

  const bool tls = s.buffer.front() == net::kTlsHandshakeRecord;
  ScanResult r = tls ? scan_tls(s.buffer, s.boundaries) : scan_http(s.buffer, s.boundaries);
  if (r.status == ScanStatus::NeedMore && !s.truncated) return std::nullopt;
  s.done = true;
  if (r.status != ScanStatus::Found) return std::nullopt;
  const auto proto = tls ? blocklist::Protocol::Https : blocklist::Protocol::Http;
  if (!config_.blocklists.blocked(proto, r.name)) return std::nullopt;
  return std::make_pair(r.name, proto);
}

void Censor::record(const PacketEnvelope& trigger, SimTime t, InjectionKind kind, std::string reason,
                    std::string name, const PacketEnvelope& injected) {
  log_.push_back({t, flow_of(trigger), kind, std::move(reason), std::move(name), injected});
  const auto src = trigger.ip.src;
  auto& q = state_.source_injection_counts[src];
  q.push_back(t);
  const auto& ban = config_.ban_policy;
  if (ban.enabled && q.size() > ban.max_injections_per_source) {
    state_.banned_sources[src] = ban.ban_duration ? std::optional<SimTime>(t + *ban.ban_duration) : std::nullopt;
  }
}

}  // namespace tmlab::sim
