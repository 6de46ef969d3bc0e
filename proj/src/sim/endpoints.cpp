#include "tmlab/sim/endpoints.hpp"

#include "tmlab/net/dns.hpp"
#include "tmlab/net/http.hpp"
#include "tmlab/net/tls.hpp"

namespace tmlab::sim {
namespace {

using net::PacketEnvelope;
using net::TcpFlags;

PacketEnvelope reply(World& world, const PacketEnvelope& to, TcpFlags flags, std::uint32_t seq, std::uint32_t ack,
                     net::Bytes payload = {}) {
  const auto& tcp = to.tcp();
  return net::make_tcp_packet({.src = to.ip.dst,
                               .src_port = tcp.dst_port,
                               .dst = to.ip.src,
                               .dst_port = tcp.src_port,
                               .flags = flags,
                               .seq = seq,
                               .ack = ack,
                               .payload = std::move(payload),
                               .ip_id = world.next_ip_id()});
}

std::optional<std::size_t> tls_record_end(const net::Bytes& s) {
  if (s.size() < net::kTlsRecordHeaderSize) return std::nullopt;
  std::size_t end = net::kTlsRecordHeaderSize + ((std::size_t{s[3]} << 8) | s[4]);
  if (s.size() < end) return std::nullopt;
  return end;
}

}  // namespace

void TcpEndpoint::on_packet(World& world, net::Ipv4Address, const PacketEnvelope& env) {
  if (!env.is_tcp() || !net::ip_checksum_valid(env) || !net::transport_checksum_valid(env)) return;
  const auto& tcp = env.tcp();
  const ConnKey key{env.ip.src, tcp.src_port, tcp.dst_port};
  const auto len = static_cast<std::uint32_t>(tcp.payload.size());

  if (tcp.flags.has(TcpFlags::RST)) {
    conns_.erase(key);
    return;
  }
  if (tcp.flags.has(TcpFlags::SYN) && !tcp.flags.has(TcpFlags::ACK)) {
    // A repeated SYN of a half-open connection gets the same SYN+ACK again.
    if (auto it = conns_.find(key);
        it != conns_.end() && it->second.rcv_next == tcp.seq + 1 && it->second.stream.empty()) {
      world.send(reply(world, env, TcpFlags::SYN | TcpFlags::ACK, it->second.snd_next - 1, it->second.rcv_next));
      return;
    }
    Connection c;
    std::uint32_t isn = world.random_u32();
    c.snd_next = isn + 1;
    c.rcv_next = tcp.seq + 1;
    conns_[key] = c;
    world.send(reply(world, env, TcpFlags::SYN | TcpFlags::ACK, isn, c.rcv_next));
    return;
  }
  auto it = conns_.find(key);
  if (it == conns_.end()) {
    if (tcp.flags.has(TcpFlags::ACK)) {
      world.send(reply(world, env, TcpFlags::RST, tcp.ack, 0));
    } else {
      world.send(reply(world, env, TcpFlags::RST | TcpFlags::ACK, 0, tcp.seq + len));
    }
    return;
  }
  Connection& c = it->second;

  if (len > 0) {
    std::uint32_t seq = tcp.seq;
    net::ByteView data = tcp.payload;
    std::int32_t ahead = static_cast<std::int32_t>(seq - c.rcv_next);
    if (ahead > 0) {
      c.out_of_order[seq] = tcp.payload;
    } else if (static_cast<std::uint32_t>(-ahead) < len) {
      data = data.subspan(static_cast<std::size_t>(-ahead));
      c.stream.insert(c.stream.end(), data.begin(), data.end());
      c.rcv_next += static_cast<std::uint32_t>(data.size());
      for (auto o = c.out_of_order.begin(); o != c.out_of_order.end();) {
        std::int32_t gap = static_cast<std::int32_t>(o->first - c.rcv_next);
        std::int64_t end = gap + static_cast<std::int64_t>(o->second.size());
        if (gap > 0) break;
        if (end > 0) {
          c.stream.insert(c.stream.end(), o->second.end() - end, o->second.end());
          c.rcv_next += static_cast<std::uint32_t>(end);
        }
        o = c.out_of_order.erase(o);
      }
    }
  }

  if (tcp.flags.has(TcpFlags::FIN)) {
    c.rcv_next += 1;
    world.send(reply(world, env, TcpFlags::FIN | TcpFlags::ACK, c.snd_next, c.rcv_next));
    conns_.erase(it);
    return;
  }
  if (len == 0) return;

  std::optional<net::Bytes> out = on_stream(world, env, c);
  if (out && !out->empty()) {
    std::uint32_t seq = c.snd_next;
    c.snd_next += static_cast<std::uint32_t>(out->size());
    world.send(reply(world, env, TcpFlags::PSH | TcpFlags::ACK, seq, c.rcv_next, std::move(*out)));
  } else {
    world.send(reply(world, env, TcpFlags::ACK, c.snd_next, c.rcv_next));
  }
}

const std::string& HttpServer::canned_response() {
  static const std::string r =
      "HTTP/1.1 200 OK\r\nContent-Type: text/plain\r\nContent-Length: 2\r\nConnection: close\r\n\r\nok";
  return r;
}

const net::Bytes& HttpServer::canned_tls_response() {
  // A ServerHello-typed handshake record; enough for a client to tell it
  // apart from an injected reset.
  static const net::Bytes r = {0x16, 0x03, 0x03, 0x00, 0x04, 0x02, 0x00, 0x00, 0x00};
  return r;
}

std::optional<net::Bytes> HttpServer::on_stream(World& world, const PacketEnvelope& last, Connection& c) {
  if (c.responded || c.stream.empty()) return std::nullopt;
  ObservedRequest req{world.now(), last.ip.src, last.tcp().src_port, {}, std::nullopt};
  net::Bytes response;
  if (c.stream.front() == net::kTlsHandshakeRecord) {
    auto end = tls_record_end(c.stream);
    if (!end) return std::nullopt;
    req.bytes.assign(c.stream.begin(), c.stream.begin() + static_cast<std::ptrdiff_t>(*end));
    req.host = net::strict_tls_sni(req.bytes);
    response = canned_tls_response();
  } else {
    auto end = net::http_head_length(c.stream);
    if (!end) return std::nullopt;
    req.bytes.assign(c.stream.begin(), c.stream.begin() + static_cast<std::ptrdiff_t>(*end));
    req.host = net::strict_http_host(req.bytes);
    response = net::to_bytes(req.host ? canned_response() : "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n");
  }
  c.responded = true;
  requests_.push_back(std::move(req));
  return response;
}

std::optional<net::Bytes> EchoTcp::on_stream(World&, const PacketEnvelope&, Connection& c) {
  net::Bytes fresh(c.stream.begin() + static_cast<std::ptrdiff_t>(c.consumed), c.stream.end());
  c.consumed = c.stream.size();
  return fresh;
}

void DnsResolver::on_packet(World& world, net::Ipv4Address, const PacketEnvelope& env) {
  if (!env.is_udp() || !net::ip_checksum_valid(env) || !net::transport_checksum_valid(env)) return;
  const auto& udp = env.udp();
  net::DnsMessage query;
  try {
    query = net::decode_dns(udp.payload);
  } catch (const net::MalformedPacket&) {
    return;
  }
  if (query.flags.qr || query.questions.empty()) return;

  ObservedQuery seen{world.now(), env.ip.src, {}};
  for (const auto& q : query.questions) seen.qnames.push_back(q.qname);
  queries_.push_back(std::move(seen));

  const net::DnsQuestion& q = query.questions.front();
  net::DnsMessage answer;
  answer.id = query.id;
  answer.flags = query.flags;
  answer.flags.qr = true;
  answer.flags.ra = true;
  answer.questions = {q};
  auto hit = zone_.find(net::to_lower(q.qname));
  if (hit != zone_.end() && q.qtype == net::dns_type::A) {
    answer.answers.push_back(net::make_a_record(q.qname, hit->second, 300));
  } else if (hit == zone_.end()) {
    answer.flags.rcode = 3;
  }
  answer.counts = {1, static_cast<std::uint16_t>(answer.answers.size()), 0, 0};
  world.send(net::make_udp_packet({.src = env.ip.dst,
                                   .src_port = udp.dst_port,
                                   .dst = env.ip.src,
                                   .dst_port = udp.src_port,
                                   .payload = net::encode_dns(answer),
                                   .ip_id = world.next_ip_id()}));
}

}  // namespace tmlab::sim
