#include "tmlab/net/packet.hpp"

#include <algorithm>
#include <sstream>

#include "tmlab/net/checksum.hpp"

namespace tmlab::net {
namespace {

constexpr char kFlagLetters[] = "FSRPAUEC";

void encode_ip_header(const Ipv4Header& ip, ByteWriter& w) {
  w.u8(static_cast<std::uint8_t>((ip.version << 4) | (ip.header_length_words & 0x0f)));
  w.u8(ip.tos);
  w.u16(ip.total_length);
  w.u16(ip.identification);
  w.u16(ip.flags_fragment);
  w.u8(ip.ttl);
  w.u8(static_cast<std::uint8_t>(ip.protocol));
  w.u16(ip.header_checksum);
  w.u32(ip.src.value());
  w.u32(ip.dst.value());
}

void encode_transport(const Transport& t, ByteWriter& w) {
  std::visit(
      [&](const auto& seg) {
        using T = std::decay_t<decltype(seg)>;
        if constexpr (std::is_same_v<T, TcpSegment>) {
          w.u16(seg.src_port);
          w.u16(seg.dst_port);
          w.u32(seg.seq);
          w.u32(seg.ack);
          w.u8(static_cast<std::uint8_t>(seg.data_offset_words << 4));
          w.u8(seg.flags.bits());
          w.u16(seg.window);
          w.u16(seg.checksum);
          w.u16(seg.urgent_pointer);
          w.bytes(seg.options);
          w.bytes(seg.payload);
        } else if constexpr (std::is_same_v<T, UdpDatagram>) {
          w.u16(seg.src_port);
          w.u16(seg.dst_port);
          w.u16(seg.length);
          w.u16(seg.checksum);
          w.bytes(seg.payload);
        } else {
          w.u8(seg.type);
          w.u8(seg.code);
          w.u16(seg.checksum);
          w.u32(seg.rest_of_header);
          w.bytes(seg.payload);
        }
      },
      t);
}

std::size_t transport_length(const Transport& t) {
  return std::visit(
      [](const auto& seg) -> std::size_t {
        using T = std::decay_t<decltype(seg)>;
        if constexpr (std::is_same_v<T, TcpSegment>) {
          return kTcpHeaderSize + seg.options.size() + seg.payload.size();
        } else if constexpr (std::is_same_v<T, UdpDatagram>) {
          return kUdpHeaderSize + seg.payload.size();
        } else {
          return kIcmpHeaderSize + seg.payload.size();
        }
      },
      t);
}

Bytes encode_transport_bytes(const Transport& t) {
  Bytes out;
  ByteWriter w(out);
  encode_transport(t, w);
  return out;
}

std::uint32_t pseudo_for(const PacketEnvelope& env, std::size_t len) {
  return pseudo_header_sum(env.ip.src, env.ip.dst, static_cast<std::uint8_t>(env.ip.protocol),
                           static_cast<std::uint16_t>(len));
}

}  // namespace

std::optional<TcpFlags> TcpFlags::parse(std::string_view letters) {
  std::uint8_t bits = 0;
  for (char c : letters) {
    const char* hit = std::find(std::begin(kFlagLetters), std::end(kFlagLetters) - 1, c);
    if (hit == std::end(kFlagLetters) - 1) return std::nullopt;
    bits |= static_cast<std::uint8_t>(1u << (hit - kFlagLetters));
  }
  return TcpFlags(bits);
}

std::string TcpFlags::to_string() const {
  std::string out;
  for (int i = 0; i < 8; ++i) {
    if (bits_ & (1u << i)) out.push_back(kFlagLetters[i]);
  }
  return out;
}

ByteView PacketEnvelope::payload() const {
  if (is_tcp()) return tcp().payload;
  if (is_udp()) return udp().payload;
  return {};
}

std::uint16_t PacketEnvelope::src_port() const {
  if (is_tcp()) return tcp().src_port;
  if (is_udp()) return udp().src_port;
  return 0;
}

std::uint16_t PacketEnvelope::dst_port() const {
  if (is_tcp()) return tcp().dst_port;
  if (is_udp()) return udp().dst_port;
  return 0;
}

Bytes encode_packet(const PacketEnvelope& env) {
  Bytes out;
  out.reserve(kIpv4HeaderSize + transport_length(env.transport));
  ByteWriter w(out);
  encode_ip_header(env.ip, w);
  encode_transport(env.transport, w);
  return out;
}

PacketEnvelope decode_packet(ByteView bytes) {
  ByteReader r(bytes);
  PacketEnvelope env;
  auto& ip = env.ip;
  if (bytes.size() < kIpv4HeaderSize) throw MalformedPacket("truncated IPv4 header", bytes.size());
  std::uint8_t vihl = r.u8();
  ip.version = vihl >> 4;
  ip.header_length_words = vihl & 0x0f;
  if (ip.version != 4) throw MalformedPacket("not an IPv4 packet", 0);
  if (ip.header_length_words < 5) throw MalformedPacket("IPv4 header length below 5 words", 0);
  if (ip.header_length_words > 5) throw MalformedPacket("IPv4 options are not supported", 0);
  ip.tos = r.u8();
  ip.total_length = r.u16();
  ip.identification = r.u16();
  ip.flags_fragment = r.u16();
  ip.ttl = r.u8();
  std::uint8_t proto = r.u8();
  ip.header_checksum = r.u16();
  ip.src = Ipv4Address(r.u32());
  ip.dst = Ipv4Address(r.u32());
  if (ip.total_length < kIpv4HeaderSize || ip.total_length > bytes.size()) {
    throw MalformedPacket("IPv4 total length inconsistent with buffer", 2);
  }
  ByteReader t(bytes.first(ip.total_length), kIpv4HeaderSize);
  switch (proto) {
    case static_cast<std::uint8_t>(IpProtocol::Tcp): {
      ip.protocol = IpProtocol::Tcp;
      TcpSegment seg;
      seg.src_port = t.u16();
      seg.dst_port = t.u16();
      seg.seq = t.u32();
      seg.ack = t.u32();
      seg.data_offset_words = t.u8() >> 4;
      seg.flags = TcpFlags(t.u8());
      seg.window = t.u16();
      seg.checksum = t.u16();
      seg.urgent_pointer = t.u16();
      if (seg.data_offset_words < 5) throw MalformedPacket("TCP data offset below 5 words", 32);
      std::size_t opt_len = (seg.data_offset_words - 5u) * 4u;
      auto opts = t.take(opt_len);
      seg.options.assign(opts.begin(), opts.end());
      auto rest = t.take(t.remaining());
      seg.payload.assign(rest.begin(), rest.end());
      env.transport = std::move(seg);
      break;
    }
    case static_cast<std::uint8_t>(IpProtocol::Udp): {
      ip.protocol = IpProtocol::Udp;
      UdpDatagram d;
      d.src_port = t.u16();
      d.dst_port = t.u16();
      d.length = t.u16();
      d.checksum = t.u16();
      auto rest = t.take(t.remaining());
      d.payload.assign(rest.begin(), rest.end());
      env.transport = std::move(d);
      break;
    }
    case static_cast<std::uint8_t>(IpProtocol::Icmp): {
      ip.protocol = IpProtocol::Icmp;
      IcmpMessage m;
      m.type = t.u8();
      m.code = t.u8();
      m.checksum = t.u16();
      m.rest_of_header = t.u32();
      auto rest = t.take(t.remaining());
      m.payload.assign(rest.begin(), rest.end());
      env.transport = std::move(m);
      break;
    }
    default:
      throw MalformedPacket("unsupported IP protocol " + std::to_string(proto), 9);
  }
  return env;
}

void finalize_lengths(PacketEnvelope& env) {
  env.ip.version = 4;
  env.ip.header_length_words = 5;
  if (env.is_tcp()) {
    env.ip.protocol = IpProtocol::Tcp;
    auto& seg = env.tcp();
    seg.options.resize((seg.options.size() + 3) / 4 * 4, 0);
    seg.data_offset_words = static_cast<std::uint8_t>(5 + seg.options.size() / 4);
  } else if (env.is_udp()) {
    env.ip.protocol = IpProtocol::Udp;
    env.udp().length = static_cast<std::uint16_t>(kUdpHeaderSize + env.udp().payload.size());
  } else {
    env.ip.protocol = IpProtocol::Icmp;
  }
  env.ip.total_length = static_cast<std::uint16_t>(kIpv4HeaderSize + transport_length(env.transport));
}

void recompute_ip_checksum(PacketEnvelope& env) {
  env.ip.header_checksum = 0;
  Bytes hdr;
  ByteWriter w(hdr);
  encode_ip_header(env.ip, w);
  env.ip.header_checksum = ones_complement_checksum(hdr);
}

void recompute_transport_checksum(PacketEnvelope& env) {
  std::visit(
      [&](auto& seg) {
        using T = std::decay_t<decltype(seg)>;
        seg.checksum = 0;
        Bytes bytes = encode_transport_bytes(env.transport);
        if constexpr (std::is_same_v<T, IcmpMessage>) {
          seg.checksum = ones_complement_checksum(bytes);
        } else {
          std::uint16_t c = ones_complement_checksum(bytes, pseudo_for(env, bytes.size()));
          if constexpr (std::is_same_v<T, UdpDatagram>) {
            if (c == 0) c = 0xffff;  // zero means "no checksum" for UDP
          }
          seg.checksum = c;
        }
      },
      env.transport);
}

void finalize(PacketEnvelope& env) {
  finalize_lengths(env);
  recompute_transport_checksum(env);
  recompute_ip_checksum(env);
}

bool ip_checksum_valid(const PacketEnvelope& env) {
  Bytes hdr;
  ByteWriter w(hdr);
  encode_ip_header(env.ip, w);
  return checksum_verifies(hdr);
}

bool transport_checksum_valid(const PacketEnvelope& env) {
  Bytes bytes = encode_transport_bytes(env.transport);
  if (env.is_icmp()) return checksum_verifies(bytes);
  if (env.is_udp() && env.udp().checksum == 0) return true;
  return checksum_verifies(bytes, pseudo_for(env, bytes.size()));
}

PacketEnvelope make_tcp_packet(TcpPacketSpec spec) {
  PacketEnvelope env;
  env.ip.identification = spec.ip_id;
  env.ip.ttl = spec.ttl;
  env.ip.src = spec.src;
  env.ip.dst = spec.dst;
  TcpSegment seg;
  seg.src_port = spec.src_port;
  seg.dst_port = spec.dst_port;
  seg.seq = spec.seq;
  seg.ack = spec.ack;
  seg.flags = spec.flags;
  seg.window = spec.window;
  seg.payload = std::move(spec.payload);
  env.transport = std::move(seg);
  finalize(env);
  return env;
}

PacketEnvelope make_udp_packet(UdpPacketSpec spec) {
  PacketEnvelope env;
  env.ip.identification = spec.ip_id;
  env.ip.ttl = spec.ttl;
  env.ip.src = spec.src;
  env.ip.dst = spec.dst;
  UdpDatagram d;
  d.src_port = spec.src_port;
  d.dst_port = spec.dst_port;
  d.payload = std::move(spec.payload);
  env.transport = std::move(d);
  finalize(env);
  return env;
}

PacketEnvelope make_time_exceeded(Ipv4Address router, const PacketEnvelope& original,
                                  std::uint16_t ip_id, std::uint8_t ttl) {
  PacketEnvelope env;
  env.ip.identification = ip_id;
  env.ip.ttl = ttl;
  env.ip.src = router;
  env.ip.dst = original.ip.src;
  IcmpMessage m;
  m.type = IcmpMessage::kTimeExceeded;
  Bytes quoted = encode_packet(original);
  quoted.resize(std::min<std::size_t>(quoted.size(), kIpv4HeaderSize + 8));
  m.payload = std::move(quoted);
  env.transport = std::move(m);
  finalize(env);
  return env;
}

std::optional<QuotedHeader> quoted_header(const IcmpMessage& icmp) {
  if (icmp.payload.size() < kIpv4HeaderSize + 4) return std::nullopt;
  ByteReader r(icmp.payload);
  QuotedHeader q;
  if ((r.u8() >> 4) != 4) return std::nullopt;
  r.skip(7);
  q.ttl = r.u8();
  q.protocol = static_cast<IpProtocol>(r.u8());
  r.skip(2);
  q.src = Ipv4Address(r.u32());
  q.dst = Ipv4Address(r.u32());
  q.src_port = r.u16();
  q.dst_port = r.u16();
  return q;
}

std::string describe(const PacketEnvelope& env) {
  std::ostringstream out;
  if (env.is_tcp()) {
    const auto& s = env.tcp();
    out << "TCP " << env.ip.src.to_string() << ':' << s.src_port << " > " << env.ip.dst.to_string()
        << ':' << s.dst_port << " [" << s.flags.to_string() << "] seq=" << s.seq << " ack=" << s.ack
        << " len=" << s.payload.size();
  } else if (env.is_udp()) {
    const auto& d = env.udp();
    out << "UDP " << env.ip.src.to_string() << ':' << d.src_port << " > " << env.ip.dst.to_string()
        << ':' << d.dst_port << " len=" << d.payload.size();
  } else {
    const auto& m = env.icmp();
    out << "ICMP " << env.ip.src.to_string() << " > " << env.ip.dst.to_string()
        << " type=" << int{m.type} << " code=" << int{m.code};
  }
  out << " id=" << env.ip.identification << " ttl=" << int{env.ip.ttl};
  if (!transport_checksum_valid(env)) out << " badsum";
  return out.str();
}

}  // namespace tmlab::net
