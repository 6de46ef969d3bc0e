#include <gtest/gtest.h>

#include <random>

#include "tmlab/net/packet.hpp"

namespace tmlab::net {
namespace {

Bytes random_bytes(std::mt19937& rng, std::size_t n) {
  Bytes b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return b;
}

Ipv4Header random_ip(std::mt19937& rng) {
  Ipv4Header ip;
  ip.tos = static_cast<std::uint8_t>(rng());
  ip.identification = static_cast<std::uint16_t>(rng());
  ip.flags_fragment = static_cast<std::uint16_t>(rng() & 0x4000);
  ip.ttl = static_cast<std::uint8_t>(rng());
  ip.src = Ipv4Address(static_cast<std::uint32_t>(rng()));
  ip.dst = Ipv4Address(static_cast<std::uint32_t>(rng()));
  return ip;
}

// Lengths are made consistent; checksums are left valid or deliberately
// broken at random.
PacketEnvelope random_packet(std::mt19937& rng, int kind) {
  PacketEnvelope env;
  env.ip = random_ip(rng);
  if (kind == 0) {
    TcpSegment s;
    s.src_port = static_cast<std::uint16_t>(rng());
    s.dst_port = static_cast<std::uint16_t>(rng());
    s.seq = static_cast<std::uint32_t>(rng());
    s.ack = static_cast<std::uint32_t>(rng());
    s.flags = TcpFlags(static_cast<std::uint8_t>(rng()));
    s.window = static_cast<std::uint16_t>(rng());
    s.urgent_pointer = static_cast<std::uint16_t>(rng());
    s.options = random_bytes(rng, 4 * (rng() % 3));
    s.payload = random_bytes(rng, rng() % 80);
    env.transport = std::move(s);
  } else if (kind == 1) {
    UdpDatagram d;
    d.src_port = static_cast<std::uint16_t>(rng());
    d.dst_port = static_cast<std::uint16_t>(rng());
    d.payload = random_bytes(rng, rng() % 80);
    env.transport = std::move(d);
  } else {
    IcmpMessage m;
    m.code = static_cast<std::uint8_t>(rng() % 2);
    m.payload = random_bytes(rng, 28);
    env.transport = std::move(m);
  }
  finalize(env);
  if (rng() % 4 == 0) {
    std::visit([&](auto& t) { t.checksum ^= static_cast<std::uint16_t>(1 + rng() % 0xfffe); }, env.transport);
  }
  return env;
}

TEST(Packet, MinimalSynIsFortyBytesAndRoundTrips) {
  auto syn = make_tcp_packet({.src = Ipv4Address(10, 0, 0, 1),
                              .src_port = 1234,
                              .dst = Ipv4Address(10, 0, 0, 2),
                              .dst_port = 80,
                              .flags = TcpFlags(TcpFlags::SYN)});
  auto wire = encode_packet(syn);
  EXPECT_EQ(wire.size(), 40u);
  EXPECT_EQ(decode_packet(wire), syn);
}

TEST(Packet, InjectionSignatureBytes) {
  auto env = make_tcp_packet({.src = Ipv4Address(10, 0, 0, 1),
                              .dst = Ipv4Address(10, 0, 0, 2),
                              .flags = TcpFlags(TcpFlags::RST),
                              .ip_id = 30000,
                              .ttl = 128});
  auto wire = encode_packet(env);
  EXPECT_EQ(wire[4], 0x75);
  EXPECT_EQ(wire[5], 0x30);
  EXPECT_EQ(wire[8], 0x80);
}

TEST(Packet, RoundTripPropertyPerProtocol) {
  std::mt19937 rng(2024);
  for (int kind = 0; kind < 3; ++kind) {
    for (int i = 0; i < 10000; ++i) {
      auto env = random_packet(rng, kind);
      auto back = decode_packet(encode_packet(env));
      ASSERT_EQ(back, env) << "kind " << kind << " case " << i;
    }
  }
}

TEST(Packet, CorruptedChecksumSurvivesRoundTrip) {
  auto env = make_tcp_packet({.src = Ipv4Address(1, 2, 3, 4),
                              .dst = Ipv4Address(5, 6, 7, 8),
                              .flags = TcpFlags(TcpFlags::RST)});
  env.tcp().checksum ^= 0x1234;
  auto back = decode_packet(encode_packet(env));
  EXPECT_EQ(back, env);
  EXPECT_FALSE(transport_checksum_valid(back));
}

TEST(Packet, DecodeRejectsTruncationAndShortHeaders) {
  auto env = make_tcp_packet({.src = Ipv4Address(1, 2, 3, 4), .dst = Ipv4Address(5, 6, 7, 8)});
  auto wire = encode_packet(env);
  for (std::size_t n = 0; n < wire.size(); ++n) {
    EXPECT_THROW(decode_packet(ByteView(wire).first(n)), MalformedPacket) << n;
  }
  auto bad = wire;
  bad[0] = 0x44;
  EXPECT_THROW(decode_packet(bad), MalformedPacket);
  bad = wire;
  bad[kIpv4HeaderSize + 12] = 0x40;
  EXPECT_THROW(decode_packet(bad), MalformedPacket);
}

TEST(Packet, TimeExceededQuotesOriginal) {
  auto probe = make_tcp_packet({.src = Ipv4Address(1, 1, 1, 1),
                                .src_port = 5555,
                                .dst = Ipv4Address(2, 2, 2, 2),
                                .dst_port = 443,
                                .ttl = 1});
  auto te = make_time_exceeded(Ipv4Address(9, 9, 9, 9), probe);
  EXPECT_EQ(te.ip.dst, probe.ip.src);
  auto q = quoted_header(te.icmp());
  ASSERT_TRUE(q);
  EXPECT_EQ(q->src_port, 5555);
  EXPECT_EQ(q->dst_port, 443);
  EXPECT_EQ(q->dst, Ipv4Address(2, 2, 2, 2));
  EXPECT_TRUE(transport_checksum_valid(te));
}

TEST(Packet, FlagLetters) {
  EXPECT_EQ(TcpFlags(TcpFlags::PSH | TcpFlags::ACK).to_string(), "PA");
  EXPECT_EQ(TcpFlags::parse("FSRP")->bits(), TcpFlags::FIN | TcpFlags::SYN | TcpFlags::RST | TcpFlags::PSH);
  EXPECT_FALSE(TcpFlags::parse("X"));
}

}  // namespace
}  // namespace tmlab::net
