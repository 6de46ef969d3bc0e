#pragma once

#include <string>
#include <vector>

#include "tmlab/blocklist/blocklists.hpp"
#include "tmlab/net/http.hpp"
#include "tmlab/net/packet.hpp"
#include "tmlab/sim/censor.hpp"

namespace tmlab::sim::testing {

inline const net::Ipv4Address kOutside(198, 51, 100, 7);
inline const net::Ipv4Address kInside(95, 85, 96, 36);

inline CensorConfig default_config() {
  CensorConfig c;
  for (const char* r : {".*twitter\\.com.*", ".*\\.cyou.*", "^doh\\..*"}) {
    c.blocklists.dns.add(blocklist::parse_rule(r));
    c.blocklists.http.add(blocklist::parse_rule(r));
    c.blocklists.https.add(blocklist::parse_rule(r));
  }
  return c;
}

inline net::PacketEnvelope tcp(net::TcpFlags flags, std::uint32_t seq, std::uint32_t ack, net::Bytes payload = {},
                               std::uint16_t sport = 40000, std::uint16_t dport = 80) {
  return net::make_tcp_packet({.src = kOutside,
                               .src_port = sport,
                               .dst = kInside,
                               .dst_port = dport,
                               .flags = flags,
                               .seq = seq,
                               .ack = ack,
                               .payload = std::move(payload),
                               .ip_id = 4242});
}

inline net::PacketEnvelope from_inside(net::TcpFlags flags, std::uint32_t seq, std::uint32_t ack,
                                       std::uint16_t sport = 80, std::uint16_t dport = 40000) {
  return net::make_tcp_packet({.src = kInside,
                               .src_port = sport,
                               .dst = kOutside,
                               .dst_port = dport,
                               .flags = flags,
                               .seq = seq,
                               .ack = ack,
                               .ip_id = 777});
}

inline net::Bytes http_get(const std::string& host) { return net::build_http_get(host).raw(); }

inline constexpr std::uint8_t PA = net::TcpFlags::PSH | net::TcpFlags::ACK;

}  // namespace tmlab::sim::testing
