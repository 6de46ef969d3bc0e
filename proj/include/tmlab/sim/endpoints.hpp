#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "tmlab/net/address.hpp"
#include "tmlab/net/bytes.hpp"
#include "tmlab/sim/world.hpp"

namespace tmlab::sim {

struct ObservedRequest {
  SimTime t{};
  net::Ipv4Address client;
  std::uint16_t client_port = 0;
  net::Bytes bytes;
  std::optional<std::string> host;  // strict HTTP Host or TLS SNI
};

// Minimal TCP responder: handshakes, in-order reassembly (out-of-order
// data is held), cumulative ACKs, RST for segments of unknown connections.
// Segments with a bad IP or TCP checksum are dropped unseen.
class TcpEndpoint : public Endpoint {
 public:
  void on_packet(World& world, net::Ipv4Address self, const net::PacketEnvelope& env) override;
  std::size_t open_connections() const { return conns_.size(); }

 protected:
  struct Connection {
    std::uint32_t snd_next = 0;
    std::uint32_t rcv_next = 0;
    net::Bytes stream;
    std::size_t consumed = 0;  // stream bytes already handed to on_stream
    std::map<std::uint32_t, net::Bytes> out_of_order;
    bool responded = false;
  };
  using ConnKey = std::tuple<net::Ipv4Address, std::uint16_t, std::uint16_t>;  // peer, peer port, local port

  // Bytes to send back, if any, after the stream grew.
  virtual std::optional<net::Bytes> on_stream(World& world, const net::PacketEnvelope& last, Connection& conn) = 0;

 private:
  std::map<ConnKey, Connection> conns_;
};

// Answers a complete HTTP request head with a fixed 200 response and a
// complete ClientHello record with a fixed handshake record. Every
// completed request is recorded.
class HttpServer : public TcpEndpoint {
 public:
  std::string kind() const override { return "http_server"; }
  const std::vector<ObservedRequest>& requests() const { return requests_; }

  static const std::string& canned_response();
  static const net::Bytes& canned_tls_response();

 protected:
  std::optional<net::Bytes> on_stream(World& world, const net::PacketEnvelope& last, Connection& conn) override;

 private:
  std::vector<ObservedRequest> requests_;
};

class EchoTcp : public TcpEndpoint {
 public:
  std::string kind() const override { return "echo_tcp"; }

 protected:
  std::optional<net::Bytes> on_stream(World& world, const net::PacketEnvelope& last, Connection& conn) override;
};

struct ObservedQuery {
  SimTime t{};
  net::Ipv4Address client;
  std::vector<std::string> qnames;
};

// Answers the first question from its zone (NXDOMAIN otherwise). Decoding
// is tolerant of wrong declared counts.
class DnsResolver : public Endpoint {
 public:
  explicit DnsResolver(std::map<std::string, net::Ipv4Address> zone = {}) : zone_(std::move(zone)) {}
  void on_packet(World& world, net::Ipv4Address self, const net::PacketEnvelope& env) override;
  std::string kind() const override { return "dns_resolver"; }
  const std::vector<ObservedQuery>& queries() const { return queries_; }

 private:
  std::map<std::string, net::Ipv4Address> zone_;
  std::vector<ObservedQuery> queries_;
};

class Unresponsive : public Endpoint {
 public:
  void on_packet(World&, net::Ipv4Address, const net::PacketEnvelope&) override {}
  std::string kind() const override { return "unresponsive"; }
};

}  // namespace tmlab::sim
