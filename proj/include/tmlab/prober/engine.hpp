#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tmlab/net/packet.hpp"
#include "tmlab/prober/flow_allocator.hpp"
#include "tmlab/prober/records.hpp"
#include "tmlab/sim/world.hpp"

namespace tmlab::prober {

struct ProbeOptions {
  sim::SimDuration sleep = sim::secs(9);     // between the two TCP packets
  sim::SimDuration timeout = sim::secs(3);   // listening time after the last packet
  std::optional<net::TcpFlags> second_flags;  // nullopt: byte-identical copy of the first
  std::uint8_t ttl = 64;
  std::optional<sim::FlowKey> forced_flow;   // bypasses the allocator (flow-discipline experiments)
  std::optional<net::Ipv4Address> source;    // preferred source address
};

struct ProbeRequest {
  Protocol protocol = Protocol::Dns;
  std::string domain;
  net::Ipv4Address target;
  std::uint16_t port = 0;  // 0: 53 / 80 / 443 by protocol
  ProbeOptions options;
  bool is_control = false;
};

std::uint16_t default_port(Protocol p);

// Probe payloads: a DNS A query, a canonical GET, or a ClientHello.
net::Bytes probe_payload(Protocol p, const std::string& domain, std::uint16_t dns_id = 0);

// Drives DNS and two-packet TCP probes over a simulated world. Replies are
// matched to probes by 4-tuple (Time Exceeded by the quoted header), so
// many probes can be in flight at once. Taps are installed on every
// allocator source and removed on destruction.
class Prober {
 public:
  using Callback = std::function<void(const ProbeRecord&)>;

  Prober(sim::World& world, FlowAllocator& allocator);
  ~Prober();
  Prober(const Prober&) = delete;
  Prober& operator=(const Prober&) = delete;

  // Starts a probe at world.now(). Returns false on allocator backpressure;
  // `done` is called from the event loop when the verdict is final.
  bool start(const ProbeRequest& request, Callback done);
  // Starts a probe and runs the world until its verdict.
  ProbeRecord run(const ProbeRequest& request);

  std::size_t in_flight() const { return active_.size(); }
  sim::World& world() { return world_; }
  FlowAllocator& allocator() { return allocator_; }

 private:
  struct Active {
    ProbeRecord record;
    ProbeRequest request;
    sim::FlowKey flow;
    net::PacketEnvelope first;
    Callback done;
    bool second_sent = false;
    std::optional<Evidence> early_signature;
    std::optional<Evidence> late_signature;
    bool malformed_signature = false;
    bool genuine = false;
  };

  void on_receive(const net::PacketEnvelope& env);
  void send_second(std::uint64_t id);
  void finish(std::uint64_t id);

  sim::World& world_;
  FlowAllocator& allocator_;
  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, Active> active_;
  std::map<sim::FlowKey, std::uint64_t> by_flow_;  // keyed from the prober's side
};

}  // namespace tmlab::prober
