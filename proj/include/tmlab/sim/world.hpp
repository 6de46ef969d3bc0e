#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "tmlab/net/address.hpp"
#include "tmlab/net/packet.hpp"
#include "tmlab/sim/censor.hpp"
#include "tmlab/sim/time.hpp"

namespace tmlab::sim {

class World;

class Endpoint {
 public:
  virtual ~Endpoint() = default;
  // Called on delivery of a packet addressed to `self`.
  virtual void on_packet(World& world, net::Ipv4Address self, const net::PacketEnvelope& env) = 0;
  virtual std::string kind() const = 0;
};

// Route from the outside world to the addresses in `prefix`. Position 0 is
// the outside, positions 1..hops.size() are routers, the last position is
// the destination host. The gateway's censor watches the link between
// router `censor_after_hop` and the next position, so a packet needs an
// initial TTL of censor_after_hop + 1 to reach it.
struct PathConfig {
  net::Ipv4Prefix prefix;
  std::vector<net::Ipv4Address> hops;
  int censor_after_hop = 0;
  std::string gateway = "gw0";
};

struct TraceEvent {
  SimTime t{};
  int hop = 0;             // path position where the event happened
  std::string direction;   // "in", "out" or "direct"
  std::string packet;      // net::describe summary
  std::string action;      // send, forward, deliver, drop, ttl-expired, inject
};

struct WorldOptions {
  SimDuration link_latency = millis(1);
  std::uint64_t seed = 0;
  bool trace = true;
};

// Deterministic discrete-event network. Events run in (time, insertion)
// order; identical configuration, seed and inputs give identical traces.
class World {
 public:
  using Tap = std::function<void(const net::PacketEnvelope&)>;

  explicit World(CensorConfig censor, WorldOptions options = {});

  // Gateways without an explicit config use the one given to the constructor.
  void add_gateway(const std::string& name, CensorConfig config);
  void add_path(PathConfig path);
  void add_host(net::Ipv4Address ip, std::unique_ptr<Endpoint> endpoint);
  Endpoint* host(net::Ipv4Address ip) const;
  template <class T>
  T* host_as(net::Ipv4Address ip) const {
    return dynamic_cast<T*>(host(ip));
  }
  // Taps take precedence over endpoints at the same address.
  void attach_tap(net::Ipv4Address ip, Tap tap);
  void detach_tap(net::Ipv4Address ip);

  // Emits a packet from env.ip.src at now(). No field is rewritten.
  void send(const net::PacketEnvelope& env);
  void schedule(SimTime at, std::function<void()> fn);
  void schedule_send(SimTime at, net::PacketEnvelope env);

  // Runs every event with time <= until, then sets the clock to `until`.
  void run_until(SimTime until);
  // Runs until the queue is empty.
  void run();
  SimTime now() const { return now_; }
  bool idle() const { return queue_.empty(); }

  // IP identification for endpoint-originated packets; never 30000.
  std::uint16_t next_ip_id();
  std::uint32_t random_u32();

  Censor& censor(const std::string& gateway = "gw0");
  std::vector<std::string> gateways() const;
  const PathConfig* path_for(net::Ipv4Address ip) const;
  const std::vector<TraceEvent>& trace() const { return trace_; }
  void clear_trace() { trace_.clear(); }

 private:
  struct Event {
    SimTime t;
    std::uint64_t seq;
    std::function<void()> fn;
    bool operator>(const Event& o) const { return t != o.t ? t > o.t : seq > o.seq; }
  };

  std::size_t path_index(net::Ipv4Address ip) const;
  void depart(net::PacketEnvelope env, std::size_t path, int pos, int dir);
  void arrive(net::PacketEnvelope env, std::size_t path, int pos, int dir);
  void deliver(const net::PacketEnvelope& env, int pos, const char* direction);
  void note(int hop, const char* direction, const net::PacketEnvelope& env, const char* action);

  CensorConfig base_config_;
  WorldOptions options_;
  SimTime now_{};
  std::uint64_t seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  std::vector<PathConfig> paths_;
  std::map<std::string, std::unique_ptr<Censor>> censors_;
  std::unordered_map<net::Ipv4Address, std::unique_ptr<Endpoint>> hosts_;
  std::unordered_map<net::Ipv4Address, Tap> taps_;
  std::vector<TraceEvent> trace_;
  std::mt19937_64 rng_;
  std::uint16_t ip_id_;
};

}  // namespace tmlab::sim
