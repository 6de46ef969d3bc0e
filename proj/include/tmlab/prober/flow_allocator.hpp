#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "tmlab/sim/censor.hpp"
#include "tmlab/sim/time.hpp"

namespace tmlab::prober {

using sim::SimDuration;
using sim::SimTime;

struct AllocatorConfig {
  std::vector<net::Ipv4Address> sources;
  std::uint16_t port_min = 20000;
  std::uint16_t port_max = 59999;
  sim::SimDuration quarantine = sim::secs(35);
  std::uint64_t seed = 0;
  std::size_t max_attempts = 256;
};

// Hands out probe 4-tuples so that no tuple is reused within the
// quarantine of its last use. Sources rotate round-robin; each source walks
// its port range from a seeded offset.
class FlowAllocator {
 public:
  // Throws std::invalid_argument for an empty source list, an empty port
  // range or a quarantine shorter than 35 s.
  explicit FlowAllocator(AllocatorConfig config);

  // nullopt is backpressure: no free tuple within max_attempts, or no
  // active source (or `source` is retired).
  std::optional<sim::FlowKey> allocate(net::Ipv4Address target, std::uint16_t target_port, SimTime now,
                                       std::optional<net::Ipv4Address> source = std::nullopt);
  // Records a later use of an allocated tuple.
  void touch(const sim::FlowKey& flow, SimTime t);

  void retire_source(net::Ipv4Address ip);
  bool source_active(net::Ipv4Address ip) const { return !retired_.contains(ip); }
  std::vector<net::Ipv4Address> active_sources() const;
  const AllocatorConfig& config() const { return config_; }

 private:
  void prune(SimTime now);

  AllocatorConfig config_;
  std::vector<std::uint32_t> cursor_;
  std::size_t next_source_ = 0;
  std::set<net::Ipv4Address> retired_;
  std::map<sim::FlowKey, SimTime> last_use_;
  std::deque<std::pair<SimTime, sim::FlowKey>> expiry_;
};

}  // namespace tmlab::prober
