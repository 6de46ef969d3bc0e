#pragma once

#include <compare>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "tmlab/blocklist/blocklists.hpp"
#include "tmlab/net/address.hpp"
#include "tmlab/net/packet.hpp"
#include "tmlab/sim/time.hpp"

namespace tmlab::sim {

// In-country addresses whose traffic the censor examines: explicit hosts
// plus whole prefixes.
class FilterSet {
 public:
  static FilterSet everything();

  void add(net::Ipv4Address ip) { hosts_.insert(ip); }
  void add(net::Ipv4Prefix prefix) { prefixes_.push_back(prefix); }
  bool contains(net::Ipv4Address ip) const;
  std::size_t host_count() const { return hosts_.size(); }

 private:
  bool all_ = false;
  std::unordered_set<net::Ipv4Address> hosts_;
  std::vector<net::Ipv4Prefix> prefixes_;
};

struct BanPolicy {
  bool enabled = false;
  std::size_t max_injections_per_source = 10000;
  SimDuration window = secs(86400);
  std::optional<SimDuration> ban_duration;  // nullopt: permanent
};

struct CensorConfig {
  FilterSet filtered_ips = FilterSet::everything();
  blocklist::Blocklists blocklists;
  SimDuration residual_window = secs(30);
  SimDuration trigger_min = secs(5);
  SimDuration trigger_max = secs(29);
  SimDuration freepass_window = secs(5);
  std::uint16_t injection_ip_id = 30000;
  std::uint8_t injection_ttl = 128;
  std::size_t dns_count_threshold = 25;
  std::size_t inspect_byte_limit = 4096;
  BanPolicy ban_policy;
  bool legacy_dns_count_bug = false;
  std::uint64_t rng_seed = 0;
};

// Throws std::invalid_argument on non-positive durations or
// trigger_min >= trigger_max.
void validate(const CensorConfig& config);

struct FlowKey {
  net::Ipv4Address src_ip;
  std::uint16_t src_port = 0;
  net::Ipv4Address dst_ip;
  std::uint16_t dst_port = 0;

  FlowKey reversed() const { return {dst_ip, dst_port, src_ip, src_port}; }
  // Same key for both directions of a connection.
  FlowKey normalized() const;
  std::string to_string() const;

  auto operator<=>(const FlowKey&) const = default;
};

FlowKey flow_of(const net::PacketEnvelope& env);

struct TcbEntry {
  bool handshake_seen = false;
};

// Client bytes the censor has accumulated for one direction of a flow.
// Inspection stops at the first decision.
struct StreamInspector {
  net::Bytes buffer;
  std::vector<std::size_t> boundaries;
  std::uint32_t next_seq = 0;
  bool truncated = false;
  bool done = false;
  SimTime last_seen{};
};

struct CensorState {
  std::map<FlowKey, TcbEntry> tcb;
  std::map<FlowKey, SimTime> residual;
  std::map<FlowKey, SimTime> pending;
  std::map<FlowKey, SimTime> ignored;
  std::map<FlowKey, SimTime> rst_seen;
  std::map<net::Ipv4Address, std::deque<SimTime>> source_injection_counts;
  std::map<net::Ipv4Address, std::optional<SimTime>> banned_sources;  // nullopt: forever
  std::map<FlowKey, StreamInspector> streams;                         // directed keys
};

enum class InjectionKind { DnsResponse, Rst };

struct InjectionRecord {
  SimTime t{};
  FlowKey trigger_flow;  // as seen on the triggering packet
  InjectionKind kind = InjectionKind::Rst;
  std::string reason;  // "dns", "http", "https", "residual", "second-packet"
  std::string name;    // matched name, empty for residual
  net::PacketEnvelope packet;
};

// The bidirectional filtering middlebox. Each call handles one packet
// crossing the censor's link and returns the packets it injects; injected
// packets are addressed back to the triggering packet's sender.
class Censor {
 public:
  explicit Censor(CensorConfig config);

  std::vector<net::PacketEnvelope> on_packet(const net::PacketEnvelope& env, SimTime t);

  bool is_banned(net::Ipv4Address src, SimTime t) const;

  const CensorConfig& config() const { return config_; }
  CensorConfig& mutable_config() { return config_; }
  const CensorState& state() const { return state_; }
  const std::vector<InjectionRecord>& injections() const { return log_; }

 private:
  std::vector<net::PacketEnvelope> on_udp(const net::PacketEnvelope& env, SimTime t);
  std::vector<net::PacketEnvelope> on_tcp(const net::PacketEnvelope& env, SimTime t);
  // Feeds a data segment to the flow's inspector. Returns the matched
  // name and protocol when this segment completes a forbidden request.
  std::optional<std::pair<std::string, blocklist::Protocol>> inspect(const net::PacketEnvelope& env, SimTime t);
  net::PacketEnvelope make_rst(const net::PacketEnvelope& trigger) const;
  void record(const net::PacketEnvelope& trigger, SimTime t, InjectionKind kind, std::string reason,
              std::string name, const net::PacketEnvelope& injected);
  void decay(net::Ipv4Address src, SimTime t);

  CensorConfig config_;
  CensorState state_;
  std::vector<InjectionRecord> log_;
};

}  // namespace tmlab::sim
