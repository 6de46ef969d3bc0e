#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "tmlab/blocklist/rule.hpp"
#include "tmlab/net/address.hpp"
#include "tmlab/sim/time.hpp"

namespace tmlab::prober {

using blocklist::Protocol;
using sim::SimTime;

enum class Verdict { Censored, NotCensored, Inconclusive, SourceBanSuspected };

std::string_view verdict_name(Verdict v);  // "censored", "not_censored", ...

inline constexpr std::uint16_t kInjectionIpId = 30000;
inline constexpr std::uint8_t kInjectionTtl = 128;

struct Evidence {
  std::uint16_t ip_id = 0;
  std::uint8_t observed_ttl = 0;
  std::string kind;  // "RST", "RST+ACK" or "DNS-A"
};

struct ProbeRecord {
  std::uint64_t probe_id = 0;
  Protocol protocol = Protocol::Dns;
  std::string domain;
  net::Ipv4Address target_ip;
  std::uint16_t target_port = 0;
  net::Ipv4Address src_ip;
  std::uint16_t src_port = 0;
  SimTime t_sent{};
  std::optional<SimTime> t_second;  // TCP protocols only
  SimTime t_verdict{};
  Verdict verdict = Verdict::Inconclusive;
  std::optional<Evidence> evidence;
  bool responsive = false;  // the endpoint itself answered
  std::vector<net::Ipv4Address> time_exceeded_from;
  bool is_control = false;
};

// One JSON object per record, newline-terminated.
std::string record_json(const ProbeRecord& r);
void write_records_jsonl(const std::vector<ProbeRecord>& records, std::ostream& out);

}  // namespace tmlab::prober
