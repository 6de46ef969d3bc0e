#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tmlab/blocklist/rule.hpp"
#include "tmlab/evasion/strategy.hpp"
#include "tmlab/net/address.hpp"
#include "tmlab/sim/world.hpp"

namespace tmlab::evasion {

using blocklist::Protocol;

struct TrialSetup {
  net::Ipv4Address client{198, 51, 100, 7};  // outside the censored network
  net::Ipv4Address server;                   // a live HttpServer or DnsResolver
  std::uint16_t client_port = 40000;         // baseline; the strategy trial uses the next port
  sim::SimDuration timeout = sim::secs(3);   // listening time after the last scheduled packet
  std::uint64_t seed = 0;                    // feeds tamper corrupt
};

// One client exchange: a TCP handshake plus request (HTTP GET or TLS
// ClientHello), or a DNS A query, with every outbound packet passed
// through the strategy.
struct TrialOutcome {
  sim::FlowKey flow;
  bool censored = false;   // an injection reached the client before the reply
  bool delivered = false;  // the server saw the request and its reply reached the client first
  bool request_intact = false;         // server bytes equal the unmodified request
  std::optional<std::string> server_host;  // Host/SNI/qname the server extracted
  std::size_t injections = 0;
  std::size_t malformed_replies = 0;   // DNS replies a strict client discards
  std::vector<std::string> warnings;
  std::size_t trace_begin = 0, trace_end = 0;
};

// Without a strategy the packets go out unmodified.
TrialOutcome run_trial(sim::World& world, const Strategy* strategy, Protocol protocol, const std::string& domain,
                       const TrialSetup& setup, std::uint16_t client_port);

struct EvasionReport {
  std::string strategy;
  Protocol protocol = Protocol::Http;
  std::string domain;
  bool baseline_censored = false;
  bool with_strategy_delivered = false;
  std::size_t injections_observed = 0;  // during the strategy trial
  bool request_intact = false;
  std::optional<std::string> server_host;
  std::vector<std::string> warnings;
  std::size_t trace_begin = 0, trace_end = 0;  // indices into world.trace() for the strategy trial

  bool successful() const { return baseline_censored && with_strategy_delivered; }
};

class InvalidTrial : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Baseline without the strategy (must be censored, else InvalidTrial), then
// the strategy trial from the next source port one second later.
EvasionReport evaluate(const Strategy& strategy, Protocol protocol, const std::string& domain, sim::World& world,
                       const TrialSetup& setup);

std::string report_json(const EvasionReport& report);

}  // namespace tmlab::evasion
