#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tmlab/evasion/strategy.hpp"
#include "tmlab/net/packet.hpp"

namespace tmlab::evasion {

struct ScheduledPacket {
  net::PacketEnvelope packet;
  sim::SimDuration offset{};  // after the moment the input packet was to be sent
};

// Whether `trigger` selects this outbound packet. TCP flags compare as a
// set; DNS needs a parseable query to port 53; HTTP needs a request whose
// selected part (Host header, method, version) exists.
bool trigger_matches(const Trigger& trigger, const net::PacketEnvelope& packet);

// Rewrites one outbound packet with the first outbound tree whose trigger
// matches; other packets pass through untouched. Output packets get fresh
// lengths and checksums unless a checksum was corrupted. `rng` feeds
// corrupt. Problems that leave the packet unchanged (a fragment index past
// the payload, a tamper that does not apply) are appended to `warnings`.
std::vector<ScheduledPacket> apply_strategy(const Strategy& strategy, const net::PacketEnvelope& packet,
                                            std::mt19937_64& rng, std::vector<std::string>* warnings = nullptr);

// Applies the strategy to each packet of a stream; offsets stay relative to
// their own input packet.
std::vector<ScheduledPacket> apply_strategy(const Strategy& strategy, const std::vector<net::PacketEnvelope>& stream,
                                            std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

}  // namespace tmlab::evasion
