#include "tmlab/prober/localize.hpp"

#include <stdexcept>

namespace tmlab::prober {

LocalizeResult localize(Prober& prober, net::Ipv4Address target, const std::string& known_blocked, int max_ttl,
                        Protocol protocol, ProbeOptions options) {
  if (max_ttl < 1 || max_ttl > 255) throw std::invalid_argument("max_ttl must be in 1..255");
  sim::World& world = prober.world();
  std::vector<std::optional<ProbeRecord>> by_ttl(static_cast<std::size_t>(max_ttl));
  std::size_t outstanding = 0;
  for (int ttl = 1; ttl <= max_ttl; ++ttl) {
    ProbeRequest req{.protocol = protocol, .domain = known_blocked, .target = target, .options = options};
    req.options.ttl = static_cast<std::uint8_t>(ttl);
    auto slot = static_cast<std::size_t>(ttl - 1);
    if (!prober.start(req, [&, slot](const ProbeRecord& r) {
          by_ttl[slot] = r;
          --outstanding;
        })) {
      throw std::runtime_error("no free flow for localization probe");
    }
    ++outstanding;
  }
  while (outstanding > 0) world.run_until(world.now() + sim::secs(1));

  LocalizeResult out;
  for (int ttl = 1; ttl <= max_ttl; ++ttl) {
    const ProbeRecord& r = *by_ttl[static_cast<std::size_t>(ttl - 1)];
    out.records.push_back(r);
    out.path.push_back(r.time_exceeded_from.empty() ? std::nullopt
                                                    : std::optional<net::Ipv4Address>(r.time_exceeded_from.front()));
    if (!out.censor_hop && r.verdict == Verdict::Censored) {
      out.censor_hop = ttl;
      out.evidence = r.evidence;
    }
  }
  // Trailing TTLs that reached the destination add nothing to the path.
  while (!out.path.empty() && !out.path.back()) out.path.pop_back();
  out.filtered = out.censor_hop.has_value();
  if (out.filtered) out.consistent = out.evidence->observed_ttl == kInjectionTtl - (*out.censor_hop - 1);
  return out;
}

}  // namespace tmlab::prober
