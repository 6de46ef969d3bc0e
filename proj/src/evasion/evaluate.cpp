#include "tmlab/evasion/evaluate.hpp"

#include <algorithm>
#include <json.hpp>
#include <random>

#include "tmlab/evasion/apply.hpp"
#include "tmlab/net/dns.hpp"
#include "tmlab/net/http.hpp"
#include "tmlab/net/tls.hpp"
#include "tmlab/sim/endpoints.hpp"

namespace tmlab::evasion {
namespace {

using net::PacketEnvelope;
using net::TcpFlags;

constexpr std::uint16_t kInjectionIpId = 30000;

class Client {
 public:
  Client(sim::World& world, const Strategy* strategy, const TrialSetup& setup, TrialOutcome& out)
      : world_(world), strategy_(strategy), rng_(setup.seed), out_(out) {}

  // Sends through the strategy; returns the latest scheduled offset.
  sim::SimDuration send(const PacketEnvelope& p) {
    std::vector<ScheduledPacket> packets =
        strategy_ ? apply_strategy(*strategy_, p, rng_, &out_.warnings) : std::vector<ScheduledPacket>{{p, {}}};
    sim::SimDuration latest{};
    for (auto& s : packets) {
      latest = std::max(latest, s.offset);
      if (s.offset == sim::SimDuration{}) world_.send(s.packet);
      else world_.schedule_send(world_.now() + s.offset, std::move(s.packet));
    }
    return latest;
  }

 private:
  sim::World& world_;
  const Strategy* strategy_;
  std::mt19937_64 rng_;
  TrialOutcome& out_;
};

std::size_t count_injections(sim::World& world, const sim::FlowKey& flow, std::size_t from) {
  const auto* path = world.path_for(flow.dst_ip);
  if (!path) return 0;
  const auto& log = world.censor(path->gateway).injections();
  return static_cast<std::size_t>(std::count_if(log.begin() + static_cast<std::ptrdiff_t>(from), log.end(),
                                                [&](const sim::InjectionRecord& r) {
                                                  return r.trigger_flow.normalized() == flow.normalized();
                                                }));
}

std::size_t log_size(sim::World& world, net::Ipv4Address server) {
  const auto* path = world.path_for(server);
  return path ? world.censor(path->gateway).injections().size() : 0;
}

void tcp_trial(sim::World& world, Client& client, Protocol protocol, const std::string& domain,
               const TrialSetup& setup, TrialOutcome& out) {
  auto* server = world.host_as<sim::HttpServer>(setup.server);
  if (!server) throw InvalidTrial("no HTTP server at " + setup.server.to_string());
  const std::size_t seen_before = server->requests().size();
  const net::Bytes request =
      protocol == Protocol::Http ? net::build_http_get(domain).raw() : net::build_client_hello(domain).raw();
  const std::uint32_t isn = world.random_u32();
  const auto& flow = out.flow;

  bool established = false, replied = false, reset = false;
  world.attach_tap(setup.client, [&](const PacketEnvelope& p) {
    if (!p.is_tcp() || p.ip.src != flow.dst_ip || p.tcp().src_port != flow.dst_port ||
        p.tcp().dst_port != flow.src_port) {
      return;
    }
    const auto& t = p.tcp();
    if (t.flags.has(TcpFlags::RST)) {
      if (established && !replied) reset = true;
      return;
    }
    if (!established && t.flags.has_all(TcpFlags::SYN | TcpFlags::ACK) && t.ack == isn + 1) {
      established = true;
      auto spec = net::TcpPacketSpec{.src = flow.src_ip, .src_port = flow.src_port, .dst = flow.dst_ip,
                                     .dst_port = flow.dst_port, .flags = TcpFlags::ACK, .seq = isn + 1,
                                     .ack = t.seq + 1, .ip_id = world.next_ip_id()};
      client.send(net::make_tcp_packet(spec));
      spec.flags = TcpFlags::PSH | TcpFlags::ACK;
      spec.payload = request;
      spec.ip_id = world.next_ip_id();
      client.send(net::make_tcp_packet(spec));
      return;
    }
    if (established && !t.payload.empty() && !reset) replied = true;
  });
  const sim::SimDuration last = client.send(net::make_tcp_packet({.src = flow.src_ip, .src_port = flow.src_port,
                                                                  .dst = flow.dst_ip, .dst_port = flow.dst_port,
                                                                  .flags = TcpFlags::SYN, .seq = isn,
                                                                  .ip_id = world.next_ip_id()}));
  world.run_until(world.now() + last + setup.timeout);
  world.detach_tap(setup.client);

  const auto& reqs = server->requests();
  for (std::size_t i = seen_before; i < reqs.size(); ++i) {
    if (reqs[i].client != flow.src_ip || reqs[i].client_port != flow.src_port) continue;
    out.server_host = reqs[i].host;
    out.request_intact = reqs[i].bytes == request;
  }
  out.censored = reset;
  out.delivered = replied && !reset && out.server_host && net::iequals(*out.server_host, domain);
}

void dns_trial(sim::World& world, Client& client, const std::string& domain, const TrialSetup& setup,
               TrialOutcome& out) {
  auto* resolver = world.host_as<sim::DnsResolver>(setup.server);
  if (!resolver) throw InvalidTrial("no DNS resolver at " + setup.server.to_string());
  const std::size_t seen_before = resolver->queries().size();
  const auto id = static_cast<std::uint16_t>(world.random_u32());
  const auto& flow = out.flow;

  std::optional<bool> first_is_injection;
  world.attach_tap(setup.client, [&](const PacketEnvelope& p) {
    if (!p.is_udp() || p.ip.src != flow.dst_ip || p.udp().src_port != flow.dst_port ||
        p.udp().dst_port != flow.src_port) {
      return;
    }
    auto m = net::strict_decode_dns(p.udp().payload);
    if (!m || !m->flags.qr || m->id != id) {
      ++out.malformed_replies;
      return;
    }
    if (first_is_injection) return;
    bool sinkhole = p.ip.identification == kInjectionIpId;
    for (const auto& rr : m->answers) {
      auto a = net::a_record_address(rr);
      sinkhole = sinkhole || (a && *a == net::Ipv4Address(127, 0, 0, 1));
    }
    first_is_injection = sinkhole;
  });
  const sim::SimDuration last = client.send(net::make_udp_packet(
      {.src = flow.src_ip, .src_port = flow.src_port, .dst = flow.dst_ip, .dst_port = flow.dst_port,
       .payload = net::encode_dns(net::build_dns_query(domain, id)), .ip_id = world.next_ip_id()}));
  world.run_until(world.now() + last + setup.timeout);
  world.detach_tap(setup.client);

  const auto& qs = resolver->queries();
  for (std::size_t i = seen_before; i < qs.size(); ++i) {
    if (qs[i].client == flow.src_ip && !qs[i].qnames.empty()) out.server_host = qs[i].qnames.front();
  }
  out.request_intact = out.server_host.has_value();
  out.censored = first_is_injection.value_or(false);
  out.delivered = first_is_injection.has_value() && !*first_is_injection && out.server_host &&
                  net::iequals(*out.server_host, domain);
}

}  // namespace

TrialOutcome run_trial(sim::World& world, const Strategy* strategy, Protocol protocol, const std::string& domain,
                       const TrialSetup& setup, std::uint16_t client_port) {
  TrialOutcome out;
  out.flow = {setup.client, client_port, setup.server,
              static_cast<std::uint16_t>(protocol == Protocol::Dns ? 53 : protocol == Protocol::Http ? 80 : 443)};
  out.trace_begin = world.trace().size();
  const std::size_t log_from = log_size(world, setup.server);
  Client client(world, strategy, setup, out);
  if (protocol == Protocol::Dns) dns_trial(world, client, domain, setup, out);
  else tcp_trial(world, client, protocol, domain, setup, out);
  out.injections = count_injections(world, out.flow, log_from);
  out.trace_end = world.trace().size();
  return out;
}

EvasionReport evaluate(const Strategy& strategy, Protocol protocol, const std::string& domain, sim::World& world,
                       const TrialSetup& setup) {
  if (!strategy.inbound.empty()) throw InvalidTrial("inbound action trees are not supported");
  TrialOutcome baseline = run_trial(world, nullptr, protocol, domain, setup, setup.client_port);
  if (!baseline.censored) {
    throw InvalidTrial("baseline " + std::string(blocklist::protocol_name(protocol)) + " request for " + domain +
                       " was not censored");
  }
  world.run_until(world.now() + sim::secs(1));
  TrialOutcome trial =
      run_trial(world, &strategy, protocol, domain, setup, static_cast<std::uint16_t>(setup.client_port + 1));
  return {.strategy = strategy_text(strategy),
          .protocol = protocol,
          .domain = domain,
          .baseline_censored = baseline.censored,
          .with_strategy_delivered = trial.delivered,
          .injections_observed = trial.injections,
          .request_intact = trial.request_intact,
          .server_host = trial.server_host,
          .warnings = trial.warnings,
          .trace_begin = trial.trace_begin,
          .trace_end = trial.trace_end};
}

std::string report_json(const EvasionReport& r) {
  nlohmann::ordered_json j;
  j["strategy"] = r.strategy;
  j["protocol"] = blocklist::protocol_name(r.protocol);
  j["domain"] = r.domain;
  j["baseline_censored"] = r.baseline_censored;
  j["with_strategy_delivered"] = r.with_strategy_delivered;
  j["successful"] = r.successful();
  j["injections_observed"] = r.injections_observed;
  j["request_intact"] = r.request_intact;
  j["server_host"] = r.server_host ? nlohmann::ordered_json(*r.server_host) : nlohmann::ordered_json();
  j["warnings"] = r.warnings;
  return j.dump(2) + "\n";
}

}  // namespace tmlab::evasion
