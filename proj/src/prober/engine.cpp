#include "tmlab/prober/engine.hpp"

#include <stdexcept>

#include "tmlab/net/dns.hpp"
#include "tmlab/net/http.hpp"
#include "tmlab/net/tls.hpp"

namespace tmlab::prober {
namespace {

using net::TcpFlags;

const net::Ipv4Address kSinkhole(127, 0, 0, 1);

bool is_sinkhole_answer(net::ByteView payload, const std::string& domain) {
  auto msg = net::strict_decode_dns(payload);
  if (!msg || !msg->flags.qr || msg->answers.size() != 1) return false;
  const auto& rr = msg->answers.front();
  return net::iequals(rr.name, domain) && net::a_record_address(rr) == kSinkhole;
}

}  // namespace

std::uint16_t default_port(Protocol p) {
  switch (p) {
    case Protocol::Dns:
      return 53;
    case Protocol::Http:
      return 80;
    case Protocol::Https:
      break;
  }
  return 443;
}

net::Bytes probe_payload(Protocol p, const std::string& domain, std::uint16_t dns_id) {
  switch (p) {
    case Protocol::Dns:
      return net::encode_dns(net::build_dns_query(domain, dns_id));
    case Protocol::Http:
      return net::build_http_get(domain).raw();
    case Protocol::Https:
      break;
  }
  return net::build_client_hello(domain).raw();
}

Prober::Prober(sim::World& world, FlowAllocator& allocator) : world_(world), allocator_(allocator) {
  for (auto ip : allocator_.config().sources) {
    world_.attach_tap(ip, [this](const net::PacketEnvelope& env) { on_receive(env); });
  }
}

Prober::~Prober() {
  for (auto ip : allocator_.config().sources) world_.detach_tap(ip);
}

bool Prober::start(const ProbeRequest& req, Callback done) {
  const std::uint16_t port = req.port ? req.port : default_port(req.protocol);
  const SimTime now = world_.now();
  std::optional<sim::FlowKey> flow = req.options.forced_flow;
  if (flow) {
    allocator_.touch(*flow, now);
  } else {
    flow = allocator_.allocate(req.target, port, now, req.options.source);
  }
  if (!flow || by_flow_.contains(*flow)) return false;

  const std::uint64_t id = next_id_++;
  Active a;
  a.request = req;
  a.flow = *flow;
  a.done = std::move(done);
  a.record = {.probe_id = id,
              .protocol = req.protocol,
              .domain = req.domain,
              .target_ip = req.target,
              .target_port = port,
              .src_ip = flow->src_ip,
              .src_port = flow->src_port,
              .t_sent = now,
              .is_control = req.is_control};

  net::Bytes payload = probe_payload(req.protocol, req.domain, static_cast<std::uint16_t>(id));
  if (req.protocol == Protocol::Dns) {
    a.first = net::make_udp_packet({.src = flow->src_ip,
                                    .src_port = flow->src_port,
                                    .dst = req.target,
                                    .dst_port = port,
                                    .payload = std::move(payload),
                                    .ip_id = world_.next_ip_id(),
                                    .ttl = req.options.ttl});
  } else {
    a.first = net::make_tcp_packet({.src = flow->src_ip,
                                    .src_port = flow->src_port,
                                    .dst = req.target,
                                    .dst_port = port,
                                    .flags = TcpFlags::PSH | TcpFlags::ACK,
                                    .seq = world_.random_u32(),
                                    .ack = world_.random_u32(),
                                    .payload = std::move(payload),
                                    .ip_id = world_.next_ip_id(),
                                    .ttl = req.options.ttl});
  }
  world_.send(a.first);
  by_flow_[*flow] = id;
  const bool tcp = req.protocol != Protocol::Dns;
  const auto sleep = req.options.sleep;
  const auto timeout = req.options.timeout;
  active_.emplace(id, std::move(a));
  if (tcp) {
    world_.schedule(now + sleep, [this, id] { send_second(id); });
    world_.schedule(now + sleep + timeout, [this, id] { finish(id); });
  } else {
    world_.schedule(now + timeout, [this, id] { finish(id); });
  }
  return true;
}

ProbeRecord Prober::run(const ProbeRequest& req) {
  std::optional<ProbeRecord> out;
  if (!start(req, [&out](const ProbeRecord& r) { out = r; })) {
    throw std::runtime_error("no free flow for probe");
  }
  while (!out) {
    if (world_.idle()) throw std::logic_error("probe never finished");
    world_.run_until(world_.now() + sim::millis(100));
  }
  return *out;
}

void Prober::send_second(std::uint64_t id) {
  auto it = active_.find(id);
  if (it == active_.end()) return;
  Active& a = it->second;
  net::PacketEnvelope second = a.first;
  if (a.request.options.second_flags) {
    auto& tcp = second.tcp();
    tcp.flags = *a.request.options.second_flags;
    if (tcp.flags.has(TcpFlags::SYN)) tcp.payload.clear();
  }
  second.ip.identification = world_.next_ip_id();
  net::finalize(second);
  a.second_sent = true;
  a.record.t_second = world_.now();
  allocator_.touch(a.flow, world_.now());
  world_.send(second);
}

void Prober::on_receive(const net::PacketEnvelope& env) {
  sim::FlowKey key;
  if (env.is_icmp()) {
    auto q = net::quoted_header(env.icmp());
    if (!q) return;
    key = {q->src, q->src_port, q->dst, q->dst_port};
  } else {
    key = {env.ip.dst, env.dst_port(), env.ip.src, env.src_port()};
  }
  auto f = by_flow_.find(key);
  if (f == by_flow_.end()) return;
  Active& a = active_.at(f->second);

  if (env.is_icmp()) {
    auto& hops = a.record.time_exceeded_from;
    if (std::find(hops.begin(), hops.end(), env.ip.src) == hops.end()) hops.push_back(env.ip.src);
    return;
  }
  const bool signed_packet = env.ip.identification == kInjectionIpId;
  if (!signed_packet) {
    a.genuine = true;
    return;
  }
  Evidence ev{env.ip.identification, env.ip.ttl, {}};
  if (env.is_udp()) {
    if (a.request.protocol != Protocol::Dns || !is_sinkhole_answer(env.udp().payload, a.request.domain)) {
      a.malformed_signature = true;
      return;
    }
    ev.kind = "DNS-A";
    if (!a.late_signature) a.late_signature = ev;
    return;
  }
  const auto flags = env.tcp().flags;
  if (!flags.has(TcpFlags::RST)) {
    a.malformed_signature = true;
    return;
  }
  ev.kind = flags.has(TcpFlags::ACK) ? "RST+ACK" : "RST";
  auto& slot = a.second_sent ? a.late_signature : a.early_signature;
  if (!slot) slot = ev;
}

void Prober::finish(std::uint64_t id) {
  auto it = active_.find(id);
  if (it == active_.end()) return;
  Active a = std::move(it->second);
  active_.erase(it);
  by_flow_.erase(a.flow);
  allocator_.touch(a.flow, world_.now());

  ProbeRecord& r = a.record;
  r.t_verdict = world_.now();
  r.responsive = a.genuine;
  if (a.late_signature) {
    r.verdict = Verdict::Censored;
    r.evidence = a.late_signature;
  } else if (a.early_signature || a.malformed_signature) {
    r.verdict = Verdict::Inconclusive;
    r.evidence = a.early_signature;
  } else if (a.genuine && r.protocol != Protocol::Dns) {
    // An endpoint reset tears the censor's state down, so silence from the
    // censor says nothing.
    r.verdict = Verdict::Inconclusive;
  } else {
    r.verdict = Verdict::NotCensored;
  }
  if (a.done) a.done(r);
}

}  // namespace tmlab::prober
