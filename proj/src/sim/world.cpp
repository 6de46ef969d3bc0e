#include "tmlab/sim/world.hpp"

#include <stdexcept>

namespace tmlab::sim {

namespace {
constexpr std::size_t kNoPath = static_cast<std::size_t>(-1);
constexpr std::uint16_t kReservedIpId = 30000;
}  // namespace

World::World(CensorConfig censor, WorldOptions options)
    : base_config_(std::move(censor)), options_(options), rng_(options.seed) {
  validate(base_config_);
  ip_id_ = static_cast<std::uint16_t>(rng_());
}

void World::add_gateway(const std::string& name, CensorConfig config) {
  censors_[name] = std::make_unique<Censor>(std::move(config));
}

void World::add_path(PathConfig path) {
  if (path.censor_after_hop < 0 || path.censor_after_hop > static_cast<int>(path.hops.size())) {
    throw std::invalid_argument("censor_after_hop outside the path");
  }
  if (!censors_.contains(path.gateway)) censors_[path.gateway] = std::make_unique<Censor>(base_config_);
  paths_.push_back(std::move(path));
}

void World::add_host(net::Ipv4Address ip, std::unique_ptr<Endpoint> endpoint) { hosts_[ip] = std::move(endpoint); }

Endpoint* World::host(net::Ipv4Address ip) const {
  auto it = hosts_.find(ip);
  return it == hosts_.end() ? nullptr : it->second.get();
}

void World::attach_tap(net::Ipv4Address ip, Tap tap) { taps_[ip] = std::move(tap); }
void World::detach_tap(net::Ipv4Address ip) { taps_.erase(ip); }

std::uint16_t World::next_ip_id() {
  if (++ip_id_ == kReservedIpId) ++ip_id_;
  return ip_id_;
}

std::uint32_t World::random_u32() { return static_cast<std::uint32_t>(rng_() >> 32); }

Censor& World::censor(const std::string& gateway) {
  auto it = censors_.find(gateway);
  if (it == censors_.end()) it = censors_.emplace(gateway, std::make_unique<Censor>(base_config_)).first;
  return *it->second;
}

std::vector<std::string> World::gateways() const {
  std::vector<std::string> out;
  for (const auto& [name, c] : censors_) out.push_back(name);
  return out;
}

std::size_t World::path_index(net::Ipv4Address ip) const {
  std::size_t best = kNoPath;
  for (std::size_t i = 0; i < paths_.size(); ++i) {
    if (paths_[i].prefix.contains(ip) && (best == kNoPath || paths_[i].prefix.length() > paths_[best].prefix.length())) {
      best = i;
    }
  }
  return best;
}

const PathConfig* World::path_for(net::Ipv4Address ip) const {
  std::size_t i = path_index(ip);
  return i == kNoPath ? nullptr : &paths_[i];
}

void World::schedule(SimTime at, std::function<void()> fn) {
  if (at < now_) at = now_;
  queue_.push(Event{at, seq_++, std::move(fn)});
}

void World::schedule_send(SimTime at, net::PacketEnvelope env) {
  schedule(at, [this, env = std::move(env)] { send(env); });
}

void World::run_until(SimTime until) {
  while (!queue_.empty() && queue_.top().t <= until) {
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.t;
    ev.fn();
  }
  if (until > now_) now_ = until;
}

void World::run() {
  while (!queue_.empty()) {
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.t;
    ev.fn();
  }
}

void World::note(int hop, const char* direction, const net::PacketEnvelope& env, const char* action) {
  if (!options_.trace) return;
  trace_.push_back({now_, hop, direction, net::describe(env), action});
}

void World::send(const net::PacketEnvelope& env) {
  const std::size_t to = path_index(env.ip.dst);
  if (to != kNoPath) {
    note(0, "in", env, "send");
    depart(env, to, 0, +1);
    return;
  }
  const std::size_t from = path_index(env.ip.src);
  if (from != kNoPath) {
    int pos = static_cast<int>(paths_[from].hops.size()) + 1;
    note(pos, "out", env, "send");
    depart(env, from, pos, -1);
    return;
  }
  note(0, "direct", env, "send");
  schedule(now_ + options_.link_latency, [this, env] { deliver(env, 0, "direct"); });
}

// Puts `env` on the link leaving position `pos` in direction `dir`
// (+1 toward the inside host). The censor sees every packet crossing its
// link; what it injects heads back to `pos`.
void World::depart(net::PacketEnvelope env, std::size_t path, int pos, int dir) {
  const PathConfig& p = paths_[path];
  const int link = dir > 0 ? pos : pos - 1;
  if (link == p.censor_after_hop) {
    Censor& c = censor(p.gateway);
    for (auto& injected : c.on_packet(env, now_)) {
      note(pos, dir > 0 ? "out" : "in", injected, "inject");
      schedule(now_ + options_.link_latency,
               [this, injected = std::move(injected), path, pos, dir] { arrive(injected, path, pos, -dir); });
    }
  }
  schedule(now_ + options_.link_latency, [this, env = std::move(env), path, pos, dir] { arrive(env, path, pos + dir, dir); });
}

void World::arrive(net::PacketEnvelope env, std::size_t path, int pos, int dir) {
  const PathConfig& p = paths_[path];
  const int last = static_cast<int>(p.hops.size()) + 1;
  const char* direction = dir > 0 ? "in" : "out";
  if (pos == 0 || pos == last) {
    deliver(env, pos, direction);
    return;
  }
  if (env.ip.ttl <= 1) {
    env.ip.ttl = 0;
    note(pos, direction, env, "ttl-expired");
    net::Ipv4Address router = p.hops[static_cast<std::size_t>(pos - 1)];
    net::PacketEnvelope te = net::make_time_exceeded(router, env, next_ip_id());
    note(pos, dir > 0 ? "out" : "in", te, "send");
    depart(std::move(te), path, pos, -dir);
    return;
  }
  --env.ip.ttl;
  net::recompute_ip_checksum(env);
  note(pos, direction, env, "forward");
  depart(std::move(env), path, pos, dir);
}

void World::deliver(const net::PacketEnvelope& env, int pos, const char* direction) {
  if (auto tap = taps_.find(env.ip.dst); tap != taps_.end()) {
    note(pos, direction, env, "deliver");
    Tap handler = tap->second;
    handler(env);
    return;
  }
  if (auto it = hosts_.find(env.ip.dst); it != hosts_.end()) {
    note(pos, direction, env, "deliver");
    it->second->on_packet(*this, env.ip.dst, env);
    return;
  }
  note(pos, direction, env, "drop");
}

}  // namespace tmlab::sim
