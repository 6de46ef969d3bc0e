#include "tmlab/prober/flow_allocator.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace tmlab::prober {

FlowAllocator::FlowAllocator(AllocatorConfig config) : config_(std::move(config)) {
  if (config_.sources.empty()) throw std::invalid_argument("flow allocator needs at least one source");
  if (config_.port_min > config_.port_max) throw std::invalid_argument("empty source port range");
  if (config_.quarantine < sim::secs(35)) throw std::invalid_argument("flow quarantine must be at least 35 s");
  std::mt19937_64 rng(config_.seed);
  const std::uint32_t range = std::uint32_t{config_.port_max} - config_.port_min + 1;
  for (std::size_t i = 0; i < config_.sources.size(); ++i) cursor_.push_back(static_cast<std::uint32_t>(rng() % range));
}

std::vector<net::Ipv4Address> FlowAllocator::active_sources() const {
  std::vector<net::Ipv4Address> out;
  for (auto ip : config_.sources) {
    if (source_active(ip)) out.push_back(ip);
  }
  return out;
}

void FlowAllocator::retire_source(net::Ipv4Address ip) { retired_.insert(ip); }

void FlowAllocator::prune(SimTime now) {
  while (!expiry_.empty() && now - expiry_.front().first >= config_.quarantine) {
    auto [t, flow] = expiry_.front();
    expiry_.pop_front();
    auto it = last_use_.find(flow);
    if (it != last_use_.end() && it->second == t) last_use_.erase(it);
  }
}

void FlowAllocator::touch(const sim::FlowKey& flow, SimTime t) {
  auto& last = last_use_[flow];
  if (t > last) last = t;
  expiry_.emplace_back(last, flow);
}

std::optional<sim::FlowKey> FlowAllocator::allocate(net::Ipv4Address target, std::uint16_t target_port, SimTime now,
                                                    std::optional<net::Ipv4Address> source) {
  prune(now);
  std::size_t index = 0;
  if (source) {
    if (!source_active(*source)) return std::nullopt;
    auto it = std::find(config_.sources.begin(), config_.sources.end(), *source);
    if (it == config_.sources.end()) return std::nullopt;
    index = static_cast<std::size_t>(it - config_.sources.begin());
  } else {
    bool found = false;
    for (std::size_t k = 0; k < config_.sources.size(); ++k) {
      index = (next_source_ + k) % config_.sources.size();
      if (source_active(config_.sources[index])) {
        found = true;
        break;
      }
    }
    if (!found) return std::nullopt;
    next_source_ = index + 1;
  }

  const std::uint32_t range = std::uint32_t{config_.port_max} - config_.port_min + 1;
  for (std::size_t attempt = 0; attempt < config_.max_attempts; ++attempt) {
    auto port = static_cast<std::uint16_t>(config_.port_min + cursor_[index]++ % range);
    sim::FlowKey flow{config_.sources[index], port, target, target_port};
    auto it = last_use_.find(flow);
    if (it != last_use_.end() && now - it->second < config_.quarantine) continue;
    touch(flow, now);
    return flow;
  }
  return std::nullopt;
}

}  // namespace tmlab::prober
