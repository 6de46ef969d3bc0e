#include "tmlab/prober/scan.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace tmlab::prober {
namespace {

enum class Role { KnownBlocked, Innocuous, OptOut };

struct Task {
  std::size_t ip_index;
  Protocol protocol;
  Role role;
  int attempt = 0;
};

struct Tally {
  std::map<Protocol, Verdict> known;
  std::map<Protocol, bool> responsive;
};

}  // namespace

std::string_view ip_status_name(IpStatus s) {
  switch (s) {
    case IpStatus::Filtered:
      return "filtered";
    case IpStatus::NotFiltered:
      return "not_filtered";
    case IpStatus::ResponsiveExcluded:
      return "responsive_excluded";
    case IpStatus::Inconclusive:
      break;
  }
  return "inconclusive";
}

bool IpClassification::filtered_any() const {
  return std::any_of(status.begin(), status.end(), [](const auto& kv) { return kv.second == IpStatus::Filtered; });
}

bool IpClassification::excluded() const {
  return std::any_of(status.begin(), status.end(),
                     [](const auto& kv) { return kv.second == IpStatus::ResponsiveExcluded; });
}

ScanResult scan_prefixes(Prober& prober, const std::vector<net::Ipv4Prefix>& prefixes, const ScanPlan& plan) {
  sim::World& world = prober.world();
  ScanResult out;
  std::vector<net::Ipv4Address> ips;
  for (const auto& p : prefixes) {
    for (std::uint64_t i = 0; i < p.size(); ++i) ips.push_back(p.at(i));
  }
  std::sort(ips.begin(), ips.end());
  ips.erase(std::unique(ips.begin(), ips.end()), ips.end());

  std::vector<Tally> tally(ips.size());
  std::vector<int> trials(ips.size(), 0);
  std::deque<Task> queue;
  for (std::size_t i = 0; i < ips.size(); ++i) {
    for (Protocol proto : plan.protocols) {
      for (Role role : {Role::KnownBlocked, Role::Innocuous, Role::OptOut}) queue.push_back({i, proto, role});
    }
  }

  const auto gap = sim::SimDuration(static_cast<std::int64_t>(std::llround(1e6 / std::max(plan.pacing, 1e-3))));
  std::size_t outstanding = 0;
  bool pumping = false;

  std::function<void()> pump;
  std::function<void(const Task&)> launch = [&](const Task& task) {
    const std::string& domain = task.role == Role::KnownBlocked ? plan.known_blocked
                                : task.role == Role::Innocuous  ? plan.innocuous
                                                                : plan.optout;
    ProbeRequest req{.protocol = task.protocol, .domain = domain, .target = ips[task.ip_index], .options = plan.options};
    ++trials[task.ip_index];
    ++outstanding;
    bool started = prober.start(req, [&, task](const ProbeRecord& r) {
      --outstanding;
      out.records.push_back(r);
      Tally& t = tally[task.ip_index];
      if (r.responsive) t.responsive[task.protocol] = true;
      if (task.role != Role::KnownBlocked) return;
      t.known[task.protocol] = r.verdict;
      if (r.verdict == Verdict::Inconclusive && !r.responsive && task.attempt < plan.retries) {
        Task again = task;
        ++again.attempt;
        queue.push_front(again);
      }
    });
    if (!started) {
      --outstanding;
      --trials[task.ip_index];
      queue.push_back(task);
    }
  };
  pump = [&] {
    if (queue.empty()) {
      pumping = false;
      return;
    }
    Task task = queue.front();
    queue.pop_front();
    launch(task);
    world.schedule(world.now() + gap, pump);
  };

  while (!queue.empty() || outstanding > 0) {
    if (!queue.empty() && !pumping) {
      pumping = true;
      world.schedule(world.now(), pump);
    }
    world.run_until(world.now() + sim::secs(1));
  }

  std::map<net::Ipv4Address, std::size_t> index;
  for (std::size_t i = 0; i < ips.size(); ++i) {
    IpClassification c{.ip = ips[i], .trials = trials[i]};
    for (Protocol proto : plan.protocols) {
      const Tally& t = tally[i];
      IpStatus s = IpStatus::Inconclusive;
      if (t.responsive.contains(proto)) {
        s = IpStatus::ResponsiveExcluded;
      } else if (auto k = t.known.find(proto); k != t.known.end()) {
        s = k->second == Verdict::Censored      ? IpStatus::Filtered
            : k->second == Verdict::NotCensored ? IpStatus::NotFiltered
                                                : IpStatus::Inconclusive;
      }
      c.status[proto] = s;
    }
    index[ips[i]] = out.ips.size();
    out.ips.push_back(std::move(c));
  }
  for (const auto& p : prefixes) {
    PrefixFraction f{.prefix = p};
    for (std::uint64_t i = 0; i < p.size(); ++i) {
      const auto& c = out.ips[index.at(p.at(i))];
      if (c.excluded()) {
        ++f.excluded;
        continue;
      }
      ++f.probed;
      if (c.filtered_any()) ++f.filtered;
    }
    out.prefixes.push_back(f);
  }
  return out;
}

}  // namespace tmlab::prober
