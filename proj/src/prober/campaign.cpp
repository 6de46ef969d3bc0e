#include "tmlab/prober/campaign.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace tmlab::prober {
namespace {

struct Task {
  std::string domain;
  Protocol protocol;
  int attempt = 0;
};

}  // namespace

void validate(const CampaignPlan& plan) {
  if (plan.options.sleep < sim::secs(5) || plan.options.sleep > sim::secs(29)) {
    throw std::invalid_argument("sleep must lie within [5 s, 29 s]");
  }
  if (plan.targets.empty()) throw std::invalid_argument("campaign needs at least one target");
  if (plan.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (plan.pacing <= 0) throw std::invalid_argument("pacing must be positive");
}

CampaignResult run_campaign(Prober& prober, const CampaignPlan& plan,
                            const std::function<void(const ProbeRecord&)>& sink) {
  validate(plan);
  sim::World& world = prober.world();
  FlowAllocator& alloc = prober.allocator();
  CampaignResult out;
  auto emit = [&](const ProbeRecord& r) {
    out.records.push_back(r);
    if (sink) sink(r);
  };

  std::deque<Task> queue;
  for (const auto& sel : plan.domains) {
    for (Protocol p : sel.protocols) queue.push_back({sel.domain, p});
  }
  const Protocol control_protocol =
      plan.domains.empty() || plan.domains.front().protocols.empty() ? Protocol::Http : plan.domains.front().protocols.front();
  const auto gap = sim::SimDuration(static_cast<std::int64_t>(std::llround(1e6 / plan.pacing)));
  const auto sources = alloc.active_sources();
  std::size_t next_source = 0;
  std::size_t next_target = 0;

  while (!queue.empty()) {
    auto active = alloc.active_sources();
    if (active.empty()) {
      out.summary.halted = true;
      break;
    }
    net::Ipv4Address source = plan.naive ? sources.front() : active[next_source++ % active.size()];
    if (!alloc.source_active(source)) {
      out.summary.halted = true;
      break;
    }

    struct Slot {
      Task task;
      std::optional<ProbeRecord> record;
    };
    std::vector<Slot> batch;
    while (!queue.empty() && batch.size() < plan.batch_size) {
      batch.push_back({queue.front(), std::nullopt});
      queue.pop_front();
    }
    std::optional<ProbeRecord> control;
    std::size_t outstanding = 0;
    SimTime at = world.now();

    auto issue = [&](ProbeRequest req, std::function<void(const ProbeRecord&)> done, std::function<void()> on_fail) {
      req.options.source = source;
      ++outstanding;
      world.schedule(at, [&, req, done, on_fail] {
        if (!prober.start(req, [&, done](const ProbeRecord& r) {
              --outstanding;
              done(r);
            })) {
          --outstanding;
          on_fail();
        }
      });
      at += gap;
    };

    for (std::size_t i = 0; i < batch.size(); ++i) {
      const Task& t = batch[i].task;
      ProbeRequest req{.protocol = t.protocol, .domain = t.domain, .target = plan.targets[next_target++ % plan.targets.size()],
                       .options = plan.options};
      ++out.summary.probes_sent;
      issue(req, [&, i](const ProbeRecord& r) { batch[i].record = r; }, [&, i] { queue.push_back(batch[i].task); });
    }
    if (!plan.naive) {
      ProbeRequest req{.protocol = control_protocol, .domain = plan.controls.known_blocked,
                       .target = plan.targets[next_target++ % plan.targets.size()], .options = plan.options,
                       .is_control = true};
      ++out.summary.controls_sent;
      issue(req, [&](const ProbeRecord& r) { control = r; }, [] {});
    }
    while (outstanding > 0) world.run_until(world.now() + sim::secs(1));

    const bool banned = !plan.naive && (!control || control->verdict != Verdict::Censored);
    if (control) emit(*control);
    if (banned) {
      alloc.retire_source(source);
      out.summary.banned_sources.push_back(source);
    }
    for (auto& slot : batch) {
      if (!slot.record) continue;  // never started; already requeued
      ProbeRecord r = *slot.record;
      Task t = slot.task;
      if (banned && r.verdict != Verdict::Censored) {
        r.verdict = Verdict::SourceBanSuspected;
        emit(r);
        queue.push_back(t);
        ++out.summary.requeued;
        continue;
      }
      emit(r);
      if (r.verdict == Verdict::Inconclusive && t.attempt < plan.retries) {
        ++t.attempt;
        queue.push_back(t);
        ++out.summary.requeued;
        continue;
      }
      out.final.push_back(r);
      switch (r.verdict) {
        case Verdict::Censored:
          ++out.summary.censored[r.protocol];
          break;
        case Verdict::NotCensored:
          ++out.summary.not_censored[r.protocol];
          break;
        default:
          ++out.summary.inconclusive[r.protocol];
          break;
      }
    }
  }
  return out;
}

}  // namespace tmlab::prober
