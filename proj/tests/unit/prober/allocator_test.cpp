#include "tmlab/prober/flow_allocator.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>

namespace tmlab::prober {
namespace {

const net::Ipv4Address kTarget(95, 85, 96, 36);

AllocatorConfig config(int sources, std::uint16_t ports) {
  AllocatorConfig c;
  for (int i = 0; i < sources; ++i) c.sources.push_back(net::Ipv4Address(203, 0, 113, static_cast<std::uint8_t>(i + 1)));
  c.port_min = 30000;
  c.port_max = static_cast<std::uint16_t>(30000 + ports - 1);
  c.seed = 17;
  return c;
}

TEST(FlowAllocator, ConsecutiveProbesUseDistinctPorts) {
  FlowAllocator a(config(1, 1000));
  auto f1 = a.allocate(kTarget, 80, SimTime{});
  auto f2 = a.allocate(kTarget, 80, SimTime{});
  ASSERT_TRUE(f1 && f2);
  EXPECT_NE(f1->src_port, f2->src_port);
}

TEST(FlowAllocator, NoReuseWithinQuarantineOverManyAllocations) {
  FlowAllocator a(config(2, 120));
  std::mt19937_64 rng(3);
  std::map<sim::FlowKey, SimTime> last_use;
  SimTime t{};
  std::size_t granted = 0, refused = 0, reused = 0;
  for (int i = 0; i < 100000; ++i) {
    t += sim::micros(static_cast<std::int64_t>(rng() % 400000));
    auto f = a.allocate(kTarget, 443, t);
    if (!f) {
      ++refused;
      continue;
    }
    ++granted;
    if (auto it = last_use.find(*f); it != last_use.end()) {
      ++reused;
      ASSERT_GE(t - it->second, sim::secs(35)) << f->to_string();
    }
    // The probe holds the tuple for up to 12 s.
    SimTime end = t + sim::millis(static_cast<std::int64_t>(rng() % 12000));
    a.touch(*f, end);
    last_use[*f] = end;
  }
  EXPECT_GT(granted, 50000U);
  EXPECT_GT(reused, 10000U);
  EXPECT_GT(refused, 0U);
}

TEST(FlowAllocator, ReuseAllowedOnceQuarantineExpires) {
  FlowAllocator a(config(1, 1));
  auto f = a.allocate(kTarget, 80, SimTime{});
  ASSERT_TRUE(f);
  EXPECT_FALSE(a.allocate(kTarget, 80, sim::secs_f(34.999)));
  auto g = a.allocate(kTarget, 80, sim::secs(35));
  ASSERT_TRUE(g);
  EXPECT_EQ(*f, *g);
  // A different target is a different tuple.
  EXPECT_TRUE(a.allocate(net::Ipv4Address(95, 85, 96, 37), 80, sim::secs(35)));
}

TEST(FlowAllocator, SourcesRotateAndRetire) {
  FlowAllocator a(config(3, 100));
  std::vector<net::Ipv4Address> seen;
  for (int i = 0; i < 6; ++i) seen.push_back(a.allocate(kTarget, 80, SimTime{})->src_ip);
  EXPECT_EQ(seen[0], seen[3]);
  EXPECT_NE(seen[0], seen[1]);
  EXPECT_NE(seen[1], seen[2]);
  a.retire_source(seen[1]);
  for (int i = 0; i < 6; ++i) EXPECT_NE(a.allocate(kTarget, 80, SimTime{})->src_ip, seen[1]);
  EXPECT_FALSE(a.allocate(kTarget, 80, SimTime{}, seen[1]));
  EXPECT_EQ(a.active_sources().size(), 2U);
  a.retire_source(seen[0]);
  a.retire_source(seen[2]);
  EXPECT_FALSE(a.allocate(kTarget, 80, SimTime{}));
}

TEST(FlowAllocator, SameSeedSameSequence) {
  FlowAllocator a(config(2, 5000)), b(config(2, 5000));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.allocate(kTarget, 80, sim::secs(i)), b.allocate(kTarget, 80, sim::secs(i)));
}

TEST(FlowAllocator, RejectsShortQuarantine) {
  auto c = config(1, 10);
  c.quarantine = sim::secs(30);
  EXPECT_THROW(FlowAllocator{c}, std::invalid_argument);
  c = config(0, 10);
  EXPECT_THROW(FlowAllocator{c}, std::invalid_argument);
}

}  // namespace
}  // namespace tmlab::prober
