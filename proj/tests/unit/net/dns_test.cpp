#include <gtest/gtest.h>

#include <random>

#include "tmlab/net/dns.hpp"

namespace tmlab::net {
namespace {

std::string random_name(std::mt19937& rng) {
  static constexpr char kAlpha[] = "abcdefghijklmnopqrstuvwxyz0123456789-";
  int labels = 1 + static_cast<int>(rng() % 4);
  std::string out;
  for (int l = 0; l < labels; ++l) {
    if (l) out.push_back('.');
    int len = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < len; ++i) out.push_back(kAlpha[rng() % (sizeof(kAlpha) - 1)]);
  }
  return out;
}

DnsMessage random_message(std::mt19937& rng) {
  DnsMessage m;
  m.id = static_cast<std::uint16_t>(rng());
  m.flags = DnsFlags::unpack(static_cast<std::uint16_t>(rng()));
  int nq = static_cast<int>(rng() % 3);
  int na = static_cast<int>(rng() % 3);
  for (int i = 0; i < nq; ++i) {
    m.questions.push_back({random_name(rng), static_cast<std::uint16_t>(1 + rng() % 30), kDnsClassIn});
  }
  for (int i = 0; i < na; ++i) {
    m.answers.push_back(make_a_record(random_name(rng), Ipv4Address(static_cast<std::uint32_t>(rng())),
                                      static_cast<std::uint32_t>(rng())));
  }
  // Declared counts drawn independently of the lists.
  m.counts = {static_cast<std::uint16_t>(rng() % 40), static_cast<std::uint16_t>(rng() % 40),
              static_cast<std::uint16_t>(rng() % 40), static_cast<std::uint16_t>(rng() % 40)};
  return m;
}

TEST(Dns, DefaultQuery) {
  auto q = build_dns_query("twitter.com", 7);
  EXPECT_EQ(q.id, 7);
  EXPECT_EQ(q.counts, (DnsCounts{1, 0, 0, 0}));
  ASSERT_EQ(q.questions.size(), 1u);
  EXPECT_EQ(q.questions[0].qname, "twitter.com");
  EXPECT_TRUE(q.answers.empty());
}

TEST(Dns, CountOverrideLeavesRecordsAlone) {
  auto q = build_dns_query("twitter.com", 7, DnsCounts{1, 32, 0, 0});
  EXPECT_EQ(q.counts.an, 32);
  EXPECT_TRUE(q.answers.empty());
  auto back = decode_dns(encode_dns(q));
  EXPECT_EQ(back, q);
}

TEST(Dns, RejectsLongLabels) {
  EXPECT_THROW(build_dns_query(std::string(64, 'a') + ".com", 1), std::invalid_argument);
  EXPECT_NO_THROW(build_dns_query(std::string(63, 'a') + ".com", 1));
  EXPECT_THROW(build_dns_query("a..b", 1), std::invalid_argument);
}

TEST(Dns, RoundTripWithMismatchedCounts) {
  std::mt19937 rng(99);
  for (int i = 0; i < 10000; ++i) {
    auto m = random_message(rng);
    auto back = decode_dns(encode_dns(m));
    ASSERT_EQ(back, m) << i;
  }
}

TEST(Dns, StrictQnamesReturnsAllQuestionsInOrder) {
  auto q = build_dns_query("one.example", 1, DnsCounts{2, 0, 0, 0});
  q.questions.push_back({"two.example", dns_type::A, kDnsClassIn});
  EXPECT_EQ(strict_dns_qnames(encode_dns(q)), (std::vector<std::string>{"one.example", "two.example"}));
}

TEST(Dns, StrictDecodeRejectsCountMismatch) {
  auto q = build_dns_query("one.example", 1, DnsCounts{1, 0, 0, 0});
  q.questions.push_back({"two.example", dns_type::A, kDnsClassIn});
  EXPECT_FALSE(strict_decode_dns(encode_dns(q)));
  EXPECT_TRUE(strict_dns_qnames(encode_dns(q)).empty());
}

TEST(Dns, DecodeFollowsCompressionPointers) {
  Bytes wire = encode_dns(build_dns_query("twitter.com", 5, DnsCounts{1, 1, 0, 0}));
  ByteWriter w(wire);
  w.u16(0xc00c);
  w.u16(dns_type::A);
  w.u16(kDnsClassIn);
  w.u32(300);
  w.u16(4);
  w.u32(Ipv4Address(127, 0, 0, 1).value());
  auto m = strict_decode_dns(wire);
  ASSERT_TRUE(m);
  ASSERT_EQ(m->answers.size(), 1u);
  EXPECT_EQ(m->answers[0].name, "twitter.com");
  EXPECT_EQ(a_record_address(m->answers[0]), Ipv4Address(127, 0, 0, 1));
}

TEST(Dns, PointerLoopIsMalformedNotACrash) {
  Bytes wire = encode_dns(build_dns_query("a.b", 1, DnsCounts{1, 0, 0, 0}));
  wire.resize(12);
  ByteWriter w(wire);
  w.u16(0xc00c);
  w.u16(1);
  w.u16(1);
  EXPECT_FALSE(strict_decode_dns(wire));
  EXPECT_THROW(decode_dns(wire), MalformedPacket);
}

TEST(Dns, RandomGarbageNeverCrashes) {
  std::mt19937 rng(5);
  for (int i = 0; i < 5000; ++i) {
    Bytes b(rng() % 64);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    (void)strict_decode_dns(b);
    try {
      (void)decode_dns(b);
    } catch (const MalformedPacket&) {
    }
  }
}

}  // namespace
}  // namespace tmlab::net
