#include "tmlab/cli/commands.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tmlab/blocklist/corpus.hpp"
#include "tmlab/cli/loaders.hpp"

namespace tmlab::cli {
namespace {

namespace fs = std::filesystem;
const std::string kFixtures = TMLAB_FIXTURES;

struct Result {
  int status;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "tmlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int status = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Dispatch : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tmlab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string at(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

TEST_F(Dispatch, SimulateIsReproducibleForOneSeed) {
  auto args = [&](const std::string& out, const std::string& seed) {
    return std::vector<std::string>{"simulate", "--scenario", kFixtures + "/lab_scenario.json", "--seed", seed,
                                    "--out", at(out)};
  };
  ASSERT_EQ(run(args("a", "7")).status, kExitOk);
  ASSERT_EQ(run(args("b", "7")).status, kExitOk);
  ASSERT_EQ(run(args("c", "8")).status, kExitOk);
  for (const char* f : {"trace.jsonl", "records.jsonl"}) {
    EXPECT_FALSE(slurp(dir_ / "a" / f).empty());
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  // Source ports follow the seed.
  EXPECT_NE(slurp(dir_ / "a" / "records.jsonl"), slurp(dir_ / "c" / "records.jsonl"));
}

TEST_F(Dispatch, ManifestDescribesTheRun) {
  ASSERT_EQ(run({"simulate", "--scenario", kFixtures + "/lab_scenario.json", "--seed", "7", "--out", at("m")}).status,
            kExitOk);
  auto m = nlohmann::json::parse(slurp(dir_ / "m" / "manifest.json"));
  EXPECT_EQ(m["subcommand"], "simulate");
  EXPECT_EQ(m["seed"], 7);
  EXPECT_EQ(m["version"], std::string(kVersion));
  EXPECT_EQ(m["config"]["scenario"], kFixtures + "/lab_scenario.json");
  EXPECT_EQ(m["virtual_start_us"], 0);
  EXPECT_EQ(m["virtual_end_us"], 12000000);  // 9 s sleep plus 3 s listening
  EXPECT_EQ(m["outputs"], nlohmann::json::array({"trace.jsonl", "records.jsonl"}));
  EXPECT_TRUE(m.contains("wall_clock_utc"));
  // The argv recorded in the manifest reproduces the run.
  std::vector<std::string> again = m["argv"].get<std::vector<std::string>>();
  again.back() = at("m2");
  ASSERT_EQ(run(again).status, kExitOk);
  EXPECT_EQ(slurp(dir_ / "m" / "trace.jsonl"), slurp(dir_ / "m2" / "trace.jsonl"));
}

TEST_F(Dispatch, SimulatedTrafficGetsExpectedVerdicts) {
  Result r = run({"simulate", "--scenario", kFixtures + "/lab_scenario.json", "--out", at("v")});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  std::ifstream in(dir_ / "v" / "records.jsonl");
  std::map<std::string, std::string> verdict;
  for (std::string line; std::getline(in, line);) {
    auto j = nlohmann::json::parse(line);
    verdict[j["protocol"].get<std::string>() + " " + j["domain"].get<std::string>()] = j["verdict"];
  }
  EXPECT_EQ(verdict["http twitter.com"], "censored");
  EXPECT_EQ(verdict["dns twitter.com"], "censored");
  EXPECT_EQ(verdict["https example.com"], "not_censored");
}

TEST_F(Dispatch, UsageErrorsExitTwo) {
  EXPECT_EQ(run({}).status, kExitUsage);
  EXPECT_EQ(run({"bogus"}).status, kExitUsage);
  EXPECT_EQ(run({"impact", "--rules", "r", "--corpus", "c", "--unknown"}).status, kExitUsage);
  EXPECT_EQ(run({"impact", "--rules", "r"}).status, kExitUsage);
  EXPECT_EQ(run({"evade", "--strategy", "x", "--builtin", "y"}).status, kExitUsage);
  EXPECT_EQ(run({"evade", "--protocol", "http", "--domain", "twitter.com", "--scenario",
                 kFixtures + "/lab_scenario.json"})
                .status,
            kExitUsage);
  EXPECT_EQ(run({"infer", "--domain", "a.b", "--protocol", "gopher", "--scenario", "s", "--target", "1.2.3.4"}).status,
            kExitUsage);
}

TEST_F(Dispatch, HelpAndVersionExitZero) {
  Result h = run({"--help"});
  EXPECT_EQ(h.status, kExitOk);
  EXPECT_NE(h.out.find("simulate"), std::string::npos);
  Result v = run({"--version"});
  EXPECT_EQ(v.status, kExitOk);
  EXPECT_NE(v.out.find(std::string(kVersion)), std::string::npos);
}

TEST_F(Dispatch, UnreadableInputExitsOneWithDiagnostic) {
  Result r = run({"impact", "--rules", "/nonexistent/rules.txt", "--corpus", kFixtures + "/corpus.txt"});
  EXPECT_EQ(r.status, kExitOperational);
  EXPECT_NE(r.err.find("/nonexistent/rules.txt"), std::string::npos);
}

TEST_F(Dispatch, MostlyMalformedRulesFileExitsOne) {
  std::ofstream(at("bad.txt")) << ".*a.*\n(x|y)\n[abc]\n";
  Result r = run({"impact", "--rules", at("bad.txt"), "--corpus", kFixtures + "/corpus.txt"});
  EXPECT_EQ(r.status, kExitOperational);
  EXPECT_NE(r.err.find("malformed"), std::string::npos);
}

TEST_F(Dispatch, ProbeWithoutScanOutputNamesTheMissingTargetPool) {
  Result r = run({"probe", "--plan", kFixtures + "/plan_no_targets.json", "--scenario", kFixtures + "/lab_scenario.json"});
  EXPECT_EQ(r.status, kExitOperational);
  EXPECT_NE(r.err.find("scan-out/targets.txt"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("target pool"), std::string::npos) << r.err;
}

TEST_F(Dispatch, ImpactReportIsSortedAndMatchesTheOracle) {
  Result r = run({"impact", "--rules", kFixtures + "/top_rules.txt", "--corpus", kFixtures + "/corpus.txt"});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  auto rules = load_rules(fs::path(kFixtures + "/top_rules.txt")).items;
  auto oracle = blocklist::match_corpus_file(rules, kFixtures + "/corpus.txt");
  std::map<std::string, std::size_t> expected;
  for (const auto& p : oracle.per_rule) expected[blocklist::rule_text(p.rule)] = p.count();

  std::istringstream lines(r.out);
  std::size_t previous = SIZE_MAX, n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    auto j = nlohmann::json::parse(line);
    std::size_t count = j["count"];
    EXPECT_LE(count, previous);
    previous = count;
    EXPECT_EQ(count, expected.at(j["rule"].get<std::string>())) << j["rule"];
  }
  EXPECT_EQ(n, 10U);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')).find("\"rule\":\".*vpn.*\",\"count\":3"), 1U);
}

TEST_F(Dispatch, ScanThenProbeRecoversTheBlocklist) {
  ASSERT_EQ(run({"scan", "--pfx2as", kFixtures + "/pfx2as_small.txt", "--scenario", kFixtures + "/prefix_scenario.json",
                 "--out", at("scan")})
                .status,
            kExitOk);
  std::ifstream fr(dir_ / "scan" / "prefixes.jsonl");
  std::map<std::string, double> fraction;
  for (std::string line; std::getline(fr, line);) {
    auto j = nlohmann::json::parse(line);
    fraction[j["prefix"]] = j["fraction"];
  }
  EXPECT_NEAR(fraction["95.85.96.0/24"], 0.6555, 0.02);
  EXPECT_NEAR(fraction["185.69.187.0/24"], 0.9783, 0.02);
  EXPECT_EQ(fraction["95.85.99.0/24"], 0.0);

  std::ofstream(at("plan.json")) << R"({"protocols": ["dns", "http", "https"], "sleep_s": 9})";
  Result r = run({"probe", "--plan", at("plan.json"), "--scenario", kFixtures + "/lab_scenario.json", "--domains",
                  kFixtures + "/domains.txt", "--targets", at("scan/targets.txt"), "--out", at("probe")});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  auto summary = nlohmann::json::parse(slurp(dir_ / "probe" / "summary.json"));
  // twitter.com, mobile.twitter.com everywhere; starlink.cyou over DNS; nordvpn.com over HTTP.
  EXPECT_EQ(summary["censored"]["dns"], 3);
  EXPECT_EQ(summary["censored"]["http"], 3);
  EXPECT_EQ(summary["censored"]["https"], 2);
  EXPECT_EQ(summary["halted"], false);
}

TEST_F(Dispatch, ProbeRejectsSleepOutsideTheTriggerWindow) {
  std::ofstream(at("plan.json")) << R"({"targets": ["95.85.96.36"], "sleep_s": 30})";
  Result r = run({"probe", "--plan", at("plan.json"), "--scenario", kFixtures + "/lab_scenario.json", "--domains",
                  kFixtures + "/domains.txt"});
  EXPECT_EQ(r.status, kExitOperational);
  EXPECT_NE(r.err.find("sleep"), std::string::npos);
}

TEST_F(Dispatch, InferWritesRuleAndTranscript) {
  Result r = run({"infer", "--domain", "account.trendmicro.com", "--protocol", "https", "--scenario",
                  kFixtures + "/lab_scenario.json", "--target", "95.85.96.36", "--out", at("inf")});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  EXPECT_EQ(slurp(dir_ / "inf" / "rule.txt"), ".*\\.trendmicro\\.com.*\n");
  auto t = nlohmann::json::parse(slurp(dir_ / "inf" / "transcript.json"));
  EXPECT_EQ(t["rule"], ".*\\.trendmicro\\.com.*");
  EXPECT_LE(t["probes_used"].get<std::size_t>(), 4 * std::string("account.trendmicro.com").size() + 8);

  Result doh = run({"infer", "--domain", "doh.gov.ae", "--protocol", "dns", "--scenario",
                    kFixtures + "/lab_scenario.json", "--target", "95.85.96.36"});
  ASSERT_EQ(doh.status, kExitOk) << doh.err;
  EXPECT_EQ(nlohmann::json::parse(doh.out)["rule"], "^doh\\..*");
}

TEST_F(Dispatch, InferOnUncensoredSeedExitsOneButKeepsTranscript) {
  Result r = run({"infer", "--domain", "example.com", "--protocol", "http", "--scenario",
                  kFixtures + "/lab_scenario.json", "--target", "95.85.96.36"});
  EXPECT_EQ(r.status, kExitOperational);
  EXPECT_NE(r.err.find("seed"), std::string::npos) << r.err;
  EXPECT_EQ(nlohmann::json::parse(r.out)["probes_used"], 1);
}

TEST_F(Dispatch, EvadeReportsSuccessAndWritesTheTrace) {
  Result r = run({"evade", "--builtin", "segmentation-tls-sni", "--protocol", "https", "--domain", "twitter.com",
                  "--scenario", kFixtures + "/lab_scenario.json", "--trace", "--out", at("ev")});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  auto report = nlohmann::json::parse(slurp(dir_ / "ev" / "report.json"));
  EXPECT_EQ(report["successful"], true);
  EXPECT_FALSE(slurp(dir_ / "ev" / "trace.jsonl").empty());

  Result text = run({"evade", "--strategy", "[TCP:flags:PA]-fragment{tcp:2:True}-| \\/", "--protocol", "https",
                     "--domain", "twitter.com", "--scenario", kFixtures + "/lab_scenario.json"});
  ASSERT_EQ(text.status, kExitOk) << text.err;
  EXPECT_EQ(nlohmann::json::parse(text.out)["successful"], false);

  Result bad = run({"evade", "--strategy", "[TCP:flags:PA]-bogus-|", "--protocol", "http", "--domain", "twitter.com",
                    "--scenario", kFixtures + "/lab_scenario.json"});
  EXPECT_EQ(bad.status, kExitOperational);
  EXPECT_NE(bad.err.find("offset"), std::string::npos);

  Result unknown = run({"evade", "--builtin", "nope", "--protocol", "http", "--domain", "twitter.com", "--scenario",
                        kFixtures + "/lab_scenario.json"});
  EXPECT_EQ(unknown.status, kExitOperational);
}

TEST_F(Dispatch, EvadeOnUncensoredDomainIsAnInvalidTrial) {
  Result r = run({"evade", "--builtin", "segmentation-http", "--protocol", "http", "--domain", "example.com",
                  "--scenario", kFixtures + "/lab_scenario.json"});
  EXPECT_EQ(r.status, kExitOperational);
}

TEST_F(Dispatch, LocalizeFindsTheCensorHop) {
  Result r = run({"localize", "--scenario", kFixtures + "/lab_scenario.json", "--target", "95.85.96.36"});
  ASSERT_EQ(r.status, kExitOk) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["censor_hop"], 4);
  EXPECT_EQ(j["path"][2], "10.1.0.3");
  EXPECT_EQ(j["evidence"]["observed_ttl"], 128 - 3);
  EXPECT_EQ(j["consistent"], true);
}

}  // namespace
}  // namespace tmlab::cli
