#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cutsim/scenario.hpp"

using namespace cutsim;
using Catch::Approx;

namespace {

ScenarioConfig small_config() {
  ScenarioConfig cfg;
  cfg.sim_end = 600;
  cfg.reps = 2;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

std::filesystem::path fresh_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() /
           (std::string("cutsim_test_") + tag);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("chain adjacency and bfs routes agree on a line of four") {
  const auto adj = chain_adjacency(4);
  REQUIRE(adj.at(0) == std::vector<NodeId>{1});
  REQUIRE(adj.at(1) == std::vector<NodeId>{0, 2});
  REQUIRE(adj.at(2) == std::vector<NodeId>{1, 3});
  REQUIRE(adj.at(3) == std::vector<NodeId>{2});
  const auto routes = bfs_routes(adj, 0);
  REQUIRE(routes.at(1) == std::make_pair(NodeId{1}, std::uint32_t{1}));
  REQUIRE(routes.at(2) == std::make_pair(NodeId{1}, std::uint32_t{2}));
  REQUIRE(routes.at(3) == std::make_pair(NodeId{1}, std::uint32_t{3}));
}

TEST_CASE("both policies replay the identical channel realization") {
  auto cfg = small_config();
  const auto trad = run_scenario(cfg, PolicyMode::Traditional, 1);
  const auto pers = run_scenario(cfg, PolicyMode::ExtendedPersistent, 1);
  REQUIRE(trad.schedule_hash == pers.schedule_hash);
  REQUIRE(trad.seed_used == derive_run_seed(cfg.base_seed, 1));
  REQUIRE(trad.seed_used == pers.seed_used);
  const auto other = run_scenario(cfg, PolicyMode::Traditional, 2);
  REQUIRE(other.schedule_hash != trad.schedule_hash);
}

TEST_CASE("repeating a scenario reproduces every measured number") {
  auto cfg = small_config();
  const auto a = run_scenario(cfg, PolicyMode::Traditional, 0);
  const auto b = run_scenario(cfg, PolicyMode::Traditional, 0);
  REQUIRE(a.cycles.size() == b.cycles.size());
  for (std::size_t i = 0; i < a.cycles.size(); ++i) {
    REQUIRE(a.cycles[i].break_duration == b.cycles[i].break_duration);
    REQUIRE(a.cycles[i].lost_bits == b.cycles[i].lost_bits);
    REQUIRE(a.cycles[i].latency == b.cycles[i].latency);
    REQUIRE(a.cycles[i].delivered_payload_bytes ==
            b.cycles[i].delivered_payload_bytes);
  }
  REQUIRE(a.totals.emitted_bytes == b.totals.emitted_bytes);
  REQUIRE(a.totals.lost_bits == b.totals.lost_bits);
}

TEST_CASE("the persistent policy rides out cuts that cost the traditional one") {
  auto cfg = small_config();
  const auto c = run_many(
      cfg, {PolicyMode::Traditional, PolicyMode::ExtendedPersistent});
  std::uint64_t trad_lost = 0;
  for (const auto& run : c.runs) {
    if (run.policy == PolicyMode::ExtendedPersistent) {
      for (const auto& cyc : run.cycles) REQUIRE(cyc.lost_frames == 0);
    } else {
      for (const auto& cyc : run.cycles) trad_lost += cyc.lost_frames;
    }
    REQUIRE_FALSE(run.cycles.empty());
  }
  REQUIRE(trad_lost > 0);
  REQUIRE(c.comparison.has_value());
  REQUIRE_FALSE(c.aggregates_persistent.empty());
  REQUIRE_FALSE(c.aggregates_traditional.empty());
}

TEST_CASE("campaign runs land in canonical policy-then-rep order") {
  auto cfg = small_config();
  // Deliberately unsorted and duplicated input.
  const auto c = run_many(cfg, {PolicyMode::Traditional,
                                PolicyMode::ExtendedPersistent,
                                PolicyMode::Traditional});
  REQUIRE(c.runs.size() == 4);
  REQUIRE(c.runs[0].policy == PolicyMode::ExtendedPersistent);
  REQUIRE(c.runs[0].rep == 0);
  REQUIRE(c.runs[1].policy == PolicyMode::ExtendedPersistent);
  REQUIRE(c.runs[1].rep == 1);
  REQUIRE(c.runs[2].policy == PolicyMode::Traditional);
  REQUIRE(c.runs[2].rep == 0);
  REQUIRE(c.runs[3].policy == PolicyMode::Traditional);
  REQUIRE(c.runs[3].rep == 1);
  for (std::uint32_t r = 0; r < cfg.reps; ++r) {
    REQUIRE(c.runs[r].schedule_hash == c.runs[cfg.reps + r].schedule_hash);
  }
  REQUIRE_THROWS_AS(run_many(cfg, {}), ConfigError);
}

TEST_CASE("worker threads never change the output bytes") {
  auto cfg = small_config();
  cfg.sim_end = 400;
  const auto dir1 = fresh_dir("t1");
  const auto dir4 = fresh_dir("t4");
  run_campaign(cfg, {PolicyMode::Traditional, PolicyMode::ExtendedPersistent},
               dir1.string(), 1);
  run_campaign(cfg, {PolicyMode::Traditional, PolicyMode::ExtendedPersistent},
               dir4.string(), 4);
  for (const char* name : {"cycles.csv", "aggregates.csv", "comparison.csv"}) {
    REQUIRE(slurp(dir1 / name) == slurp(dir4 / name));
  }
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir4);
}

TEST_CASE("without cuts neither policy loses a bit") {
  auto cfg = small_config();
  cfg.sim_end = 300;
  cfg.racm.start = 5000;  // first cut beyond the horizon
  for (auto mode :
       {PolicyMode::Traditional, PolicyMode::ExtendedPersistent}) {
    const auto run = run_scenario(cfg, mode, 0);
    REQUIRE(run.cycles.empty());
    REQUIRE(run.totals.lost_bits == 0);
    REQUIRE(run.totals.delivered_payload_bytes > 0);
  }
}

TEST_CASE("a clean run delivers the complete constant-rate stream") {
  auto cfg = small_config();
  cfg.sim_end = 300;
  cfg.racm.start = 5000;
  cfg.shutdown_at = 290.0;  // submissions stop strictly before this point
  const auto run = run_scenario(cfg, PolicyMode::Traditional, 0);
  REQUIRE(run.totals.delivered_payload_bytes == 2900ull * 1500ull);
}

TEST_CASE("aggregates survive a csv round trip") {
  auto cfg = small_config();
  const auto c = run_many(
      cfg, {PolicyMode::Traditional, PolicyMode::ExtendedPersistent});
  std::ostringstream os;
  write_aggregate_csv_header(os);
  write_aggregate_csv_rows("persistent", c.aggregates_persistent, os);
  write_aggregate_csv_rows("traditional", c.aggregates_traditional, os);
  std::istringstream in(os.str());
  const auto parsed = read_aggregates_csv(in);
  REQUIRE(parsed.size() == 2);
  const auto& pers = parsed.at("persistent");
  REQUIRE(pers.size() == c.aggregates_persistent.size());
  for (std::size_t i = 0; i < pers.size(); ++i) {
    const auto& got = pers[i];
    const auto& want = c.aggregates_persistent[i];
    REQUIRE(got.bin == want.bin);
    REQUIRE(got.n == want.n);
    REQUIRE(got.mean_lost_bits == Approx(want.mean_lost_bits));
    REQUIRE(got.mean_latency.has_value() == want.mean_latency.has_value());
    if (want.mean_latency) {
      REQUIRE(*got.mean_latency == Approx(*want.mean_latency));
    }
  }
}

TEST_CASE("selecting aggregates falls back only when unambiguous") {
  std::map<std::string, std::vector<AggregateRow>> parsed;
  AggregateRow row;
  row.bin = "20-30";
  parsed["persistent"].push_back(row);
  REQUIRE(select_aggregates(parsed, "persistent", "f.csv").size() == 1);
  REQUIRE(select_aggregates(parsed, "traditional", "f.csv").size() == 1);
  parsed["traditional"].push_back(row);
  parsed["traditional"].push_back(row);
  REQUIRE(select_aggregates(parsed, "traditional", "f.csv").size() == 2);
  REQUIRE_THROWS_AS(select_aggregates(parsed, "other", "f.csv"), ConfigError);
}

TEST_CASE("malformed aggregate rows are rejected") {
  std::istringstream in("# comment\npolicy,bin,n\npersistent,20-30,1\n");
  REQUIRE_THROWS_AS(read_aggregates_csv(in), ConfigError);
}

TEST_CASE("an unusable output directory is refused before simulating") {
  REQUIRE_THROWS_AS(ensure_writable_dir("/dev/null/nested"), ConfigError);
}
