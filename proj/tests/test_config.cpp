#include <catch2/catch_amalgamated.hpp>

#include <string>

#include "cutsim/config.hpp"

using namespace cutsim;
using Catch::Approx;

TEST_CASE("an empty config yields the reference scenario") {
  const auto cfg = parse_config("");
  REQUIRE(cfg.node_count == 2);
  REQUIRE(cfg.sim_end == 2000.0);
  REQUIRE(cfg.cbr_interval == 0.1);
  REQUIRE(cfg.segment_bytes == 1500);
  REQUIRE(cfg.racm.start == 200.0);
  REQUIRE(cfg.racm.d_min == 20.0);
  REQUIRE(cfg.racm.d_max == 100.0);
  REQUIRE(cfg.reps == 20);
  REQUIRE(cfg.base_seed == 1);
  REQUIRE(cfg.bandwidth_bps == 2'000'000.0);
  REQUIRE(cfg.detect_latency == 0.0);
  REQUIRE(cfg.dsdv.periodic_interval == 15.0);
  REQUIRE(cfg.dsdv.settling_time == 6.0);
  REQUIRE(cfg.dsdv.neighbor_timeout == 45.0);
  REQUIRE(cfg.dsdv_warm_start);
  REQUIRE(cfg.sctp.rto_initial == 3.0);
  REQUIRE(cfg.sctp.rto_min == 1.0);
  REQUIRE(cfg.sctp.rto_max == 60.0);
  REQUIRE(cfg.sctp.max_retrans == 10);
  REQUIRE(cfg.sctp.window == 4);
  REQUIRE(cfg.sctp.heartbeat_interval == 30.0);
  REQUIRE(cfg.sctp.backoff_multiplier == 2.0);
  REQUIRE(cfg.sctp.segment_bytes == 1500);
  REQUIRE_FALSE(cfg.shutdown_at.has_value());
}

TEST_CASE("every key parses with comments and stray whitespace") {
  const auto cfg = parse_config(
      "# reference overrides\n"
      "topology = chain(4)\n"
      "\n"
      "sim_end = 600      # shorter run\n"
      "  cbr_interval=0.25\n"
      "segment_bytes = 1000\n"
      "racm.start = 50\n"
      "racm.d_min = 5\n"
      "racm.d_max = 15\n"
      "reps = 3\n"
      "base_seed = 42\n"
      "bandwidth_bps = 1e6\n"
      "detect_latency = 0.5\n"
      "dsdv.periodic = 10\n"
      "dsdv.settling = 4\n"
      "dsdv.neighbor_timeout = 30\n"
      "dsdv.warm_start = false\n"
      "sctp.rto_initial = 2\n"
      "sctp.rto_min = 0.5\n"
      "sctp.rto_max = 30\n"
      "sctp.max_retrans = 6\n"
      "sctp.window = 8\n"
      "sctp.heartbeat = 20\n"
      "sctp.backoff_multiplier = 1.5\n"
      "shutdown_at = 590\n");
  REQUIRE(cfg.node_count == 4);
  REQUIRE(cfg.sim_end == 600.0);
  REQUIRE(cfg.cbr_interval == 0.25);
  REQUIRE(cfg.segment_bytes == 1000);
  REQUIRE(cfg.sctp.segment_bytes == 1000);  // transport inherits the size
  REQUIRE(cfg.racm.start == 50.0);
  REQUIRE(cfg.racm.d_min == 5.0);
  REQUIRE(cfg.racm.d_max == 15.0);
  REQUIRE(cfg.reps == 3);
  REQUIRE(cfg.base_seed == 42);
  REQUIRE(cfg.bandwidth_bps == Approx(1e6));
  REQUIRE(cfg.detect_latency == 0.5);
  REQUIRE(cfg.dsdv.periodic_interval == 10.0);
  REQUIRE(cfg.dsdv.settling_time == 4.0);
  REQUIRE(cfg.dsdv.neighbor_timeout == 30.0);
  REQUIRE_FALSE(cfg.dsdv_warm_start);
  REQUIRE(cfg.sctp.rto_initial == 2.0);
  REQUIRE(cfg.sctp.rto_min == 0.5);
  REQUIRE(cfg.sctp.rto_max == 30.0);
  REQUIRE(cfg.sctp.max_retrans == 6);
  REQUIRE(cfg.sctp.window == 8);
  REQUIRE(cfg.sctp.heartbeat_interval == 20.0);
  REQUIRE(cfg.sctp.backoff_multiplier == 1.5);
  REQUIRE(cfg.shutdown_at.has_value());
  REQUIRE(*cfg.shutdown_at == 590.0);
}

TEST_CASE("topology accepts pair and chain forms only") {
  REQUIRE(parse_config("topology = pair\n").node_count == 2);
  REQUIRE(parse_config("topology = chain(2)\n").node_count == 2);
  REQUIRE(parse_config("topology = chain(7)\n").node_count == 7);
  REQUIRE_THROWS_AS(parse_config("topology = chain(1)\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("topology = star(3)\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("topology = chain(x)\n"), ConfigError);
}

TEST_CASE("unknown keys and malformed lines report their line number") {
  auto message_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  REQUIRE(message_of("# a comment\n\nbogus_key = 1\n").find("line 3") !=
          std::string::npos);
  REQUIRE(message_of("sim_end 600\n").find("line 1") != std::string::npos);
  REQUIRE(message_of("sim_end =\n").find("line 1") != std::string::npos);
  REQUIRE(message_of("sim_end = fast\n").find("line 1") != std::string::npos);
  REQUIRE(message_of("reps = 2.5\n").find("line 1") != std::string::npos);
  REQUIRE(message_of("dsdv.warm_start = maybe\n").find("line 1") !=
          std::string::npos);
}

TEST_CASE("a violation is pinned to the line that introduced it") {
  try {
    parse_config("sim_end = 600\nracm.d_min = 200\nreps = 5\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    REQUIRE(what.find("line 2") != std::string::npos);
    REQUIRE(what.find("d_min") != std::string::npos);
  }
}

TEST_CASE("a later line can repair an intermediate violation") {
  const auto cfg = parse_config("racm.d_min = 150\nracm.d_max = 200\n");
  REQUIRE(cfg.racm.d_min == 150.0);
  REQUIRE(cfg.racm.d_max == 200.0);
  // The reverse order never violates at all.
  const auto cfg2 = parse_config("racm.d_max = 200\nracm.d_min = 150\n");
  REQUIRE(cfg2.racm.d_min == 150.0);
}

TEST_CASE("value range violations are rejected") {
  REQUIRE_THROWS_AS(parse_config("sim_end = -5\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("cbr_interval = 0\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("racm.d_min = 0\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("reps = 0\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("bandwidth_bps = 0\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("detect_latency = -1\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("sctp.window = 0\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("sctp.backoff_multiplier = 0.5\n"),
                    ConfigError);
  REQUIRE_THROWS_AS(parse_config("sctp.rto_min = 90\n"), ConfigError);
}

TEST_CASE("shutdown_at must fall inside the run") {
  REQUIRE_THROWS_AS(parse_config("shutdown_at = 2000\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config("shutdown_at = 0\n"), ConfigError);
  const auto cfg = parse_config("shutdown_at = 1990\nsim_end = 1995\n");
  REQUIRE(*cfg.shutdown_at == 1990.0);
  const auto off = parse_config("shutdown_at = 500\nshutdown_at = none\n");
  REQUIRE_FALSE(off.shutdown_at.has_value());
}

TEST_CASE("shrinking the run below a set shutdown point is caught") {
  REQUIRE_THROWS_AS(parse_config("shutdown_at = 1990\nsim_end = 600\n"),
                    ConfigError);
}
