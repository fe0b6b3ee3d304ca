#pragma once

// Scenario configuration: flat `key = value` text with `#` comments and
// dotted section keys. Absent keys take the defaults of the reference
// scenario (two nodes, 2000 s, CBR every 0.1 s, cuts of 20-100 s from
// t = 200). Unknown keys and invariant violations are rejected with the
// offending line number.

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>

#include "cutsim/dsdv.hpp"
#include "cutsim/sctp.hpp"
#include "cutsim/types.hpp"

namespace cutsim {

struct RacmConfig {
  Seconds start = 200;
  Seconds d_min = 20;
  Seconds d_max = 100;
};

struct ScenarioConfig {
  std::uint32_t node_count = 2;  // pair = 2; chain(n) = n
  Seconds sim_end = 2000;
  Seconds cbr_interval = 0.1;
  std::uint32_t segment_bytes = 1500;
  RacmConfig racm;
  std::uint32_t reps = 20;
  std::uint64_t base_seed = 1;
  double bandwidth_bps = 2'000'000;
  Seconds detect_latency = 0;
  DsdvConfig dsdv;
  bool dsdv_warm_start = true;
  SctpConfig sctp;
  std::optional<Seconds> shutdown_at;

  void validate() const {
    if (node_count < 2) throw ConfigError("topology: need at least 2 nodes");
    if (sim_end <= 0) throw ConfigError("sim_end must be positive");
    if (cbr_interval <= 0) throw ConfigError("cbr_interval must be positive");
    if (segment_bytes == 0) throw ConfigError("segment_bytes must be positive");
    if (racm.start < 0) throw ConfigError("racm.start must be >= 0");
    if (racm.d_min <= 0 || racm.d_min > racm.d_max) {
      throw ConfigError("racm: need 0 < d_min <= d_max");
    }
    if (reps < 1) throw ConfigError("reps must be >= 1");
    if (bandwidth_bps <= 0) throw ConfigError("bandwidth_bps must be positive");
    if (detect_latency < 0) throw ConfigError("detect_latency must be >= 0");
    if (dsdv.periodic_interval <= 0 || dsdv.settling_time < 0 ||
        dsdv.neighbor_timeout <= 0) {
      throw ConfigError("dsdv intervals must be positive");
    }
    if (sctp.rto_min <= 0 || sctp.rto_min > sctp.rto_max ||
        sctp.rto_initial < sctp.rto_min || sctp.rto_initial > sctp.rto_max) {
      throw ConfigError("sctp: need 0 < rto_min <= rto_initial <= rto_max");
    }
    if (sctp.max_retrans < 0) throw ConfigError("sctp.max_retrans must be >= 0");
    if (sctp.window == 0) throw ConfigError("sctp.window must be positive");
    if (sctp.heartbeat_interval <= 0) {
      throw ConfigError("sctp.heartbeat must be positive");
    }
    if (sctp.backoff_multiplier < 1) {
      throw ConfigError("sctp.backoff_multiplier must be >= 1");
    }
    if (shutdown_at && (*shutdown_at <= 0 || *shutdown_at >= sim_end)) {
      throw ConfigError("shutdown_at must lie inside (0, sim_end)");
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline ConfigError line_error(int line, const std::string& what) {
  return ConfigError("config line " + std::to_string(line) + ": " + what);
}

inline double parse_number(const std::string& v, int line) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw line_error(line, "expected a number, got '" + v + "'");
  }
  if (used != v.size()) {
    throw line_error(line, "expected a number, got '" + v + "'");
  }
  return out;
}

inline std::uint64_t parse_uint(const std::string& v, int line) {
  const double d = parse_number(v, line);
  if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
    throw line_error(line, "expected a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::uint64_t>(d);
}

inline bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw line_error(line, "expected true/false, got '" + v + "'");
}

inline std::uint32_t parse_topology(const std::string& v, int line) {
  if (v == "pair") return 2;
  if (v.rfind("chain(", 0) == 0 && v.back() == ')') {
    const std::string n = v.substr(6, v.size() - 7);
    const auto count = parse_uint(n, line);
    if (count < 2) throw line_error(line, "chain needs at least 2 nodes");
    return static_cast<std::uint32_t>(count);
  }
  throw line_error(line, "topology must be pair or chain(n), got '" + v + "'");
}

}  // namespace detail

inline ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  // An invariant violation is pinned to the line that introduced it, but a
  // later line may repair it (e.g. raising d_max after raising d_min).
  std::optional<ConfigError> pending;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (const auto hash = s.find('#'); hash != std::string::npos) {
      s = s.substr(0, hash);
    }
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw detail::line_error(line, "expected key = value");
    }
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string val = detail::trim(s.substr(eq + 1));
    if (key.empty() || val.empty()) {
      throw detail::line_error(line, "expected key = value");
    }

    if (key == "topology") {
      cfg.node_count = detail::parse_topology(val, line);
    } else if (key == "sim_end") {
      cfg.sim_end = detail::parse_number(val, line);
    } else if (key == "cbr_interval") {
      cfg.cbr_interval = detail::parse_number(val, line);
    } else if (key == "segment_bytes") {
      cfg.segment_bytes =
          static_cast<std::uint32_t>(detail::parse_uint(val, line));
    } else if (key == "racm.start") {
      cfg.racm.start = detail::parse_number(val, line);
    } else if (key == "racm.d_min") {
      cfg.racm.d_min = detail::parse_number(val, line);
    } else if (key == "racm.d_max") {
      cfg.racm.d_max = detail::parse_number(val, line);
    } else if (key == "reps") {
      cfg.reps = static_cast<std::uint32_t>(detail::parse_uint(val, line));
    } else if (key == "base_seed") {
      cfg.base_seed = detail::parse_uint(val, line);
    } else if (key == "bandwidth_bps") {
      cfg.bandwidth_bps = detail::parse_number(val, line);
    } else if (key == "detect_latency") {
      cfg.detect_latency = detail::parse_number(val, line);
    } else if (key == "dsdv.periodic") {
      cfg.dsdv.periodic_interval = detail::parse_number(val, line);
    } else if (key == "dsdv.settling") {
      cfg.dsdv.settling_time = detail::parse_number(val, line);
    } else if (key == "dsdv.neighbor_timeout") {
      cfg.dsdv.neighbor_timeout = detail::parse_number(val, line);
    } else if (key == "dsdv.warm_start") {
      cfg.dsdv_warm_start = detail::parse_bool(val, line);
    } else if (key == "sctp.rto_initial") {
      cfg.sctp.rto_initial = detail::parse_number(val, line);
    } else if (key == "sctp.rto_min") {
      cfg.sctp.rto_min = detail::parse_number(val, line);
    } else if (key == "sctp.rto_max") {
      cfg.sctp.rto_max = detail::parse_number(val, line);
    } else if (key == "sctp.max_retrans") {
      cfg.sctp.max_retrans =
          static_cast<int>(detail::parse_uint(val, line));
    } else if (key == "sctp.window") {
      cfg.sctp.window =
          static_cast<std::size_t>(detail::parse_uint(val, line));
    } else if (key == "sctp.heartbeat") {
      cfg.sctp.heartbeat_interval = detail::parse_number(val, line);
    } else if (key == "sctp.backoff_multiplier") {
      cfg.sctp.backoff_multiplier = detail::parse_number(val, line);
    } else if (key == "shutdown_at") {
      if (val == "none") {
        cfg.shutdown_at.reset();
      } else {
        cfg.shutdown_at = detail::parse_number(val, line);
      }
    } else {
      throw detail::line_error(line, "unknown key '" + key + "'");
    }

    try {
      cfg.sctp.segment_bytes = cfg.segment_bytes;
      cfg.validate();
      pending.reset();
    } catch (const ConfigError& e) {
      if (!pending) pending = detail::line_error(line, e.what());
    }
  }
  if (pending) throw *pending;
  cfg.sctp.segment_bytes = cfg.segment_bytes;
  cfg.validate();
  return cfg;
}

}  // namespace cutsim
