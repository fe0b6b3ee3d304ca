#pragma once

// Scenario and campaign runner. One scenario = one seeded cut schedule, a
// chain of nodes (pair by default), an established association streaming CBR
// traffic, and a metrics collector driven by oracle channel probes. A
// campaign replays every replication under each requested policy with the
// identical channel realization, then aggregates and writes CSVs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cutsim/channel.hpp"
#include "cutsim/config.hpp"
#include "cutsim/kernel.hpp"
#include "cutsim/link.hpp"
#include "cutsim/metrics.hpp"
#include "cutsim/node.hpp"
#include "cutsim/policy.hpp"
#include "cutsim/rng.hpp"
#include "cutsim/types.hpp"

namespace cutsim {

struct RunResult {
  int rep = 0;
  PolicyMode policy = PolicyMode::Traditional;
  std::vector<CycleRecord> cycles;
  RunTotals totals;
  std::uint64_t seed_used = 0;
  std::uint64_t schedule_hash = 0;
};

inline std::map<NodeId, std::vector<NodeId>> chain_adjacency(
    std::uint32_t n) {
  std::map<NodeId, std::vector<NodeId>> adj;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::vector<NodeId> nb;
    if (i > 0) nb.push_back(i - 1);
    if (i + 1 < n) nb.push_back(i + 1);
    adj[i] = std::move(nb);
  }
  return adj;
}

// First-hop routing table from src by breadth-first search.
inline std::map<NodeId, std::pair<NodeId, std::uint32_t>> bfs_routes(
    const std::map<NodeId, std::vector<NodeId>>& adj, NodeId src) {
  std::map<NodeId, std::pair<NodeId, std::uint32_t>> out;
  std::map<NodeId, NodeId> first_hop;
  std::map<NodeId, std::uint32_t> dist{{src, 0}};
  std::deque<NodeId> q{src};
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop_front();
    for (NodeId v : adj.at(u)) {
      if (dist.count(v)) continue;
      dist[v] = dist[u] + 1;
      first_hop[v] = u == src ? v : first_hop[u];
      out[v] = {first_hop[v], dist[v]};
      q.push_back(v);
    }
  }
  return out;
}

inline RunResult run_scenario(const ScenarioConfig& cfg, PolicyMode mode,
                              int rep) {
  cfg.validate();
  SimKernel kernel;
  const std::uint64_t run_seed = derive_run_seed(cfg.base_seed, rep);
  Rng channel_rng(derive_stream_seed(run_seed, RngStream::kChannel));
  const CutSchedule schedule =
      build_cut_schedule(channel_rng, cfg.racm.start, cfg.racm.d_min,
                         cfg.racm.d_max, cfg.sim_end);
  EnvSubsystem env(kernel, schedule, cfg.detect_latency);
  Link link(kernel, schedule, cfg.bandwidth_bps);

  const Seconds bin_width = 10;
  const Seconds bin_top =
      std::max(bin_width, std::ceil(cfg.racm.d_max / bin_width) * bin_width);
  MetricsCollector metrics(rep, bin_width, bin_top);
  link.add_emission_hook([&metrics](const Frame& f, TxOutcome o, Seconds t) {
    metrics.record_emission(f, o, t);
  });

  const SizeTable sizes;
  const auto adj = chain_adjacency(cfg.node_count);
  std::vector<std::unique_ptr<Node>> nodes;
  nodes.reserve(cfg.node_count);
  for (std::uint32_t i = 0; i < cfg.node_count; ++i) {
    nodes.push_back(std::make_unique<Node>(kernel, i, link, cfg.dsdv, sizes));
  }
  for (std::uint32_t i = 0; i < cfg.node_count; ++i) {
    nodes[i]->set_neighbors(adj.at(i));
  }
  if (cfg.dsdv_warm_start) {
    for (std::uint32_t i = 0; i < cfg.node_count; ++i) {
      nodes[i]->dsdv().warm_start(bfs_routes(adj, i), 0.0);
    }
  }

  Node& sender = *nodes.front();
  Node& receiver = *nodes.back();
  Association& tx = sender.make_association(receiver.id(), cfg.sctp, mode);
  Association& rx = receiver.make_association(sender.id(), cfg.sctp, mode);
  rx.set_deliver_hook([&metrics](std::uint32_t bytes, Seconds t) {
    metrics.record_delivery(bytes, t);
  });

  std::vector<Node*> node_ptrs;
  for (auto& n : nodes) node_ptrs.push_back(n.get());
  bind_policy(mode, env, node_ptrs);
  env.publish_transitions();

  for (auto& n : nodes) n->dsdv().start(0.0);
  tx.start(0.0);
  rx.start(0.0);

  // Oracle probes drive the cycle ledger. They run ahead of the channel
  // notification at the same instant, so the good-probe sees the sender's
  // backlog as it stood during the cut.
  for (const auto& tr : schedule.transitions) {
    kernel.schedule(tr.at, kProbePriority, [&metrics, &tx, tr] {
      if (tr.state == ChannelState::Bad) {
        metrics.on_bad_transition(tr.at);
      } else {
        metrics.on_good_transition(tr.at, tx.data_pending());
      }
    });
  }

  const Seconds cbr_stop = cfg.shutdown_at ? *cfg.shutdown_at : cfg.sim_end;
  for (std::uint64_t k = 0;; ++k) {
    const Seconds t = static_cast<Seconds>(k) * cfg.cbr_interval;
    if (t >= cbr_stop) break;
    kernel.schedule(t, kAppPriority, [&tx, t, bytes = cfg.segment_bytes] {
      tx.submit_payload(bytes, t);
    });
  }
  if (cfg.shutdown_at) {
    kernel.schedule(*cfg.shutdown_at, kAppPriority,
                    [&tx, at = *cfg.shutdown_at] { tx.shutdown(at); });
  }

  kernel.run(cfg.sim_end);
  metrics.finish(cfg.sim_end);

  RunResult res;
  res.rep = rep;
  res.policy = mode;
  res.cycles = metrics.cycles();
  res.totals = metrics.totals();
  res.seed_used = run_seed;
  res.schedule_hash = schedule.hash();
  return res;
}

struct CampaignResult {
  // Canonical order: policies alphabetical by name, replications ascending.
  std::vector<RunResult> runs;
  std::vector<AggregateRow> aggregates_persistent;
  std::vector<AggregateRow> aggregates_traditional;
  std::optional<ComparisonTable> comparison;
};

// Runs reps × policies, optionally across worker threads. Results land in
// preallocated slots so ordering (and thus output bytes) never depends on
// scheduling.
inline CampaignResult run_many(const ScenarioConfig& cfg,
                               std::vector<PolicyMode> policies,
                               unsigned threads = 1) {
  cfg.validate();
  std::sort(policies.begin(), policies.end(),
            [](PolicyMode a, PolicyMode b) {
              return std::string(to_string(a)) < to_string(b);
            });
  policies.erase(std::unique(policies.begin(), policies.end()),
                 policies.end());
  if (policies.empty()) throw ConfigError("campaign: no policy selected");

  struct Job {
    PolicyMode mode;
    int rep;
  };
  std::vector<Job> jobs;
  for (PolicyMode m : policies) {
    for (std::uint32_t r = 0; r < cfg.reps; ++r) {
      jobs.push_back({m, static_cast<int>(r)});
    }
  }

  CampaignResult out;
  out.runs.resize(jobs.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      out.runs[i] = run_scenario(cfg, jobs[i].mode, jobs[i].rep);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        try {
          out.runs[i] = run_scenario(cfg, jobs[i].mode, jobs[i].rep);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::min<unsigned>(threads,
                                          static_cast<unsigned>(jobs.size()));
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  // Both policies must have seen the identical channel realization.
  if (policies.size() == 2) {
    for (std::uint32_t r = 0; r < cfg.reps; ++r) {
      if (out.runs[r].schedule_hash !=
          out.runs[cfg.reps + r].schedule_hash) {
        throw SimError("campaign: cut schedules diverged between policies");
      }
    }
  }

  for (PolicyMode m : policies) {
    std::vector<CycleRecord> pooled;
    for (const auto& run : out.runs) {
      if (run.policy != m) continue;
      pooled.insert(pooled.end(), run.cycles.begin(), run.cycles.end());
    }
    auto rows = aggregate(pooled);
    if (m == PolicyMode::ExtendedPersistent) {
      out.aggregates_persistent = std::move(rows);
    } else {
      out.aggregates_traditional = std::move(rows);
    }
  }
  if (policies.size() == 2) {
    out.comparison =
        gain_report(out.aggregates_traditional, out.aggregates_persistent);
  }
  return out;
}

inline void ensure_writable_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw ConfigError("cannot create output directory " + dir + ": " +
                      ec.message());
  }
  std::ofstream probe(std::filesystem::path(dir) / "cycles.csv");
  if (!probe) throw ConfigError("output directory not writable: " + dir);
}

inline void write_campaign_csvs(const CampaignResult& c,
                                const std::string& dir) {
  const auto path = [&dir](const char* name) {
    return (std::filesystem::path(dir) / name).string();
  };
  {
    std::ofstream f(path("cycles.csv"));
    if (!f) throw ConfigError("cannot write " + path("cycles.csv"));
    write_cycles_csv_header(f);
    for (const auto& run : c.runs) {
      write_cycles_csv_rows(to_string(run.policy), run.cycles, f);
    }
  }
  {
    std::ofstream f(path("aggregates.csv"));
    if (!f) throw ConfigError("cannot write " + path("aggregates.csv"));
    write_aggregate_csv_header(f);
    write_aggregate_csv_rows(to_string(PolicyMode::ExtendedPersistent),
                             c.aggregates_persistent, f);
    write_aggregate_csv_rows(to_string(PolicyMode::Traditional),
                             c.aggregates_traditional, f);
  }
  if (c.comparison) {
    std::ofstream f(path("comparison.csv"));
    if (!f) throw ConfigError("cannot write " + path("comparison.csv"));
    write_comparison_csv(*c.comparison, f);
  }
}

// Full pipeline: probe the output directory, simulate, write files.
inline CampaignResult run_campaign(const ScenarioConfig& cfg,
                                   std::vector<PolicyMode> policies,
                                   const std::string& out_dir,
                                   unsigned threads = 1) {
  ensure_writable_dir(out_dir);
  CampaignResult result = run_many(cfg, std::move(policies), threads);
  write_campaign_csvs(result, out_dir);
  return result;
}

// Parses an aggregates.csv back into rows grouped by policy name; used by
// the compare command.
inline std::map<std::string, std::vector<AggregateRow>> read_aggregates_csv(
    std::istream& in) {
  std::map<std::string, std::vector<AggregateRow>> out;
  std::string line;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // column header
      continue;
    }
    std::vector<std::string> cols;
    std::istringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (cols.size() != 7) {
      throw ConfigError("aggregates line " + std::to_string(line_no) +
                        ": expected 7 columns");
    }
    const auto opt = [&](const std::string& v) -> std::optional<double> {
      if (v == "none" || v == "undef") return std::nullopt;
      return std::stod(v);
    };
    AggregateRow row;
    row.bin = cols[1];
    row.bin_lo = std::stod(cols[1].substr(0, cols[1].find('-')));
    row.n = static_cast<std::size_t>(std::stoul(cols[2]));
    row.mean_latency = opt(cols[3]);
    row.mean_lost_bits = std::stod(cols[4]);
    row.mean_ratio_pct = opt(cols[5]);
    row.mean_throughput_bps = opt(cols[6]);
    out[cols[0]].push_back(std::move(row));
  }
  return out;
}

// Picks the rows for `want` out of a parsed aggregates file: exact policy
// match, else the file's single policy, else ambiguous.
inline std::vector<AggregateRow> select_aggregates(
    const std::map<std::string, std::vector<AggregateRow>>& parsed,
    const std::string& want, const std::string& file) {
  if (auto it = parsed.find(want); it != parsed.end()) return it->second;
  if (parsed.size() == 1) return parsed.begin()->second;
  throw ConfigError(file + ": no '" + want +
                    "' rows and multiple policies present");
}

}  // namespace cutsim
