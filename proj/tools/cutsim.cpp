// Command-line front end: seeded simulation campaigns, cross-run comparison,
// and a quick self-test battery.

#include <cmath>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cutsim/config.hpp"
#include "cutsim/scenario.hpp"

namespace {

using namespace cutsim;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<PolicyMode> policies_from_flag(const std::string& policy) {
  if (policy == "traditional") return {PolicyMode::Traditional};
  if (policy == "persistent") return {PolicyMode::ExtendedPersistent};
  return {PolicyMode::Traditional, PolicyMode::ExtendedPersistent};
}

int run_simulate(const std::string& config_path, const std::string& policy,
                 std::optional<std::uint64_t> seed,
                 std::optional<std::uint32_t> reps, const std::string& out_dir,
                 unsigned threads) {
  ScenarioConfig cfg = config_path == "none"
                           ? ScenarioConfig{}
                           : parse_config(read_file(config_path));
  if (seed) cfg.base_seed = *seed;
  if (reps) cfg.reps = *reps;
  cfg.sctp.segment_bytes = cfg.segment_bytes;
  cfg.validate();
  const CampaignResult result =
      run_campaign(cfg, policies_from_flag(policy), out_dir, threads);
  std::cout << "wrote " << (result.comparison ? 3 : 2) << " csv files to "
            << out_dir << " (" << result.runs.size() << " runs)\n";
  return 0;
}

int run_compare(const std::string& a_dir, const std::string& b_dir,
                const std::string& out_file) {
  const auto load = [](const std::string& dir) {
    const std::string path = dir + "/aggregates.csv";
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read " + path);
    return std::make_pair(path, read_aggregates_csv(in));
  };
  const auto [a_path, a_rows] = load(a_dir);
  const auto [b_path, b_rows] = load(b_dir);
  const auto trad = select_aggregates(a_rows, "traditional", a_path);
  const auto pers = select_aggregates(b_rows, "persistent", b_path);
  const ComparisonTable table = gain_report(trad, pers);
  std::ofstream out(out_file);
  if (!out) throw ConfigError("cannot write " + out_file);
  write_comparison_csv(table, out);
  std::cout << "wrote " << table.rows.size() << " comparison rows to "
            << out_file << '\n';
  if (table.bin_mismatch) {
    std::cerr << "warning: bins differ between inputs; unmatched bins "
                 "omitted\n";
  }
  return 0;
}

void expect(bool ok, const std::string& what) {
  if (!ok) throw SimError("selftest failed: " + what);
  std::cout << "selftest: " << what << " ok\n";
}

void expect_quiet(bool ok, const std::string& what) {
  if (!ok) throw SimError("selftest failed: " + what);
}

int run_selftest() {
  {
    // Event ordering: time, then priority, then insertion.
    SimKernel k;
    std::vector<int> order;
    k.schedule(2.0, kAppPriority, [&] { order.push_back(4); });
    k.schedule(1.0, kTransportPriority, [&] { order.push_back(2); });
    k.schedule(1.0, kChannelPriority, [&] { order.push_back(1); });
    k.schedule(1.0, kTransportPriority, [&] { order.push_back(3); });
    k.run(3.0);
    expect(order == std::vector<int>{1, 2, 3, 4}, "kernel ordering");
  }
  {
    // Cut durations: uniform integers in [20, 100], mean near 60.
    Rng rng(42);
    const CutSchedule s = build_cut_schedule(rng, 200, 20, 100, 2'000'000);
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i + 1 < s.transitions.size(); ++i) {
      const double d = s.transitions[i + 1].at - s.transitions[i].at;
      expect_quiet(d >= 20 && d <= 100 && d == std::floor(d),
                   "cut duration bounds");
      sum += d;
      ++n;
    }
    expect(n > 10'000 && std::abs(sum / static_cast<double>(n) - 60.0) < 1.0,
           "cut duration mean");
  }
  {
    // First RTT sample: srtt = s, rttvar = s/2, rto clamped to rto_min.
    SimKernel k;
    SctpConfig cfg;
    const SizeTable sizes;
    Association a(
        k, cfg, sizes, 0, 1, PolicyMode::Traditional,
        [](NodeId) { return std::optional<NodeId>(1); }, [](Frame) {});
    a.start(0.0);
    a.submit_payload(100, 0.0);
    k.run(0.2);
    Frame sack;
    sack.kind = FrameKind::Sack;
    sack.flow_src = 1;
    sack.flow_dst = 0;
    sack.cum_tsn = 1;
    a.on_frame(sack, 0.2);
    const RtoState& r = a.rto_state();
    expect(r.srtt && std::abs(*r.srtt - 0.2) < 1e-12 && r.rttvar &&
               std::abs(*r.rttvar - 0.1) < 1e-12 &&
               std::abs(r.rto - 1.0) < 1e-12,
           "rto first sample");
  }
  {
    // Mini campaign: determinism, energy conservation, persistent zero loss.
    ScenarioConfig cfg;
    cfg.sim_end = 400;
    cfg.reps = 2;
    cfg.base_seed = 7;
    const auto both = policies_from_flag("both");
    const CampaignResult r1 = run_many(cfg, both, 1);
    const CampaignResult r2 = run_many(cfg, both, 2);
    std::ostringstream s1, s2;
    for (const auto& run : r1.runs) {
      write_cycles_csv_rows(to_string(run.policy), run.cycles, s1);
    }
    for (const auto& run : r2.runs) {
      write_cycles_csv_rows(to_string(run.policy), run.cycles, s2);
    }
    expect(s1.str() == s2.str() && !r1.runs.empty(), "campaign determinism");
    for (const auto& run : r1.runs) {
      expect_quiet(8 * run.totals.emitted_bytes ==
                       run.totals.successful_bits + run.totals.lost_bits,
                   "energy conservation");
      if (run.policy == PolicyMode::ExtendedPersistent) {
        expect_quiet(run.totals.lost_bits == 0, "persistent zero loss");
      } else {
        expect_quiet(run.totals.lost_bits > 0, "traditional nonzero loss");
      }
    }
    expect(true, "energy conservation + policy loss split");
  }
  std::cout << "selftest: all ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cut-model protocol simulator"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "run a seeded campaign");
  std::string config_path = "none";
  std::string policy = "both";
  std::uint64_t seed_val = 0;
  std::uint32_t reps_val = 0;
  std::string out_dir;
  unsigned threads = 1;
  sim->add_option("--config", config_path,
                  "config file path, or 'none' for defaults");
  sim->add_option("--policy", policy, "policy to simulate")
      ->check(CLI::IsMember({"traditional", "persistent", "both"}));
  auto* seed_opt = sim->add_option("--seed", seed_val, "base seed override");
  auto* reps_opt = sim->add_option("--reps", reps_val,
                                   "replication count override");
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--threads", threads, "worker threads for replications");

  auto* cmp = app.add_subcommand("compare", "compare two campaign outputs");
  std::string a_dir, b_dir, out_file;
  cmp->add_option("--a", a_dir, "directory with traditional aggregates.csv")
      ->required();
  cmp->add_option("--b", b_dir, "directory with persistent aggregates.csv")
      ->required();
  cmp->add_option("--out", out_file, "comparison csv to write")->required();

  app.add_subcommand("selftest", "run the built-in check battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) {
      return run_simulate(config_path, policy,
                          seed_opt->count() ? std::optional(seed_val)
                                            : std::nullopt,
                          reps_opt->count() ? std::optional(reps_val)
                                            : std::nullopt,
                          out_dir, threads);
    }
    if (cmp->parsed()) return run_compare(a_dir, b_dir, out_file);
    return run_selftest();
  } catch (const cutsim::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const cutsim::SimError& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
