#pragma once

// Per-cut-cycle measurement: post-break latency, unsuccessful emissions in
// bits, delivered volume, and the loss ratio, grouped into break-duration
// bins. A cycle is one Bad interval plus the Good interval that follows it;
// everything before the first cut lands in a warm-up bucket that never
// reaches the aggregates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <locale>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cutsim/frame.hpp"
#include "cutsim/types.hpp"

namespace cutsim {

inline std::string bin_label(Seconds d, Seconds width, Seconds top) {
  double lo = std::floor(d / width) * width;
  if (lo >= top) lo = top - width;  // top bin is closed
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << lo << '-' << lo + width;
  return os.str();
}

struct CycleRecord {
  int rep = 0;
  int cycle_index = 0;
  Seconds break_duration = 0;
  double bin_lo = 0;  // numeric bin edge, for ordering
  std::string bin;
  std::optional<Seconds> latency;  // none when no data was pending
  std::uint64_t lost_frames = 0;
  std::uint64_t lost_bits = 0;
  std::uint64_t delivered_payload_bytes = 0;
  std::optional<double> ratio_pct;  // undefined when nothing was delivered
  Seconds good_seconds = 0;
};

struct RunTotals {
  std::uint64_t emitted_bytes = 0;
  std::uint64_t successful_bits = 0;
  std::uint64_t lost_bits = 0;
  std::uint64_t lost_frames = 0;
  std::uint64_t delivered_payload_bytes = 0;
};

class MetricsCollector {
 public:
  MetricsCollector(int rep, Seconds bin_width, Seconds bin_top)
      : rep_(rep), bin_width_(bin_width), bin_top_(bin_top) {}

  // -- counters ------------------------------------------------------------
  void record_emission(const Frame& f, TxOutcome outcome, Seconds t) {
    totals_.emitted_bytes += f.total_bytes;
    if (outcome == TxOutcome::Lost) {
      totals_.lost_bits += 8ull * f.total_bytes;
      totals_.lost_frames += 1;
      open_lost_frames_ += 1;
      open_lost_bits_ += 8ull * f.total_bytes;
    } else {
      totals_.successful_bits += 8ull * f.total_bytes;
      if (f.kind == FrameKind::Data && awaiting_first_data_ &&
          t >= good_start_) {
        first_data_after_good_ = t;
        awaiting_first_data_ = false;
      }
    }
  }

  void record_delivery(std::uint64_t payload_bytes, Seconds) {
    totals_.delivered_payload_bytes += payload_bytes;
    open_delivered_ += payload_bytes;
  }

  // -- cycle lifecycle, driven by oracle channel transitions ----------------
  void on_bad_transition(Seconds t, int /*unused*/ = 0) {
    if (in_cycle_ && good_seen_) {
      push_record(close_cycle(bad_start_, good_start_, t,
                              first_data_after_good_));
    }
    reset_open_counters();
    in_cycle_ = true;
    good_seen_ = false;
    bad_start_ = t;
  }

  void on_good_transition(Seconds t, bool data_pending) {
    if (!in_cycle_) return;  // Good before any Bad: still warm-up
    good_start_ = t;
    good_seen_ = true;
    awaiting_first_data_ = data_pending;
    first_data_after_good_.reset();
  }

  void finish(Seconds t_end) {
    if (in_cycle_ && good_seen_ && t_end > good_start_) {
      push_record(close_cycle(bad_start_, good_start_, t_end,
                              first_data_after_good_));
    }
    // A run ending mid-Bad leaves an unmeasurable partial cycle; its
    // counters stay in the run totals only.
    in_cycle_ = false;
  }

  // Finalizes the counters accumulated since the cycle opened. Kept public
  // so traces can drive it directly.
  CycleRecord close_cycle(Seconds bad_start, Seconds good_start,
                          Seconds next_bad_or_end,
                          std::optional<Seconds> first_data_after_good) {
    if (!(good_start > bad_start) || !(next_bad_or_end > good_start)) {
      throw SimError("close_cycle: bad_start < good_start < end required");
    }
    if (bad_start < last_cycle_end_) {
      throw SimError("close_cycle: overlapping cycles");
    }
    last_cycle_end_ = next_bad_or_end;
    CycleRecord r;
    r.rep = rep_;
    r.cycle_index = next_cycle_index_++;
    r.break_duration = good_start - bad_start;
    r.bin_lo = std::min(std::floor(r.break_duration / bin_width_) * bin_width_,
                        bin_top_ - bin_width_);
    r.bin = bin_label(r.break_duration, bin_width_, bin_top_);
    if (first_data_after_good) {
      r.latency = *first_data_after_good - good_start;
    }
    r.lost_frames = open_lost_frames_;
    r.lost_bits = open_lost_bits_;
    r.delivered_payload_bytes = open_delivered_;
    if (r.delivered_payload_bytes > 0) {
      r.ratio_pct = 100.0 * (static_cast<double>(r.lost_bits) / 8.0) /
                    static_cast<double>(r.delivered_payload_bytes);
    }
    r.good_seconds = next_bad_or_end - good_start;
    return r;
  }

  const std::vector<CycleRecord>& cycles() const { return cycles_; }
  const RunTotals& totals() const { return totals_; }

 private:
  void push_record(CycleRecord r) { cycles_.push_back(std::move(r)); }
  void reset_open_counters() {
    open_lost_frames_ = 0;
    open_lost_bits_ = 0;
    open_delivered_ = 0;
    awaiting_first_data_ = false;
    first_data_after_good_.reset();
  }

  int rep_;
  Seconds bin_width_;
  Seconds bin_top_;
  std::vector<CycleRecord> cycles_;
  RunTotals totals_;

  bool in_cycle_ = false;
  bool good_seen_ = false;
  Seconds bad_start_ = 0;
  Seconds good_start_ = 0;
  Seconds last_cycle_end_ = -1;
  int next_cycle_index_ = 0;
  std::uint64_t open_lost_frames_ = 0;
  std::uint64_t open_lost_bits_ = 0;
  std::uint64_t open_delivered_ = 0;
  bool awaiting_first_data_ = false;
  std::optional<Seconds> first_data_after_good_;
};

struct AggregateRow {
  double bin_lo = 0;
  std::string bin;
  std::size_t n = 0;
  std::optional<double> mean_latency;
  double mean_lost_bits = 0;
  std::optional<double> mean_ratio_pct;
  std::optional<double> mean_throughput_bps;
};

inline std::vector<AggregateRow> aggregate(
    const std::vector<CycleRecord>& records) {
  std::map<double, std::vector<const CycleRecord*>> bins;
  for (const auto& r : records) bins[r.bin_lo].push_back(&r);
  std::vector<AggregateRow> rows;
  for (const auto& [lo, recs] : bins) {
    AggregateRow row;
    row.bin_lo = lo;
    row.bin = recs.front()->bin;
    row.n = recs.size();
    double lat_sum = 0, lost_sum = 0, ratio_sum = 0, thr_sum = 0;
    std::size_t lat_n = 0, ratio_n = 0, thr_n = 0;
    for (const auto* r : recs) {
      lost_sum += static_cast<double>(r->lost_bits);
      if (r->latency) {
        lat_sum += *r->latency;
        ++lat_n;
      }
      if (r->ratio_pct) {
        ratio_sum += *r->ratio_pct;
        ++ratio_n;
      }
      if (r->good_seconds > 0) {
        thr_sum += 8.0 * static_cast<double>(r->delivered_payload_bytes) /
                   r->good_seconds;
        ++thr_n;
      }
    }
    row.mean_lost_bits = lost_sum / static_cast<double>(row.n);
    if (lat_n) row.mean_latency = lat_sum / static_cast<double>(lat_n);
    if (ratio_n) row.mean_ratio_pct = ratio_sum / static_cast<double>(ratio_n);
    if (thr_n) row.mean_throughput_bps = thr_sum / static_cast<double>(thr_n);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Gain factor convention: traditional/persistent for cost metrics (latency,
// lost bits, ratio — above 1 means the persistent policy wins) and
// persistent/traditional for throughput. Zero denominators render as inf.
struct ComparisonRow {
  double bin_lo = 0;
  std::string bin;
  std::size_t n_traditional = 0;
  std::size_t n_persistent = 0;
  std::optional<double> lat_traditional, lat_persistent, lat_gain, lat_diff;
  double lost_traditional = 0, lost_persistent = 0;
  std::optional<double> lost_gain;
  double lost_diff = 0;
  std::optional<double> ratio_traditional, ratio_persistent, ratio_gain,
      ratio_diff;
  std::optional<double> thr_traditional, thr_persistent, thr_gain, thr_diff;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  bool bin_mismatch = false;

  // Loss-ratio gain in the highest common bin.
  std::optional<double> top_bin_ratio_gain() const {
    if (rows.empty()) return std::nullopt;
    return rows.back().ratio_gain;
  }
};

inline double gain_or_inf(double traditional, double persistent) {
  if (persistent == 0) return std::numeric_limits<double>::infinity();
  return traditional / persistent;
}

inline ComparisonTable gain_report(const std::vector<AggregateRow>& trad,
                                   const std::vector<AggregateRow>& pers) {
  ComparisonTable table;
  std::map<double, const AggregateRow*> by_lo;
  for (const auto& r : pers) by_lo[r.bin_lo] = &r;
  std::size_t matched = 0;
  for (const auto& t : trad) {
    auto it = by_lo.find(t.bin_lo);
    if (it == by_lo.end()) continue;
    ++matched;
    const AggregateRow& p = *it->second;
    ComparisonRow row;
    row.bin_lo = t.bin_lo;
    row.bin = t.bin;
    row.n_traditional = t.n;
    row.n_persistent = p.n;
    row.lat_traditional = t.mean_latency;
    row.lat_persistent = p.mean_latency;
    if (t.mean_latency && p.mean_latency) {
      row.lat_gain = gain_or_inf(*t.mean_latency, *p.mean_latency);
      row.lat_diff = *t.mean_latency - *p.mean_latency;
    }
    row.lost_traditional = t.mean_lost_bits;
    row.lost_persistent = p.mean_lost_bits;
    row.lost_gain = gain_or_inf(t.mean_lost_bits, p.mean_lost_bits);
    row.lost_diff = t.mean_lost_bits - p.mean_lost_bits;
    row.ratio_traditional = t.mean_ratio_pct;
    row.ratio_persistent = p.mean_ratio_pct;
    if (t.mean_ratio_pct && p.mean_ratio_pct) {
      row.ratio_gain = gain_or_inf(*t.mean_ratio_pct, *p.mean_ratio_pct);
      row.ratio_diff = *t.mean_ratio_pct - *p.mean_ratio_pct;
    }
    row.thr_traditional = t.mean_throughput_bps;
    row.thr_persistent = p.mean_throughput_bps;
    if (t.mean_throughput_bps && p.mean_throughput_bps) {
      row.thr_gain = gain_or_inf(*p.mean_throughput_bps,
                                 *t.mean_throughput_bps);
      row.thr_diff = *p.mean_throughput_bps - *t.mean_throughput_bps;
    }
    table.rows.push_back(std::move(row));
  }
  table.bin_mismatch = matched != trad.size() || matched != pers.size();
  return table;
}

// -- CSV rendering -----------------------------------------------------------

inline std::string csv_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << v;
  return os.str();
}

inline std::string csv_opt(const std::optional<double>& v,
                           const char* absent = "none") {
  return v ? csv_num(*v) : std::string(absent);
}

inline void write_cycles_csv_header(std::ostream& out) {
  out << "policy,rep,cycle,break_s,bin,latency_s,lost_frames,lost_bits,"
         "delivered_bytes,ratio_pct\n";
}

inline void write_cycles_csv_rows(const std::string& policy,
                                  const std::vector<CycleRecord>& records,
                                  std::ostream& out) {
  for (const auto& r : records) {
    out << policy << ',' << r.rep << ',' << r.cycle_index << ','
        << csv_num(r.break_duration) << ',' << r.bin << ','
        << csv_opt(r.latency) << ',' << r.lost_frames << ',' << r.lost_bits
        << ',' << r.delivered_payload_bytes << ','
        << csv_opt(r.ratio_pct, "undef") << '\n';
  }
}

inline void write_aggregate_csv_header(std::ostream& out) {
  out << "# throughput = delivered payload bits per second of Good time "
         "within the cycle\n";
  out << "policy,bin,n,mean_latency_s,mean_lost_bits,mean_ratio_pct,"
         "mean_throughput_bps\n";
}

inline void write_aggregate_csv_rows(const std::string& policy,
                                     const std::vector<AggregateRow>& rows,
                                     std::ostream& out) {
  for (const auto& r : rows) {
    out << policy << ',' << r.bin << ',' << r.n << ','
        << csv_opt(r.mean_latency) << ',' << csv_num(r.mean_lost_bits) << ','
        << csv_opt(r.mean_ratio_pct) << ',' << csv_opt(r.mean_throughput_bps)
        << '\n';
  }
}

inline void write_comparison_csv(const ComparisonTable& table,
                                 std::ostream& out) {
  out << "# gain = traditional/persistent for latency, lost bits and ratio; "
         "persistent/traditional for throughput\n";
  out << "bin,n_traditional,n_persistent,"
         "latency_traditional,latency_persistent,latency_gain,latency_diff,"
         "lost_traditional,lost_persistent,lost_gain,lost_diff,"
         "ratio_traditional,ratio_persistent,ratio_gain,ratio_diff,"
         "throughput_traditional,throughput_persistent,throughput_gain,"
         "throughput_diff\n";
  for (const auto& r : table.rows) {
    out << r.bin << ',' << r.n_traditional << ',' << r.n_persistent << ','
        << csv_opt(r.lat_traditional) << ',' << csv_opt(r.lat_persistent)
        << ',' << csv_opt(r.lat_gain) << ',' << csv_opt(r.lat_diff) << ','
        << csv_num(r.lost_traditional) << ',' << csv_num(r.lost_persistent)
        << ',' << csv_opt(r.lost_gain) << ',' << csv_num(r.lost_diff) << ','
        << csv_opt(r.ratio_traditional) << ',' << csv_opt(r.ratio_persistent)
        << ',' << csv_opt(r.ratio_gain) << ',' << csv_opt(r.ratio_diff) << ','
        << csv_opt(r.thr_traditional) << ',' << csv_opt(r.thr_persistent)
        << ',' << csv_opt(r.thr_gain) << ',' << csv_opt(r.thr_diff) << '\n';
  }
}

}  // namespace cutsim
