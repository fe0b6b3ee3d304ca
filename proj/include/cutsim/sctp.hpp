#pragma once

// Simplified SCTP endpoint: sliding-window data transfer with cumulative
// SACK plus gap reports, RTO management with exponential backoff, the
// four-SACK fast retransmit, idle heartbeats, and the T2-shutdown teardown
// machine on both sides. Under the persistent policy every timer freezes
// during an observed bad channel and deferred work replays at the next good
// transition: shutdown family first, then data retransmissions, then new
// data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cutsim/channel.hpp"
#include "cutsim/frame.hpp"
#include "cutsim/kernel.hpp"
#include "cutsim/types.hpp"

namespace cutsim {

enum class AssocState : std::uint8_t {
  Established,
  ShutdownPending,
  ShutdownSent,
  ShutdownAckSent,
  Closed,
  Aborted,
};

inline const char* to_string(AssocState s) {
  switch (s) {
    case AssocState::Established: return "ESTABLISHED";
    case AssocState::ShutdownPending: return "SHUTDOWN_PENDING";
    case AssocState::ShutdownSent: return "SHUTDOWN_SENT";
    case AssocState::ShutdownAckSent: return "SHUTDOWN_ACK_SENT";
    case AssocState::Closed: return "CLOSED";
    case AssocState::Aborted: return "ABORTED";
  }
  return "?";
}

struct SctpConfig {
  Seconds rto_initial = 3;
  Seconds rto_min = 1;
  Seconds rto_max = 60;
  int max_retrans = 10;
  std::size_t window = 4;
  Seconds heartbeat_interval = 30;
  double backoff_multiplier = 2;
  std::uint32_t segment_bytes = 1500;
};

struct RtoState {
  std::optional<Seconds> srtt;
  std::optional<Seconds> rttvar;
  Seconds rto = 0;
};

struct TraceEntry {
  Seconds t = 0;
  std::string event;
  AssocState state = AssocState::Established;
  std::uint64_t tsn = 0;
  Seconds rto = 0;
};

class Association {
 public:
  using LookupFn = std::function<std::optional<NodeId>(NodeId dest)>;
  using SendFn = std::function<void(Frame)>;
  using DeliverFn = std::function<void(std::uint32_t bytes, Seconds t)>;

  Association(SimKernel& kernel, const SctpConfig& cfg, const SizeTable& sizes,
              NodeId local, NodeId peer, PolicyMode mode, LookupFn lookup,
              SendFn send)
      : kernel_(kernel),
        cfg_(cfg),
        sizes_(sizes),
        local_(local),
        peer_(peer),
        mode_(mode),
        lookup_(std::move(lookup)),
        send_(std::move(send)) {
    if (cfg.rto_min <= 0 || cfg.rto_min > cfg.rto_max ||
        cfg.rto_initial < cfg.rto_min || cfg.rto_initial > cfg.rto_max) {
      throw ConfigError("sctp: need 0 < rto_min <= rto_initial <= rto_max");
    }
    if (cfg.window == 0 || cfg.segment_bytes == 0) {
      throw ConfigError("sctp: window and segment size must be positive");
    }
    if (cfg.backoff_multiplier < 1) {
      throw ConfigError("sctp: backoff multiplier must be >= 1");
    }
    rto_.rto = cfg.rto_initial;
    last_known_hop_ = peer;
  }

  void set_deliver_hook(DeliverFn fn) { deliver_ = std::move(fn); }
  void enable_trace() { tracing_ = true; }

  // Arms the heartbeat cycle; call once the association is live.
  void start(Seconds t) {
    last_emission_ = t;
    arm_heartbeat(t + cfg_.heartbeat_interval);
  }

  // -- accessors -------------------------------------------------------------
  AssocState state() const { return state_; }
  const RtoState& rto_state() const { return rto_; }
  Seconds rto() const { return rto_.rto; }
  std::uint64_t next_tsn() const { return next_tsn_; }
  std::uint64_t cum_ack() const { return cum_ack_; }
  std::size_t inflight_size() const { return inflight_.size(); }
  std::size_t queue_size() const { return send_queue_.size(); }
  int t2_attempts() const { return t2_attempts_; }
  std::uint64_t dropped_payloads() const { return dropped_payloads_; }
  std::uint64_t delivered_bytes() const { return delivered_bytes_; }
  std::uint64_t highest_delivered_tsn() const { return cum_recv_; }
  bool blocked() const { return blocked_; }
  bool data_pending() const {
    return !send_queue_.empty() || !inflight_.empty() || rtx_pending_;
  }
  const std::vector<TraceEntry>& trace_log() const { return trace_; }
  const std::vector<std::pair<Seconds, AssocState>>& state_log() const {
    return state_log_;
  }

  // -- application side --------------------------------------------------
  void submit_payload(std::uint32_t bytes, Seconds t) {
    if (state_ != AssocState::Established &&
        state_ != AssocState::ShutdownPending) {
      ++dropped_payloads_;
      return;
    }
    while (bytes > 0) {
      const std::uint32_t chunk = std::min(bytes, cfg_.segment_bytes);
      send_queue_.push_back(chunk);
      bytes -= chunk;
    }
    try_send(t);
  }

  void try_send(Seconds t) {
    if (state_ != AssocState::Established &&
        state_ != AssocState::ShutdownPending) {
      return;
    }
    while (inflight_.size() < cfg_.window && !send_queue_.empty()) {
      if (blocked_) return;  // persistent hold: wait for the good change
      const auto hop = lookup_(peer_);
      if (!hop) return;  // held; retried on the next routing change
      const std::uint32_t bytes = send_queue_.front();
      send_queue_.pop_front();
      const std::uint64_t tsn = next_tsn_++;
      inflight_[tsn] = Chunk{bytes, t, false, false};
      emit_data(tsn, bytes, *hop, t, false);
      if (!data_timer_.valid()) arm_data_timer(t);
    }
  }

  // -- receiver side -------------------------------------------------------
  void on_data(const Frame& f, Seconds t) {
    if (state_ == AssocState::Aborted || state_ == AssocState::Closed) return;
    const std::uint64_t tsn = f.tag;
    if (tsn > cum_recv_ && !recv_buf_.count(tsn)) {
      recv_buf_[tsn] = f.payload_bytes;
      while (true) {
        auto it = recv_buf_.find(cum_recv_ + 1);
        if (it == recv_buf_.end()) break;
        cum_recv_ += 1;
        delivered_bytes_ += it->second;
        if (deliver_) deliver_(it->second, t);
        recv_buf_.erase(it);
      }
    }
    // Immediate SACK, duplicates re-acked. Deferred while channel observed
    // bad so the persistent policy never acks into a cut.
    if (blocked_) {
      sack_pending_ = true;
      return;
    }
    emit_sack(t);
  }

  // -- sender side ---------------------------------------------------------
  void on_sack(const Frame& f, Seconds t) {
    if (state_ == AssocState::Aborted) return;
    const std::uint64_t cum = f.cum_tsn;
    if (cum >= next_tsn_) {
      trace(t, "protocol_violation", cum);
      abort_association(t);
      return;
    }
    cum_ack_ = std::max(cum_ack_, cum);
    // Cumulative removal; first ack of a never-retransmitted chunk gives the
    // RTT sample (Karn's rule keeps retransmissions out of the estimator).
    std::optional<Seconds> sample;
    while (!inflight_.empty() && inflight_.begin()->first <= cum) {
      auto it = inflight_.begin();
      if (!it->second.retransmitted && !it->second.sampled && !sample) {
        sample = t - it->second.sent_at;
      }
      dup_reports_.erase(it->first);
      fast_rtx_done_.erase(it->first);
      inflight_.erase(it);
    }
    for (std::uint64_t g : f.gap_tsns) {
      auto it = inflight_.find(g);
      if (it == inflight_.end()) continue;
      if (!it->second.retransmitted && !it->second.sampled && !sample) {
        sample = t - it->second.sent_at;
      }
      it->second.sampled = true;
      dup_reports_.erase(g);
    }
    if (sample) update_rto(*sample);

    // Four-SACK rule: a gap-reporting SACK counts one report against every
    // inflight TSN below its highest reported TSN; the fourth report
    // triggers exactly one fast retransmission.
    if (!f.gap_tsns.empty()) {
      const std::uint64_t highest = f.gap_tsns.back();
      std::set<std::uint64_t> gaps(f.gap_tsns.begin(), f.gap_tsns.end());
      for (auto& [tsn, chunk] : inflight_) {
        if (tsn >= highest || gaps.count(tsn)) continue;
        const int reports = ++dup_reports_[tsn];
        if (reports >= 4 && !fast_rtx_done_.count(tsn)) {
          fast_rtx_done_.insert(tsn);
          trace(t, "fast_rtx", tsn);
          retransmit(tsn, t);
        }
      }
    }

    if (inflight_.empty()) {
      cancel_data_timer();
      rtx_pending_ = false;
    } else if (blocked_) {
      // Timers stay frozen during observed bad; a restart becomes a fresh
      // full RTO worth of remaining time.
      cancel_data_timer();
      data_frozen_ = rto_.rto;
    } else {
      arm_data_timer(t);
    }
    if (state_ == AssocState::ShutdownPending && drained()) {
      begin_shutdown_send(t);
    }
    try_send(t);
  }

  void update_rto(Seconds sample) {
    if (!rto_.srtt) {
      rto_.srtt = sample;
      rto_.rttvar = sample / 2;
    } else {
      rto_.rttvar = 0.75 * *rto_.rttvar + 0.25 * std::abs(*rto_.srtt - sample);
      rto_.srtt = 0.875 * *rto_.srtt + 0.125 * sample;
    }
    rto_.rto = clamp_rto(*rto_.srtt + 4 * *rto_.rttvar);
  }

  void on_rto_expiry(Seconds t) {
    data_timer_ = {};
    if (inflight_.empty()) return;
    trace(t, "rto_expiry", inflight_.begin()->first);
    if (mode_ == PolicyMode::ExtendedPersistent && blocked_) {
      // Ignore this expiration until the next favorable change: no backoff,
      // retransmission deferred.
      rtx_pending_ = true;
      return;
    }
    rto_.rto = clamp_rto(rto_.rto * cfg_.backoff_multiplier);
    retransmit(inflight_.begin()->first, t);
    arm_data_timer(t);
  }

  // -- teardown --------------------------------------------------------------
  void shutdown(Seconds t) {
    if (state_ != AssocState::Established) {
      trace(t, "shutdown_rejected", 0);
      return;
    }
    set_state(t, AssocState::ShutdownPending);
    if (drained()) begin_shutdown_send(t);
  }

  void on_shutdown_msg(FrameKind kind, Seconds t) {
    switch (kind) {
      case FrameKind::Shutdown:
        if (state_ == AssocState::Established ||
            state_ == AssocState::ShutdownPending) {
          set_state(t, AssocState::ShutdownAckSent);
          t2_value_ = rto_.rto;
          t2_attempts_ = 0;
          emit_shutdown_frame(FrameKind::ShutdownAck, t);
          arm_t2_or_freeze(t);
        } else if (state_ == AssocState::ShutdownAckSent) {
          emit_shutdown_frame(FrameKind::ShutdownAck, t);
        }
        break;
      case FrameKind::ShutdownAck:
        if (state_ == AssocState::ShutdownSent) {
          cancel_t2_timer();
          emit_complete(t);
          set_state(t, AssocState::Closed);
        } else if (state_ == AssocState::Closed) {
          emit_complete(t);  // first COMPLETE was lost; peer is still waiting
        }
        break;
      case FrameKind::ShutdownComplete:
        if (state_ == AssocState::ShutdownAckSent) {
          cancel_t2_timer();
          set_state(t, AssocState::Closed);
        }
        break;
      default:
        break;
    }
  }

  void on_heartbeat(const Frame& f, Seconds t) {
    if (state_ == AssocState::Aborted) return;
    if (blocked_) return;  // silent during observed bad; probe will repeat
    Frame ack;
    ack.kind = FrameKind::HeartbeatAck;
    ack.tag = f.tag;
    emit_control(ack, t);
  }

  void on_heartbeat_ack(const Frame&, Seconds t) { trace(t, "hb_ack", 0); }

  void on_frame(const Frame& f, Seconds t) {
    switch (f.kind) {
      case FrameKind::Data: on_data(f, t); break;
      case FrameKind::Sack: on_sack(f, t); break;
      case FrameKind::Heartbeat: on_heartbeat(f, t); break;
      case FrameKind::HeartbeatAck: on_heartbeat_ack(f, t); break;
      case FrameKind::Shutdown:
      case FrameKind::ShutdownAck:
      case FrameKind::ShutdownComplete: on_shutdown_msg(f.kind, t); break;
      case FrameKind::DsdvUpdate: break;  // routing traffic, not ours
    }
  }

  // Routing change: retry anything held for want of a route.
  void on_route_change(Seconds t) {
    if (state_ == AssocState::Aborted || blocked_) return;
    if (!lookup_(peer_)) return;
    if (t2_rtx_pending_) {
      t2_rtx_pending_ = false;
      emit_shutdown_frame(shutdown_frame_kind(), t);
      if (!t2_timer_.valid()) arm_t2_timer(t);
    }
    if (rtx_pending_ && !inflight_.empty()) {
      rtx_pending_ = false;
      retransmit(inflight_.begin()->first, t);
      if (!data_timer_.valid()) arm_data_timer(t);
    }
    try_send(t);
  }

  // Persistent-policy hook: freeze on bad, thaw and replay on good.
  void on_channel(Seconds, ChannelState observed) {
    if (mode_ != PolicyMode::ExtendedPersistent) return;
    const Seconds now = kernel_.now();
    if (observed == ChannelState::Bad) {
      if (blocked_) return;
      blocked_ = true;
      freeze(data_timer_, data_frozen_, now);
      freeze(t2_timer_, t2_frozen_, now);
      freeze(hb_timer_, hb_frozen_, now);
      return;
    }
    if (!blocked_) return;
    blocked_ = false;
    trace(now, "resume", 0);
    // Shutdown family first.
    if (complete_pending_) {
      complete_pending_ = false;
      emit_complete(now);
    }
    if (t2_rtx_pending_) {
      t2_rtx_pending_ = false;
      t2_frozen_.reset();
      emit_shutdown_frame(shutdown_frame_kind(), now);
      arm_t2_timer(now);
    } else if (t2_frozen_) {
      arm_t2_timer_in(now, *t2_frozen_);
      t2_frozen_.reset();
    }
    if (sack_pending_) {
      sack_pending_ = false;
      emit_sack(now);
    }
    // Then data retransmissions, with the un-doubled timer value.
    if (rtx_pending_) {
      rtx_pending_ = false;
      data_frozen_.reset();
      if (!inflight_.empty()) {
        retransmit(inflight_.begin()->first, now);
        arm_data_timer(now);
      }
    } else if (data_frozen_) {
      arm_data_timer_in(now, *data_frozen_);
      data_frozen_.reset();
    }
    if (hb_frozen_) {
      arm_heartbeat(now + *hb_frozen_);
      hb_frozen_.reset();
    }
    // Finally new data.
    try_send(now);
  }

 private:
  struct Chunk {
    std::uint32_t bytes = 0;
    Seconds sent_at = 0;
    bool retransmitted = false;
    bool sampled = false;
  };

  bool drained() const { return send_queue_.empty() && inflight_.empty(); }

  Seconds clamp_rto(Seconds v) const {
    return std::min(std::max(v, cfg_.rto_min), cfg_.rto_max);
  }

  FrameKind shutdown_frame_kind() const {
    return state_ == AssocState::ShutdownAckSent ? FrameKind::ShutdownAck
                                                 : FrameKind::Shutdown;
  }

  void set_state(Seconds t, AssocState s) {
    state_ = s;
    state_log_.emplace_back(t, s);
    trace(t, "state", 0);
  }

  void abort_association(Seconds t) {
    cancel_data_timer();
    cancel_t2_timer();
    if (hb_timer_.valid()) {
      kernel_.cancel(hb_timer_);
      hb_timer_ = {};
    }
    set_state(t, AssocState::Aborted);
  }

  // -- emissions -----------------------------------------------------------
  void emit_data(std::uint64_t tsn, std::uint32_t bytes, NodeId hop,
                 Seconds t, bool is_rtx) {
    Frame f;
    f.kind = FrameKind::Data;
    f.src = local_;
    f.dst = hop;
    f.flow_src = local_;
    f.flow_dst = peer_;
    f.payload_bytes = bytes;
    f.total_bytes = frame_size(sizes_, FrameKind::Data, bytes);
    f.tag = tsn;
    last_known_hop_ = hop;
    last_emission_ = t;
    trace(t, is_rtx ? "tx_data_rtx" : "tx_data", tsn);
    send_(std::move(f));
  }

  void retransmit(std::uint64_t tsn, Seconds t) {
    auto it = inflight_.find(tsn);
    if (it == inflight_.end()) return;
    if (blocked_) {
      rtx_pending_ = true;
      return;
    }
    const auto hop = lookup_(peer_);
    if (!hop) {
      rtx_pending_ = true;  // held until the routing table heals
      return;
    }
    it->second.retransmitted = true;
    it->second.sent_at = t;
    emit_data(tsn, it->second.bytes, *hop, t, true);
  }

  void emit_sack(Seconds t) {
    Frame f;
    f.kind = FrameKind::Sack;
    f.cum_tsn = cum_recv_;
    f.tag = cum_recv_;
    for (const auto& [tsn, bytes] : recv_buf_) f.gap_tsns.push_back(tsn);
    const auto hop = lookup_(peer_);
    if (!hop) return;  // repaired by the SACK for the next arrival
    last_known_hop_ = *hop;
    finish_control(std::move(f), *hop, t);
  }

  // Control frames ride a stale next hop when the table has expired: probes
  // are exactly the traffic that must keep flowing to be counted lost.
  void emit_control(Frame f, Seconds t) {
    const auto hop = lookup_(peer_);
    if (hop) last_known_hop_ = *hop;
    finish_control(std::move(f), hop ? *hop : last_known_hop_, t);
  }

  void finish_control(Frame f, NodeId hop, Seconds t) {
    f.src = local_;
    f.dst = hop;
    f.flow_src = local_;
    f.flow_dst = peer_;
    f.total_bytes = frame_size(sizes_, f.kind, 0);
    last_emission_ = t;
    trace(t, std::string("tx_") + to_string(f.kind), f.tag);
    send_(std::move(f));
  }

  void emit_shutdown_frame(FrameKind kind, Seconds t) {
    if (blocked_) {
      t2_rtx_pending_ = true;
      return;
    }
    const auto hop = lookup_(peer_);
    if (!hop) {
      t2_rtx_pending_ = true;
      return;
    }
    last_known_hop_ = *hop;
    Frame f;
    f.kind = kind;
    f.tag = static_cast<std::uint64_t>(t2_attempts_);
    finish_control(std::move(f), *hop, t);
  }

  void emit_complete(Seconds t) {
    if (blocked_) {
      complete_pending_ = true;
      return;
    }
    Frame f;
    f.kind = FrameKind::ShutdownComplete;
    emit_control(std::move(f), t);
  }

  void begin_shutdown_send(Seconds t) {
    set_state(t, AssocState::ShutdownSent);
    t2_value_ = rto_.rto;
    t2_attempts_ = 0;
    emit_shutdown_frame(FrameKind::Shutdown, t);
    arm_t2_or_freeze(t);
  }

  void arm_t2_or_freeze(Seconds t) {
    if (blocked_) {
      cancel_t2_timer();
      t2_frozen_ = t2_value_;
    } else {
      arm_t2_timer(t);
    }
  }

  // -- timers ----------------------------------------------------------------
  void arm_data_timer(Seconds now) { arm_data_timer_in(now, rto_.rto); }

  void arm_data_timer_in(Seconds now, Seconds in) {
    cancel_data_timer();
    data_timer_ = kernel_.schedule(now + in, kTransportPriority,
                                   [this] { on_rto_expiry(kernel_.now()); });
  }

  void cancel_data_timer() {
    if (data_timer_.valid()) {
      kernel_.cancel(data_timer_);
      data_timer_ = {};
    }
  }

  void arm_t2_timer(Seconds now) { arm_t2_timer_in(now, t2_value_); }

  void arm_t2_timer_in(Seconds now, Seconds in) {
    cancel_t2_timer();
    t2_timer_ = kernel_.schedule(now + in, kTransportPriority,
                                 [this] { on_t2_expiry(kernel_.now()); });
  }

  void cancel_t2_timer() {
    if (t2_timer_.valid()) {
      kernel_.cancel(t2_timer_);
      t2_timer_ = {};
    }
  }

  void on_t2_expiry(Seconds t) {
    t2_timer_ = {};
    if (state_ != AssocState::ShutdownSent &&
        state_ != AssocState::ShutdownAckSent) {
      return;
    }
    if (mode_ == PolicyMode::ExtendedPersistent && blocked_) {
      t2_rtx_pending_ = true;  // defer, no attempt burned, no backoff
      return;
    }
    t2_attempts_ += 1;
    trace(t, "t2_expiry", static_cast<std::uint64_t>(t2_attempts_));
    if (t2_attempts_ > cfg_.max_retrans) {
      abort_association(t);
      return;
    }
    t2_value_ = clamp_rto(t2_value_ * cfg_.backoff_multiplier);
    emit_shutdown_frame(shutdown_frame_kind(), t);
    arm_t2_timer(t);
  }

  void arm_heartbeat(Seconds at) {
    if (hb_timer_.valid()) kernel_.cancel(hb_timer_);
    hb_timer_ = kernel_.schedule(at, kTransportPriority,
                                 [this] { heartbeat_cycle(kernel_.now()); });
  }

  void heartbeat_cycle(Seconds t) {
    hb_timer_ = {};
    if (state_ == AssocState::Aborted || state_ == AssocState::Closed) return;
    if (t - last_emission_ >= cfg_.heartbeat_interval - 1e-9) {
      if (state_ == AssocState::Established) {
        Frame f;
        f.kind = FrameKind::Heartbeat;
        f.tag = ++hb_seq_;
        emit_control(std::move(f), t);
      }
      arm_heartbeat(t + cfg_.heartbeat_interval);
    } else {
      arm_heartbeat(last_emission_ + cfg_.heartbeat_interval);
    }
  }

  void freeze(EventHandle& timer, std::optional<Seconds>& slot, Seconds now) {
    if (!timer.valid()) return;
    const Seconds deadline = kernel_.deadline_of(timer);
    slot = std::max(0.0, deadline - now);
    kernel_.cancel(timer);
    timer = {};
  }

  void trace(Seconds t, const std::string& event, std::uint64_t tsn) {
    if (!tracing_) return;
    trace_.push_back({t, event, state_, tsn, rto_.rto});
  }

  SimKernel& kernel_;
  SctpConfig cfg_;
  SizeTable sizes_;
  NodeId local_;
  NodeId peer_;
  PolicyMode mode_;
  LookupFn lookup_;
  SendFn send_;
  DeliverFn deliver_;

  AssocState state_ = AssocState::Established;
  std::uint64_t next_tsn_ = 1;
  std::uint64_t cum_ack_ = 0;
  std::deque<std::uint32_t> send_queue_;
  std::map<std::uint64_t, Chunk> inflight_;
  RtoState rto_;
  std::map<std::uint64_t, int> dup_reports_;
  std::set<std::uint64_t> fast_rtx_done_;
  int t2_attempts_ = 0;
  Seconds t2_value_ = 0;

  std::uint64_t cum_recv_ = 0;
  std::map<std::uint64_t, std::uint32_t> recv_buf_;
  std::uint64_t delivered_bytes_ = 0;
  std::uint64_t dropped_payloads_ = 0;
  std::uint64_t hb_seq_ = 0;

  EventHandle data_timer_{};
  EventHandle t2_timer_{};
  EventHandle hb_timer_{};
  Seconds last_emission_ = 0;
  NodeId last_known_hop_ = 0;

  bool blocked_ = false;
  bool rtx_pending_ = false;
  bool t2_rtx_pending_ = false;
  bool complete_pending_ = false;
  bool sack_pending_ = false;
  std::optional<Seconds> data_frozen_;
  std::optional<Seconds> t2_frozen_;
  std::optional<Seconds> hb_frozen_;

  bool tracing_ = false;
  std::vector<TraceEntry> trace_;
  std::vector<std::pair<Seconds, AssocState>> state_log_;
};

}  // namespace cutsim
