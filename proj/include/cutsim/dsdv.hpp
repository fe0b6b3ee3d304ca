#pragma once

// DSDV routing engine: sequence-numbered distance-vector tables, periodic
// full dumps, settling-gated incremental updates, neighbor expiry, and the
// persistent-mode suspension of all timer-driven behavior during a bad
// channel. Even sequence numbers originate at the destination; odd ones mark
// broken routes with infinite metric.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <utility>
#include <vector>

#include "cutsim/channel.hpp"
#include "cutsim/frame.hpp"
#include "cutsim/kernel.hpp"
#include "cutsim/types.hpp"

namespace cutsim {

inline constexpr std::uint32_t kInfiniteMetric =
    std::numeric_limits<std::uint32_t>::max();

struct DsdvConfig {
  Seconds periodic_interval = 15;
  Seconds settling_time = 6;
  Seconds neighbor_timeout = 45;
};

struct RouteEntry {
  NodeId dest = 0;
  NodeId next_hop = 0;
  std::uint32_t metric = 0;
  std::uint32_t seqno = 0;
  Seconds installed_at = 0;
  Seconds advertise_after = 0;
};

struct UpdateMessage {
  NodeId origin = 0;
  bool full_dump = false;
  std::vector<RouteAdvert> items;
};

class DsdvNode {
 public:
  using EmitFn = std::function<void(const UpdateMessage&)>;
  using RouteChangeFn = std::function<void(Seconds)>;

  DsdvNode(SimKernel& kernel, NodeId id, DsdvConfig cfg, EmitFn emit)
      : kernel_(kernel), id_(id), cfg_(cfg), emit_(std::move(emit)) {
    if (cfg.periodic_interval <= 0 || cfg.settling_time < 0 ||
        cfg.neighbor_timeout <= 0) {
      throw ConfigError("dsdv: intervals must be positive");
    }
    table_[id_] = RouteEntry{id_, id_, 0, self_seqno_, 0, 0};
  }

  NodeId id() const { return id_; }

  void set_neighbors(std::vector<NodeId> neighbors) {
    neighbors_.assign(neighbors.begin(), neighbors.end());
  }

  // Fired after any table change; transport uses it to retry held chunks.
  void add_route_listener(RouteChangeFn fn) {
    route_listeners_.push_back(std::move(fn));
  }

  // Installs pre-converged entries so the campaign measures steady-state cut
  // response rather than cold-start convergence.
  void warm_start(const std::map<NodeId, std::pair<NodeId, std::uint32_t>>&
                      routes,
                  Seconds t) {
    for (const auto& [dest, hop_metric] : routes) {
      if (dest == id_) continue;
      table_[dest] = RouteEntry{dest, hop_metric.first, hop_metric.second,
                                0, t, t};
    }
    for (NodeId n : neighbors_) last_update_from_[n] = t;
  }

  // Schedules the first periodic dump and arms expiry for known neighbors.
  void start(Seconds t) {
    arm_periodic(t + cfg_.periodic_interval);
    for (const auto& [n, ref] : last_update_from_) arm_expiry(n, ref);
  }

  const std::map<NodeId, RouteEntry>& table() const { return table_; }
  const std::map<NodeId, Seconds>& last_update_from() const {
    return last_update_from_;
  }
  bool suspended() const { return suspended_; }

  std::optional<NodeId> lookup_next_hop(NodeId dest) const {
    auto it = table_.find(dest);
    if (it == table_.end() || it->second.metric == kInfiniteMetric) {
      return std::nullopt;
    }
    return it->second.next_hop;
  }

  // Full dump: bump own seqno by 2 and advertise the whole table.
  UpdateMessage originate_periodic_update(Seconds t) {
    self_seqno_ += 2;
    auto& self = table_[id_];
    self.seqno = self_seqno_;
    self.installed_at = t;
    UpdateMessage msg{id_, true, {}};
    for (const auto& [dest, e] : table_) {
      msg.items.push_back({dest, e.metric, e.seqno});
    }
    // A full dump advertises everything, so nothing is pending anymore.
    clear_pending_incremental();
    emit_(msg);
    arm_periodic(t + cfg_.periodic_interval);
    return msg;
  }

  std::set<NodeId> process_update(const UpdateMessage& msg, NodeId from,
                                  Seconds t) {
    if (std::find(neighbors_.begin(), neighbors_.end(), from) ==
        neighbors_.end()) {
      throw SimError("dsdv: update from non-neighbor " + std::to_string(from));
    }
    last_update_from_[from] = t;
    if (!suspended_) arm_expiry(from, t);

    std::set<NodeId> changed;
    for (const auto& item : msg.items) {
      if (item.dest == id_) {
        // Someone is circulating a broken marker for our own route: reclaim
        // it with a fresh even seqno and advertise straight away.
        if (item.seqno > self_seqno_) {
          self_seqno_ = item.seqno % 2 ? item.seqno + 1 : item.seqno + 2;
          auto& self = table_[id_];
          self.seqno = self_seqno_;
          self.installed_at = t;
          self.advertise_after = t;
          changed.insert(id_);
        }
        continue;
      }
      const std::uint32_t cand_metric =
          item.metric == kInfiniteMetric ? kInfiniteMetric : item.metric + 1;
      auto it = table_.find(item.dest);
      bool adopt = false;
      if (it == table_.end()) {
        adopt = true;
      } else if (item.seqno > it->second.seqno) {
        adopt = true;
      } else if (item.seqno == it->second.seqno &&
                 cand_metric < it->second.metric) {
        adopt = true;
      }
      if (!adopt) continue;
      const bool materially_new =
          it == table_.end() || it->second.next_hop != from ||
          it->second.metric != cand_metric || it->second.seqno != item.seqno;
      table_[item.dest] = RouteEntry{item.dest, from, cand_metric, item.seqno,
                                     t, t + cfg_.settling_time};
      if (materially_new) changed.insert(item.dest);
    }
    if (!changed.empty()) notify_route_change(t);
    return changed;
  }

  // Coalesces triggered updates behind the settling gate: one pending
  // incremental, firing at the max advertise_after over everything queued.
  void schedule_incremental(const std::set<NodeId>& changed, Seconds t) {
    if (changed.empty()) return;
    pending_.insert(changed.begin(), changed.end());
    if (suspended_) return;  // re-armed on resume
    rearm_incremental(t);
  }

  // Marks every route through the silent neighbor broken and advertises the
  // breakage immediately (significant change bypasses settling).
  std::vector<NodeId> expire_neighbor(NodeId neighbor, Seconds t) {
    std::vector<NodeId> broken;
    for (auto& [dest, e] : table_) {
      if (dest != id_ && e.next_hop == neighbor &&
          e.metric != kInfiniteMetric) {
        e.metric = kInfiniteMetric;
        e.seqno += 1;  // odd: broken-route marker
        e.installed_at = t;
        e.advertise_after = t;
        broken.push_back(dest);
      }
    }
    if (auto it = expiry_events_.find(neighbor); it != expiry_events_.end()) {
      kernel_.cancel(it->second);
      expiry_events_.erase(it);
    }
    if (!broken.empty()) {
      UpdateMessage msg{id_, false, {}};
      for (NodeId dest : broken) {
        const auto& e = table_[dest];
        msg.items.push_back({dest, e.metric, e.seqno});
        pending_.erase(dest);
      }
      emit_(msg);
      if (pending_.empty()) {
        clear_pending_incremental();
      }
      notify_route_change(t);
    }
    return broken;
  }

  // Persistent-mode hook: freeze all timer-driven behavior during Bad, and
  // on Good shift references by the actual bad duration, firing anything
  // whose original deadline already passed (periodic before incremental).
  void on_channel(Seconds transition_at, ChannelState observed) {
    if (observed == ChannelState::Bad) {
      if (suspended_) return;
      suspended_ = true;
      bad_start_ = transition_at;
      incremental_was_armed_ = incremental_event_.valid();
      if (periodic_event_.valid()) {
        kernel_.cancel(periodic_event_);
        periodic_event_ = {};
      }
      if (incremental_event_.valid()) {
        kernel_.cancel(incremental_event_);
        incremental_event_ = {};
      }
      for (auto& [n, h] : expiry_events_) kernel_.cancel(h);
      expiry_events_.clear();
      return;
    }
    if (!suspended_) return;
    suspended_ = false;
    const Seconds d = transition_at - bad_start_;
    const Seconds now = kernel_.now();
    for (auto& [n, ref] : last_update_from_) ref += d;
    for (const auto& [n, ref] : last_update_from_) arm_expiry(n, ref);
    if (periodic_deadline_ <= now) {
      originate_periodic_update(now);
    } else {
      arm_periodic(periodic_deadline_ + d);
    }
    if (!pending_.empty()) {
      if (incremental_was_armed_) {
        if (incremental_gate_ <= now) {
          fire_incremental(now);
        } else {
          incremental_gate_ += d;
          schedule_incremental_event(incremental_gate_);
        }
      } else {
        // Changes adopted from frames still in flight when the cut began.
        rearm_incremental(now);
      }
    }
    incremental_was_armed_ = false;
  }

  void dump_table(Seconds t, std::ostream& out) const {
    for (const auto& [dest, e] : table_) {
      out << t << ',' << id_ << ',' << dest << ',' << e.next_hop << ','
          << (e.metric == kInfiniteMetric ? std::string("inf")
                                          : std::to_string(e.metric))
          << ',' << e.seqno << '\n';
    }
  }

 private:
  void arm_periodic(Seconds at) {
    periodic_deadline_ = at;
    periodic_event_ = kernel_.schedule(at, kRoutingPriority, [this, at] {
      periodic_event_ = {};
      originate_periodic_update(at);
    });
  }

  void arm_expiry(NodeId neighbor, Seconds last_heard) {
    if (auto it = expiry_events_.find(neighbor); it != expiry_events_.end()) {
      kernel_.cancel(it->second);
    }
    const Seconds at = std::max(kernel_.now(), last_heard +
                                                   cfg_.neighbor_timeout);
    expiry_events_[neighbor] =
        kernel_.schedule(at, kRoutingPriority, [this, neighbor, at] {
          expiry_events_.erase(neighbor);
          expire_neighbor(neighbor, at);
        });
  }

  void rearm_incremental(Seconds now) {
    Seconds gate = now;
    for (NodeId dest : pending_) {
      auto it = table_.find(dest);
      if (it != table_.end()) gate = std::max(gate, it->second.advertise_after);
    }
    incremental_gate_ = gate;
    schedule_incremental_event(gate);
  }

  void schedule_incremental_event(Seconds at) {
    if (incremental_event_.valid()) kernel_.cancel(incremental_event_);
    incremental_event_ = kernel_.schedule(at, kRoutingPriority, [this, at] {
      incremental_event_ = {};
      fire_incremental(at);
    });
  }

  void fire_incremental(Seconds) {
    if (pending_.empty()) return;
    UpdateMessage msg{id_, false, {}};
    for (NodeId dest : pending_) {
      auto it = table_.find(dest);
      if (it != table_.end()) {
        msg.items.push_back({dest, it->second.metric, it->second.seqno});
      }
    }
    clear_pending_incremental();
    emit_(msg);
  }

  void clear_pending_incremental() {
    pending_.clear();
    if (incremental_event_.valid()) {
      kernel_.cancel(incremental_event_);
      incremental_event_ = {};
    }
  }

  void notify_route_change(Seconds t) {
    for (auto& fn : route_listeners_) fn(t);
  }

  SimKernel& kernel_;
  NodeId id_;
  DsdvConfig cfg_;
  EmitFn emit_;
  std::vector<NodeId> neighbors_;
  std::map<NodeId, RouteEntry> table_;
  std::map<NodeId, Seconds> last_update_from_;
  std::uint32_t self_seqno_ = 0;
  std::vector<RouteChangeFn> route_listeners_;

  EventHandle periodic_event_{};
  Seconds periodic_deadline_ = 0;
  std::set<NodeId> pending_;
  EventHandle incremental_event_{};
  Seconds incremental_gate_ = 0;
  bool incremental_was_armed_ = false;
  std::map<NodeId, EventHandle> expiry_events_;

  bool suspended_ = false;
  Seconds bad_start_ = 0;
};

}  // namespace cutsim
