#pragma once

// Simplified link layer. A frame handed to send() goes on the air as soon as
// its source transmitter is free; the outcome is a pure function of channel
// state at that instant (a cut mid-frame does not retroactively lose it).
// Delivery lands one serialization delay later. Broadcast frames reach every
// neighbor of the source, or are lost as a unit.

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <utility>
#include <vector>

#include "cutsim/channel.hpp"
#include "cutsim/frame.hpp"
#include "cutsim/kernel.hpp"
#include "cutsim/types.hpp"

namespace cutsim {

class Link {
 public:
  using DeliverFn = std::function<void(const Frame&, Seconds)>;
  using EmissionHook = std::function<void(const Frame&, TxOutcome, Seconds)>;

  Link(SimKernel& kernel, const CutSchedule& schedule, double bandwidth_bps)
      : kernel_(kernel), schedule_(schedule), bandwidth_bps_(bandwidth_bps) {
    if (bandwidth_bps <= 0) throw ConfigError("link: bandwidth must be > 0");
  }

  void register_node(NodeId id, DeliverFn deliver) {
    nodes_[id] = std::move(deliver);
  }

  void set_neighbors(NodeId id, std::vector<NodeId> neighbors) {
    neighbors_[id] = std::move(neighbors);
  }

  const std::vector<NodeId>& neighbors(NodeId id) const {
    static const std::vector<NodeId> none;
    auto it = neighbors_.find(id);
    return it == neighbors_.end() ? none : it->second;
  }

  void add_emission_hook(EmissionHook h) {
    hooks_.push_back(std::move(h));
  }

  void set_emission_log(std::ostream* log) { log_ = log; }

  Seconds tx_delay(std::uint32_t total_bytes) const {
    return static_cast<double>(total_bytes) * 8.0 / bandwidth_bps_;
  }

  // Queues f on the source transmitter; emits now if it is idle.
  void send(Frame f) {
    const Seconds now = kernel_.now();
    Seconds air = busy_until_.count(f.src) ? busy_until_[f.src] : 0.0;
    if (air < now) air = now;
    busy_until_[f.src] = air + tx_delay(f.total_bytes);
    if (air <= now) {
      transmit(f, now);
    } else {
      kernel_.schedule(air, kSendPriority,
                       [this, f = std::move(f), air] { transmit(f, air); });
    }
  }

  // The on-air instant: decides delivery vs loss from oracle channel state.
  TxOutcome transmit(const Frame& f, Seconds t) {
    const TxOutcome outcome = schedule_.state_at(t) == ChannelState::Bad
                                  ? TxOutcome::Lost
                                  : TxOutcome::Delivered;
    for (auto& h : hooks_) h(f, outcome, t);
    if (log_) {
      *log_ << t << ',' << f.src << ','
            << (f.dst == kBroadcast ? std::string("broadcast")
                                    : std::to_string(f.dst))
            << ',' << to_string(f.kind) << ',' << f.total_bytes << ','
            << to_string(outcome) << '\n';
    }
    if (outcome == TxOutcome::Delivered) {
      const Seconds at = t + tx_delay(f.total_bytes);
      if (f.dst == kBroadcast) {
        for (NodeId n : neighbors(f.src)) deliver_at(n, f, at);
      } else {
        deliver_at(f.dst, f, at);
      }
    }
    return outcome;
  }

 private:
  void deliver_at(NodeId dst, const Frame& f, Seconds at) {
    auto it = nodes_.find(dst);
    if (it == nodes_.end()) {
      throw ConfigError("link: frame addressed to unknown node " +
                        std::to_string(dst));
    }
    kernel_.schedule(at, kDeliveryPriority,
                     [fn = &it->second, f, at] { (*fn)(f, at); });
  }

  SimKernel& kernel_;
  const CutSchedule& schedule_;
  double bandwidth_bps_;
  std::map<NodeId, DeliverFn> nodes_;
  std::map<NodeId, std::vector<NodeId>> neighbors_;
  std::vector<EmissionHook> hooks_;
  std::ostream* log_ = nullptr;
  std::map<NodeId, Seconds> busy_until_;
};

}  // namespace cutsim
