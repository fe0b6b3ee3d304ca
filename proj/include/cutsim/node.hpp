#pragma once

// A simulated station: one DSDV engine, optionally one transport endpoint,
// and the glue between them — frame dispatch, multi-hop forwarding with a
// retry queue, and the per-layer channel hooks the policy binder subscribes.

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "cutsim/dsdv.hpp"
#include "cutsim/frame.hpp"
#include "cutsim/kernel.hpp"
#include "cutsim/link.hpp"
#include "cutsim/sctp.hpp"
#include "cutsim/types.hpp"

namespace cutsim {

class Node {
 public:
  Node(SimKernel& kernel, NodeId id, Link& link, const DsdvConfig& dcfg,
       const SizeTable& sizes)
      : kernel_(kernel),
        id_(id),
        link_(link),
        sizes_(sizes),
        dsdv_(kernel, id, dcfg,
              [this](const UpdateMessage& m) { broadcast_update(m); }) {
    link_.register_node(id, [this](const Frame& f, Seconds t) {
      on_frame(f, t);
    });
    dsdv_.add_route_listener([this](Seconds t) { on_route_change(t); });
  }

  NodeId id() const { return id_; }
  DsdvNode& dsdv() { return dsdv_; }
  const DsdvNode& dsdv() const { return dsdv_; }
  Association* assoc() { return assoc_.get(); }

  void set_neighbors(std::vector<NodeId> neighbors) {
    link_.set_neighbors(id_, neighbors);
    dsdv_.set_neighbors(std::move(neighbors));
  }

  Association& make_association(NodeId peer, const SctpConfig& cfg,
                                PolicyMode mode) {
    assoc_ = std::make_unique<Association>(
        kernel_, cfg, sizes_, id_, peer, mode,
        [this](NodeId dest) { return dsdv_.lookup_next_hop(dest); },
        [this](Frame f) { link_.send(std::move(f)); });
    return *assoc_;
  }

  // Channel hooks, split per layer so the binder can order routing resume
  // actions ahead of transport ones.
  void on_channel_routing(Seconds transition_at, ChannelState s) {
    dsdv_.on_channel(transition_at, s);
    if (s == ChannelState::Good) flush_forward_queue();
  }

  void on_channel_transport(Seconds transition_at, ChannelState s) {
    if (assoc_) assoc_->on_channel(transition_at, s);
  }

 private:
  void broadcast_update(const UpdateMessage& m) {
    Frame f;
    f.kind = FrameKind::DsdvUpdate;
    f.src = id_;
    f.dst = kBroadcast;
    f.tag = ++update_seq_;
    f.full_dump = m.full_dump;
    f.routes = m.items;
    f.total_bytes =
        frame_size(sizes_, FrameKind::DsdvUpdate,
                   static_cast<std::uint32_t>(m.items.size()));
    link_.send(std::move(f));
  }

  void on_frame(const Frame& f, Seconds t) {
    if (f.kind == FrameKind::DsdvUpdate) {
      UpdateMessage m{f.src, f.full_dump, f.routes};
      auto changed = dsdv_.process_update(m, f.src, t);
      if (!changed.empty()) dsdv_.schedule_incremental(changed, t);
      return;
    }
    if (f.flow_dst == id_) {
      if (assoc_) assoc_->on_frame(f, t);
      return;
    }
    forward(f, t);
  }

  void forward(Frame f, Seconds) {
    const auto hop = dsdv_.lookup_next_hop(f.flow_dst);
    if (!hop || dsdv_.suspended()) {
      forward_queue_.push_back(std::move(f));
      return;
    }
    f.src = id_;
    f.dst = *hop;
    link_.send(std::move(f));
  }

  void on_route_change(Seconds t) {
    flush_forward_queue();
    if (assoc_) assoc_->on_route_change(t);
  }

  void flush_forward_queue() {
    if (dsdv_.suspended() || forward_queue_.empty()) return;
    std::vector<Frame> held;
    held.swap(forward_queue_);
    for (auto& f : held) forward(std::move(f), kernel_.now());
  }

  SimKernel& kernel_;
  NodeId id_;
  Link& link_;
  SizeTable sizes_;
  DsdvNode dsdv_;
  std::unique_ptr<Association> assoc_;
  std::vector<Frame> forward_queue_;
  std::uint64_t update_seq_ = 0;
};

}  // namespace cutsim
