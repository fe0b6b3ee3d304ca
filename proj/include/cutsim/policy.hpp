#pragma once

// Policy binding. Traditional leaves the protocol stack blind to channel
// state: timers back off on their own. Extended-persistent subscribes every
// node's routing layer first and transport layer second, so at a transition
// instant routing resume actions (table repair, pending updates) run before
// transport resume actions (retransmission, thawed timers).

#include <vector>

#include "cutsim/channel.hpp"
#include "cutsim/node.hpp"
#include "cutsim/types.hpp"

namespace cutsim {

inline void bind_policy(PolicyMode mode, EnvSubsystem& env,
                        std::vector<Node*> nodes) {
  env.mark_bound();
  if (mode == PolicyMode::Traditional) return;
  for (Node* n : nodes) {
    env.subscribe([n](Seconds t, ChannelState s) {
      n->on_channel_routing(t, s);
    });
  }
  for (Node* n : nodes) {
    env.subscribe([n](Seconds t, ChannelState s) {
      n->on_channel_transport(t, s);
    });
  }
}

}  // namespace cutsim
