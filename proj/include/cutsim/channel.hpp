#pragma once

// Two-state wireless channel under the randomly-alternated cut model, plus
// the environment subsystem that publishes state transitions to subscribed
// layers with a configurable detection latency.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "cutsim/kernel.hpp"
#include "cutsim/rng.hpp"
#include "cutsim/types.hpp"

namespace cutsim {

enum class ChannelState : std::uint8_t { Good, Bad };

inline const char* to_string(ChannelState s) {
  return s == ChannelState::Good ? "good" : "bad";
}

struct Transition {
  Seconds at;
  ChannelState state;  // state entered at this instant
};

// Alternating Bad/Good intervals starting at start_of_cuts; the channel is
// Good on [0, start_of_cuts). A transition instant belongs to the new state.
struct CutSchedule {
  Seconds start_of_cuts = 200.0;
  Seconds horizon = 2000.0;
  std::vector<Transition> transitions;

  ChannelState state_at(Seconds t) const {
    ChannelState s = ChannelState::Good;
    // last transition with at <= t
    std::size_t lo = 0, hi = transitions.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (transitions[mid].at <= t) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    if (lo > 0) s = transitions[lo - 1].state;
    return s;
  }

  std::optional<Transition> next_transition_after(Seconds t) const {
    for (const auto& tr : transitions) {
      if (tr.at > t) return tr;
    }
    return std::nullopt;
  }

  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    auto mix = [&h](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xff;
        h *= 0x100000001b3ULL;
      }
    };
    auto bits = [](double d) {
      std::uint64_t u;
      static_assert(sizeof(u) == sizeof(d));
      __builtin_memcpy(&u, &d, sizeof(u));
      return u;
    };
    mix(bits(start_of_cuts));
    mix(bits(horizon));
    for (const auto& tr : transitions) {
      mix(bits(tr.at));
      mix(tr.state == ChannelState::Bad ? 1 : 0);
    }
    return h;
  }
};

// Interval durations drawn uniform over integer seconds in [d_min, d_max];
// generation stops at the first transition that would land at or past the
// horizon.
inline CutSchedule build_cut_schedule(Rng& rng, Seconds start, Seconds d_min,
                                      Seconds d_max, Seconds horizon) {
  if (d_min <= 0 || d_min > d_max) {
    throw ConfigError("cut schedule: need 0 < d_min <= d_max");
  }
  if (start < 0 || start >= horizon) {
    // start past the horizon is legal: the channel just stays Good.
    if (start < 0) throw ConfigError("cut schedule: start must be >= 0");
  }
  CutSchedule s;
  s.start_of_cuts = start;
  s.horizon = horizon;
  Seconds t = start;
  ChannelState next = ChannelState::Bad;
  while (t < horizon) {
    s.transitions.push_back({t, next});
    t += static_cast<Seconds>(
        rng.uniform_int(static_cast<std::int64_t>(d_min),
                        static_cast<std::int64_t>(d_max)));
    next = next == ChannelState::Bad ? ChannelState::Good : ChannelState::Bad;
  }
  return s;
}

inline void write_schedule_csv(const CutSchedule& s, std::ostream& out) {
  out << "time,new_state\n";
  for (const auto& tr : s.transitions) {
    out << tr.at << ',' << to_string(tr.state) << '\n';
  }
}

// Publishes each transition to subscribers at transition time plus the
// detection latency. Subscribers see the actual transition time, in
// registration order. With zero latency a subscriber observes oracle truth.
class EnvSubsystem {
 public:
  using Listener = std::function<void(Seconds transition_at, ChannelState)>;

  EnvSubsystem(SimKernel& kernel, const CutSchedule& schedule,
               Seconds detect_latency)
      : kernel_(kernel), schedule_(schedule), detect_latency_(detect_latency) {
    if (detect_latency < 0) {
      throw ConfigError("detect_latency must be >= 0");
    }
  }

  void subscribe(Listener cb) { subscribers_.push_back(std::move(cb)); }
  std::size_t subscriber_count() const { return subscribers_.size(); }
  const CutSchedule& schedule() const { return schedule_; }

  // A policy may be bound to an environment exactly once.
  void mark_bound() {
    if (bound_) throw ConfigError("policy already bound to this environment");
    bound_ = true;
  }
  bool bound() const { return bound_; }

  void publish_transitions() {
    if (subscribers_.empty()) return;
    for (const auto& tr : schedule_.transitions) {
      kernel_.schedule(tr.at + detect_latency_, kChannelPriority,
                       [this, tr] {
                         for (auto& cb : subscribers_) cb(tr.at, tr.state);
                       });
    }
  }

 private:
  SimKernel& kernel_;
  const CutSchedule& schedule_;
  Seconds detect_latency_;
  std::vector<Listener> subscribers_;
  bool bound_ = false;
};

}  // namespace cutsim
