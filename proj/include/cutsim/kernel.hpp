#pragma once

// Deterministic single-threaded discrete-event engine.
//
// Events fire in strict (time, priority, insertion sequence) order. Handles
// stay valid until the event fires or is canceled and are never reused
// within a run, so cancel() is race-free by construction.

#include <cstdint>
#include <functional>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cutsim/types.hpp"

namespace cutsim {

struct EventHandle {
  std::uint64_t id = 0;
  bool valid() const { return id != 0; }
};

class SimKernel {
 public:
  using Action = std::function<void()>;

  EventHandle schedule(Seconds at, int priority, Action action) {
    if (at < now_) {
      throw ConfigError("schedule: event at t=" + std::to_string(at) +
                        " is in the past (now=" + std::to_string(now_) + ")");
    }
    const std::uint64_t id = next_id_++;
    queue_.push(Entry{at, priority, next_seq_++, id, std::move(action)});
    live_.emplace(id, at);
    return EventHandle{id};
  }

  // True iff the event was live and is now removed; canceled events never fire.
  bool cancel(EventHandle h) { return live_.erase(h.id) > 0; }

  // Fire time of a still-pending event (for freeze/restore bookkeeping).
  Seconds deadline_of(EventHandle h) const {
    auto it = live_.find(h.id);
    if (it == live_.end()) {
      throw SimError("deadline_of: event is not pending");
    }
    return it->second;
  }

  // Fires every event with fire time <= until, then advances the clock to
  // until. Returns the number of events fired.
  std::size_t run(Seconds until) {
    if (until < now_) {
      throw ConfigError("run: until=" + std::to_string(until) +
                        " precedes now=" + std::to_string(now_));
    }
    std::size_t fired = 0;
    while (!queue_.empty() && queue_.top().at <= until) {
      Entry ev = std::move(const_cast<Entry&>(queue_.top()));
      queue_.pop();
      if (live_.erase(ev.id) == 0) {
        continue;  // canceled
      }
      now_ = ev.at;
      ev.action();
      ++fired;
    }
    now_ = until;
    return fired;
  }

  Seconds now() const { return now_; }
  std::size_t pending() const { return live_.size(); }

 private:
  struct Entry {
    Seconds at;
    int priority;
    std::uint64_t seq;
    std::uint64_t id;
    Action action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at != b.at) return a.at > b.at;
      if (a.priority != b.priority) return a.priority > b.priority;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  std::unordered_map<std::uint64_t, Seconds> live_;
  Seconds now_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_id_ = 1;
};

}  // namespace cutsim
