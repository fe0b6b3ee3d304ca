#pragma once

// Shared scalar types, event priorities and error categories.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace cutsim {

using Seconds = double;
using NodeId = std::uint32_t;

inline constexpr NodeId kBroadcast = std::numeric_limits<NodeId>::max();

// Priority bands for events firing at the same instant. Lower fires first.
// Resume contract at a channel transition: observation probes, then the
// channel notification, then routing actions, then transport actions, then
// new-data sends, then frame deliveries, then application activity.
enum EventPriority : int {
  kProbePriority = 0,
  kChannelPriority = 1,
  kRoutingPriority = 2,
  kTransportPriority = 3,
  kSendPriority = 4,
  kDeliveryPriority = 5,
  kAppPriority = 6,
};

// Retransmission-timeout policy under comparison: classic exponential
// backoff versus suspension of timer-driven emissions during bad channel.
enum class PolicyMode : std::uint8_t { Traditional, ExtendedPersistent };

inline const char* to_string(PolicyMode m) {
  return m == PolicyMode::Traditional ? "traditional" : "persistent";
}

// Invalid setup or contract violation detected before/at scheduling time.
// The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Internal inconsistency while a simulation is running. Exit code 2.
class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cutsim
