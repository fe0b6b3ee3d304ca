#pragma once

// On-air frame model and per-kind size accounting. Sizes approximate RFC 2960
// chunk layouts plus a network header; every value can be overridden.

#include <cstdint>
#include <vector>

#include "cutsim/types.hpp"

namespace cutsim {

enum class FrameKind : std::uint8_t {
  Data,
  Sack,
  Heartbeat,
  HeartbeatAck,
  Shutdown,
  ShutdownAck,
  ShutdownComplete,
  DsdvUpdate,
};

inline const char* to_string(FrameKind k) {
  switch (k) {
    case FrameKind::Data: return "DATA";
    case FrameKind::Sack: return "SACK";
    case FrameKind::Heartbeat: return "HEARTBEAT";
    case FrameKind::HeartbeatAck: return "HEARTBEAT_ACK";
    case FrameKind::Shutdown: return "SHUTDOWN";
    case FrameKind::ShutdownAck: return "SHUTDOWN_ACK";
    case FrameKind::ShutdownComplete: return "SHUTDOWN_COMPLETE";
    case FrameKind::DsdvUpdate: return "DSDV_UPDATE";
  }
  return "?";
}

struct SizeTable {
  std::uint32_t data_overhead = 48;   // common header + data chunk + network
  std::uint32_t sack = 64;
  std::uint32_t heartbeat = 56;       // and its ack
  std::uint32_t shutdown = 40;        // whole shutdown family
  std::uint32_t dsdv_header = 20;
  std::uint32_t dsdv_per_entry = 12;
};

// For Data, the argument is the payload byte count; for DsdvUpdate it is the
// number of advertised entries; other kinds ignore it.
inline std::uint32_t frame_size(const SizeTable& sizes, FrameKind kind,
                                std::uint32_t payload_or_entries = 0) {
  switch (kind) {
    case FrameKind::Data:
      return payload_or_entries + sizes.data_overhead;
    case FrameKind::Sack:
      return sizes.sack;
    case FrameKind::Heartbeat:
    case FrameKind::HeartbeatAck:
      return sizes.heartbeat;
    case FrameKind::Shutdown:
    case FrameKind::ShutdownAck:
    case FrameKind::ShutdownComplete:
      return sizes.shutdown;
    case FrameKind::DsdvUpdate:
      return sizes.dsdv_header + sizes.dsdv_per_entry * payload_or_entries;
  }
  throw SimError("frame_size: unknown kind");
}

enum class TxOutcome : std::uint8_t { Delivered, Lost };

inline const char* to_string(TxOutcome o) {
  return o == TxOutcome::Delivered ? "delivered" : "lost";
}

struct RouteAdvert {
  NodeId dest = 0;
  std::uint32_t metric = 0;
  std::uint32_t seqno = 0;
};

struct Frame {
  FrameKind kind = FrameKind::Data;
  NodeId src = 0;                 // transmitting hop
  NodeId dst = 0;                 // receiving hop, kBroadcast for updates
  std::uint32_t payload_bytes = 0;
  std::uint32_t total_bytes = 0;
  std::uint64_t tag = 0;          // TSN for transport frames, update id

  // End-to-end addressing so intermediate hops can forward transport frames.
  NodeId flow_src = 0;
  NodeId flow_dst = 0;

  // SACK content.
  std::uint64_t cum_tsn = 0;
  std::vector<std::uint64_t> gap_tsns;

  // Route update content.
  bool full_dump = false;
  std::vector<RouteAdvert> routes;
};

}  // namespace cutsim
