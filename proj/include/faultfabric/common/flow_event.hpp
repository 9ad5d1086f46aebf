#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "faultfabric/common/packet.hpp"

namespace faultfabric {

// Packet-level kinds are emitted by the fabric (Sent, Delivered, Dropped,
// Unreachable, and the per-item Corrupted/Duplicated/Delayed marks).
// Workloads additionally emit TimedOut and Rejected at transaction level.
enum class FlowEventKind {
  Sent,
  Delivered,
  Dropped,
  Corrupted,
  Duplicated,
  Delayed,
  Unreachable,
  TimedOut,
  Rejected,
};

std::string_view to_string(FlowEventKind k);

struct FlowEvent {
  FlowEventKind kind = FlowEventKind::Sent;
  SimTime t = 0;
  std::string flow_id;
  std::uint64_t packet_id = 0;
  std::string tenant_id;
  PacketKind packet_kind = PacketKind::Datagram;
  std::optional<std::uint64_t> request_id;
  SimTime sent_at = 0;
  std::optional<SimTime> first_byte_t;
  std::optional<SimTime> last_byte_t;
  // Item where a fault outcome happened (Dropped/Corrupted/Duplicated/Delayed).
  std::optional<std::string> item_id;
  std::optional<std::string> port_id;  // receiving port for Delivered
  SimTime extra_ms = 0;                // Delayed only
  bool duplicate = false;
  bool corrupted = false;

  // Outcomes that a fault transformer produced (everything but pass-through).
  bool is_fault_outcome() const {
    return kind == FlowEventKind::Dropped || kind == FlowEventKind::Corrupted ||
           kind == FlowEventKind::Duplicated || kind == FlowEventKind::Delayed;
  }
};

FlowEvent make_event(FlowEventKind kind, const Packet& p, SimTime t);

nlohmann::json to_json(const FlowEvent& e);

}  // namespace faultfabric
