#include "faultfabric/common/flow_event.hpp"
#include "faultfabric/common/error.hpp"
#include "faultfabric/common/packet.hpp"

namespace faultfabric {

std::string_view to_string(PacketKind k) {
  switch (k) {
    case PacketKind::Request: return "request";
    case PacketKind::Response: return "response";
    case PacketKind::Datagram: return "datagram";
  }
  return "datagram";
}

PacketKind packet_kind_from_string(std::string_view s) {
  if (s == "request") return PacketKind::Request;
  if (s == "response") return PacketKind::Response;
  if (s == "datagram") return PacketKind::Datagram;
  throw Error(ErrorCode::ParseError, "unknown packet kind '" + std::string(s) + "'");
}

std::string_view to_string(FlowEventKind k) {
  switch (k) {
    case FlowEventKind::Sent: return "sent";
    case FlowEventKind::Delivered: return "delivered";
    case FlowEventKind::Dropped: return "dropped";
    case FlowEventKind::Corrupted: return "corrupted";
    case FlowEventKind::Duplicated: return "duplicated";
    case FlowEventKind::Delayed: return "delayed";
    case FlowEventKind::Unreachable: return "unreachable";
    case FlowEventKind::TimedOut: return "timed_out";
    case FlowEventKind::Rejected: return "rejected";
  }
  return "sent";
}

FlowEvent make_event(FlowEventKind kind, const Packet& p, SimTime t) {
  FlowEvent e;
  e.kind = kind;
  e.t = t;
  e.flow_id = p.flow_id;
  e.packet_id = p.packet_id;
  e.tenant_id = p.tenant_id;
  e.packet_kind = p.kind;
  e.request_id = p.request_id;
  e.sent_at = p.sent_at;
  e.duplicate = p.duplicate;
  e.corrupted = p.corrupted;
  return e;
}

nlohmann::json to_json(const FlowEvent& e) {
  nlohmann::json j;
  j["t"] = e.t;
  j["kind"] = to_string(e.kind);
  j["flow"] = e.flow_id;
  j["packet"] = e.packet_id;
  j["tenant"] = e.tenant_id;
  j["packet_kind"] = to_string(e.packet_kind);
  if (e.request_id) j["request"] = *e.request_id;
  j["sent_at"] = e.sent_at;
  if (e.first_byte_t) j["first_byte_t"] = *e.first_byte_t;
  if (e.last_byte_t) j["last_byte_t"] = *e.last_byte_t;
  if (e.item_id) j["item"] = *e.item_id;
  if (e.port_id) j["port"] = *e.port_id;
  if (e.kind == FlowEventKind::Delayed) j["extra_ms"] = e.extra_ms;
  if (e.duplicate) j["duplicate"] = true;
  if (e.corrupted) j["corrupted"] = true;
  return j;
}

}  // namespace faultfabric
