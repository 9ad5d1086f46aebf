#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "faultfabric/common/types.hpp"

namespace faultfabric {

enum class PacketKind { Request, Response, Datagram };

std::string_view to_string(PacketKind k);
PacketKind packet_kind_from_string(std::string_view s);

// Simulated traffic unit. `size()` is always the payload length.
struct Packet {
  std::string flow_id;
  std::uint64_t packet_id = 0;  // assigned by the fabric on send
  std::string tenant_id;
  std::string src_port_id;
  std::string dst_address;
  Protocol protocol = Protocol::UDP;
  std::optional<int> service_port;
  std::vector<std::uint8_t> payload;
  SimTime sent_at = 0;
  PacketKind kind = PacketKind::Datagram;
  bool corrupted = false;
  std::optional<std::uint64_t> request_id;
  // Copies made by a duplication fault; they bypass further fault handling.
  bool duplicate = false;
  // Time between first and last byte at the receiver (response streaming).
  SimTime stream_ms = 0;

  std::size_t size() const { return payload.size(); }
};

}  // namespace faultfabric
