#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace faultfabric {

// Simulated time in milliseconds.
using SimTime = double;

enum class Protocol { TCP, UDP };

std::string_view to_string(Protocol p);
Protocol protocol_from_string(std::string_view s);

// Resource kinds that faults can be aimed at.
enum class ResourceKind { Network, Subnet, Router, Port, FloatingIp };

std::string_view to_string(ResourceKind k);
ResourceKind resource_kind_from_string(std::string_view s);

struct ResourceRef {
  ResourceKind kind;
  std::string id;

  friend bool operator==(const ResourceRef&, const ResourceRef&) = default;
};

}  // namespace faultfabric
