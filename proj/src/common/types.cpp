#include "faultfabric/common/types.hpp"

#include "faultfabric/common/error.hpp"

namespace faultfabric {

std::string_view to_string(Protocol p) { return p == Protocol::TCP ? "tcp" : "udp"; }

Protocol protocol_from_string(std::string_view s) {
  if (s == "tcp" || s == "TCP") return Protocol::TCP;
  if (s == "udp" || s == "UDP") return Protocol::UDP;
  throw Error(ErrorCode::ParseError, "unknown protocol '" + std::string(s) + "'");
}

std::string_view to_string(ResourceKind k) {
  switch (k) {
    case ResourceKind::Network: return "network";
    case ResourceKind::Subnet: return "subnet";
    case ResourceKind::Router: return "router";
    case ResourceKind::Port: return "port";
    case ResourceKind::FloatingIp: return "floatingip";
  }
  return "network";
}

ResourceKind resource_kind_from_string(std::string_view s) {
  if (s == "network") return ResourceKind::Network;
  if (s == "subnet") return ResourceKind::Subnet;
  if (s == "router") return ResourceKind::Router;
  if (s == "port") return ResourceKind::Port;
  if (s == "floatingip" || s == "floating_ip") return ResourceKind::FloatingIp;
  throw Error(ErrorCode::ParseError, "unknown resource kind '" + std::string(s) + "'");
}

}  // namespace faultfabric
