#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "faultfabric/fabric/topology.hpp"

namespace faultfabric::mapper {

// Tenant-facing view of a virtual resource. Carries no host or item ids.
struct GraphNode {
  std::string kind;  // "network", "subnet", "router", "port", "floatingip", "balancer"
  std::string id;
  std::string name;
  std::string tenant_id;
  bool shared = false;  // external network visible to every tenant
  nlohmann::json attributes;
};

struct GraphEdge {
  std::string from;
  std::string to;
  std::string relation;  // contains | interface | gateway | attached | backed_by | vip | backend
};

struct TopologyGraph {
  std::string tenant_id;
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  // Topology-document vocabulary (arrays per kind) plus an `edges` array.
  nlohmann::json to_json() const;
};

// Throws UnknownTenant.
TopologyGraph get_network_topology(const fabric::Topology& topology, const std::string& tenant_id);

}  // namespace faultfabric::mapper
