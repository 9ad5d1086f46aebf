#include "faultfabric/mapper/topology_graph.hpp"

#include <set>

#include "faultfabric/common/error.hpp"

namespace faultfabric::mapper {

using fabric::Topology;
using nlohmann::json;

json TopologyGraph::to_json() const {
  json doc;
  doc["tenant_id"] = tenant_id;
  const std::pair<const char*, const char*> groups[] = {
      {"network", "networks"}, {"subnet", "subnets"},         {"router", "routers"},
      {"port", "ports"},       {"floatingip", "floating_ips"}, {"balancer", "balancers"},
  };
  for (const auto& [kind, key] : groups) {
    doc[key] = json::array();
    for (const auto& n : nodes) {
      if (n.kind == kind) doc[key].push_back(n.attributes);
    }
  }
  doc["edges"] = json::array();
  for (const auto& e : edges) doc["edges"].push_back({{"from", e.from}, {"to", e.to}, {"relation", e.relation}});
  return doc;
}

TopologyGraph get_network_topology(const Topology& topology, const std::string& tenant_id) {
  if (!topology.tenants().count(tenant_id)) {
    throw Error(ErrorCode::UnknownTenant, "unknown tenant '" + tenant_id + "'");
  }
  TopologyGraph g;
  g.tenant_id = tenant_id;
  std::set<std::string> visible;

  auto add = [&](std::string kind, const std::string& id, std::string name, const std::string& owner, json attrs,
                 bool shared = false) {
    if (shared) attrs["shared"] = true;
    g.nodes.push_back({std::move(kind), id, std::move(name), owner, shared, std::move(attrs)});
    visible.insert(id);
  };

  for (const auto* n : Topology::ordered(topology.networks())) {
    if (n->tenant_id == tenant_id) {
      add("network", n->id, n->name, n->tenant_id, fabric::record_to_json(*n));
    } else if (n->is_external) {
      add("network", n->id, n->name, n->tenant_id, fabric::record_to_json(*n), true);
    }
  }
  for (const auto* s : Topology::ordered(topology.subnets())) {
    const auto& net = topology.networks().at(s->network_id);
    if (net.tenant_id != tenant_id) continue;
    add("subnet", s->id, s->id, tenant_id, fabric::record_to_json(*s));
    g.edges.push_back({s->network_id, s->id, "contains"});
  }
  for (const auto* r : Topology::ordered(topology.routers())) {
    if (r->tenant_id != tenant_id) continue;
    add("router", r->id, r->id, tenant_id, fabric::record_to_json(*r));
  }
  for (const auto* p : Topology::ordered(topology.ports())) {
    if (p->tenant_id != tenant_id) continue;
    json attrs = fabric::record_to_json(*p);
    attrs.erase("host_id");
    add("port", p->id, p->device_id.value_or(p->id), tenant_id, std::move(attrs));
    if (visible.count(p->subnet_id)) {
      g.edges.push_back({p->subnet_id, p->id, "contains"});
    } else if (const auto* s = topology.find_subnet(p->subnet_id); s && visible.count(s->network_id)) {
      g.edges.push_back({s->network_id, p->id, "attached"});
    }
  }
  for (const auto* r : Topology::ordered(topology.routers())) {
    if (r->tenant_id != tenant_id) continue;
    for (const auto& pid : r->interface_port_ids) g.edges.push_back({r->id, pid, "interface"});
    if (r->gateway_port_id) g.edges.push_back({r->id, *r->gateway_port_id, "gateway"});
  }
  for (const auto* f : Topology::ordered(topology.floating_ips())) {
    if (f->tenant_id != tenant_id) continue;
    add("floatingip", f->id, f->address, tenant_id, fabric::record_to_json(*f));
    g.edges.push_back({f->id, f->attached_port_id, "attached"});
    if (const auto* backing = topology.backing_port(*f)) g.edges.push_back({f->id, backing->id, "backed_by"});
  }
  for (const auto& [_, b] : topology.balancers()) {
    if (b.tenant_id != tenant_id) continue;
    json attrs = {{"id", b.id},
                  {"tenant_id", b.tenant_id},
                  {"port_id", b.port_id},
                  {"backend_port_ids", b.backend_port_ids},
                  {"protocol", to_string(b.protocol)},
                  {"service_port", b.service_port}};
    add("balancer", b.id, b.id, tenant_id, std::move(attrs));
    if (visible.count(b.port_id)) g.edges.push_back({b.id, b.port_id, "vip"});
    for (const auto& pid : b.backend_port_ids) {
      if (visible.count(pid)) g.edges.push_back({b.id, pid, "backend"});
    }
  }
  return g;
}

}  // namespace faultfabric::mapper
