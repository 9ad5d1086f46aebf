#include "faultfabric/mapper/item_map.hpp"

#include <algorithm>

#include "faultfabric/common/error.hpp"

namespace faultfabric::mapper {

using fabric::DeviceOwner;
using fabric::Port;
using fabric::Topology;

std::string_view to_string(ItemKind k) {
  switch (k) {
    case ItemKind::TapDevice: return "tap_device";
    case ItemKind::RouterInternalIf: return "router_internal_if";
    case ItemKind::RouterExternalIf: return "router_external_if";
    case ItemKind::FloatingIpIf: return "floating_ip_if";
  }
  return "tap_device";
}

ItemKind item_kind_for(DeviceOwner owner) {
  switch (owner) {
    case DeviceOwner::ComputeNova: return ItemKind::TapDevice;
    case DeviceOwner::RouterInterface: return ItemKind::RouterInternalIf;
    case DeviceOwner::RouterGateway: return ItemKind::RouterExternalIf;
    case DeviceOwner::FloatingIpPort: return ItemKind::FloatingIpIf;
  }
  return ItemKind::TapDevice;
}

namespace {

std::string_view prefix(ItemKind k) {
  switch (k) {
    case ItemKind::TapDevice: return "tap";
    case ItemKind::RouterInternalIf: return "qr";
    case ItemKind::RouterExternalIf: return "qg";
    case ItemKind::FloatingIpIf: return "fip";
  }
  return "tap";
}

}  // namespace

std::string item_id_for(const Port& port) {
  return std::string(prefix(item_kind_for(port.device_owner))) + ":" + port.id;
}

const InjectionItem* ItemMap::find(const std::string& item_id) const {
  auto it = items_.find(item_id);
  return it == items_.end() ? nullptr : &it->second;
}

const InjectionItem* ItemMap::item_for_port(const std::string& port_id) const {
  auto it = item_of_port_.find(port_id);
  return it == item_of_port_.end() ? nullptr : find(it->second);
}

bool ItemMap::contains(ResourceKind kind, const std::string& resource_id) const {
  return by_resource_.count({kind, resource_id}) > 0;
}

std::vector<InjectionItem> ItemMap::resolve(ResourceKind kind, const std::string& resource_id) const {
  auto it = by_resource_.find({kind, resource_id});
  if (it == by_resource_.end()) {
    throw Error(ErrorCode::NotFound, std::string(to_string(kind)) + " '" + resource_id + "' not found");
  }
  std::vector<InjectionItem> out;
  out.reserve(it->second.size());
  for (const auto& id : it->second) out.push_back(items_.at(id));
  return out;
}

ItemMap build_item_map(const Topology& topology) {
  ItemMap map;
  for (const auto* port : Topology::ordered(topology.ports())) {
    InjectionItem item;
    item.kind = item_kind_for(port->device_owner);
    item.id = item_id_for(*port);
    item.location = port->host_id;
    item.port_id = port->id;
    item.tenant_id = port->tenant_id;
    item.display = std::string(prefix(item.kind)) + "-" + port->id.substr(0, 11);
    map.item_of_port_[port->id] = item.id;
    map.by_resource_[{ResourceKind::Port, port->id}] = {item.id};
    map.items_.emplace(item.id, std::move(item));
  }
  for (const auto* subnet : Topology::ordered(topology.subnets())) {
    auto& list = map.by_resource_[{ResourceKind::Subnet, subnet->id}];
    for (const auto* port : topology.ports_of(subnet->id)) list.push_back(map.item_of_port_.at(port->id));
  }
  for (const auto* network : Topology::ordered(topology.networks())) {
    auto& list = map.by_resource_[{ResourceKind::Network, network->id}];
    for (const auto* subnet : topology.subnets_of(network->id)) {
      const auto& sub = map.by_resource_.at({ResourceKind::Subnet, subnet->id});
      list.insert(list.end(), sub.begin(), sub.end());
    }
  }
  for (const auto* router : Topology::ordered(topology.routers())) {
    std::vector<const Port*> ports;
    for (const auto& pid : router->interface_port_ids) ports.push_back(topology.find_port(pid));
    if (router->gateway_port_id) ports.push_back(topology.find_port(*router->gateway_port_id));
    std::sort(ports.begin(), ports.end(), [](const Port* a, const Port* b) { return a->seq < b->seq; });
    auto& list = map.by_resource_[{ResourceKind::Router, router->id}];
    for (const auto* p : ports) list.push_back(map.item_of_port_.at(p->id));
  }
  for (const auto* fip : Topology::ordered(topology.floating_ips())) {
    auto& list = map.by_resource_[{ResourceKind::FloatingIp, fip->id}];
    if (const Port* backing = topology.backing_port(*fip)) list.push_back(map.item_of_port_.at(backing->id));
  }
  return map;
}

std::vector<InjectionItem> resolve_items(const ItemMap& map, ResourceKind kind, const std::string& resource_id) {
  return map.resolve(kind, resource_id);
}

}  // namespace faultfabric::mapper
