#pragma once

#include <map>
#include <string>
#include <vector>

#include "faultfabric/common/types.hpp"
#include "faultfabric/fabric/topology.hpp"

namespace faultfabric::mapper {

enum class ItemKind { TapDevice, RouterInternalIf, RouterExternalIf, FloatingIpIf };

std::string_view to_string(ItemKind k);

// A hypervisor-level interface that faults are actually applied to.
struct InjectionItem {
  std::string id;
  std::string location;  // host id
  ItemKind kind = ItemKind::TapDevice;
  std::string port_id;   // backing port
  std::string tenant_id;
  std::string display;   // cosmetic label, e.g. "qr-3f2a9c01-7b"

  friend bool operator==(const InjectionItem&, const InjectionItem&) = default;
};

// Item ids are a pure function of the backing port (kind prefix + port id),
// so a restored port gets back the item id it had before deletion.
std::string item_id_for(const fabric::Port& port);
ItemKind item_kind_for(fabric::DeviceOwner owner);

// Resource id -> creation-ordered items. Every resource of the topology has
// an entry, possibly empty (a network without subnets).
class ItemMap {
 public:
  const InjectionItem* find(const std::string& item_id) const;
  const InjectionItem* item_for_port(const std::string& port_id) const;

  // Throws NotFound when the resource is absent from the map.
  std::vector<InjectionItem> resolve(ResourceKind kind, const std::string& resource_id) const;
  bool contains(ResourceKind kind, const std::string& resource_id) const;

  const std::map<std::string, InjectionItem>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

 private:
  friend ItemMap build_item_map(const fabric::Topology& topology);

  std::map<std::string, InjectionItem> items_;
  std::map<std::string, std::string> item_of_port_;
  std::map<std::pair<ResourceKind, std::string>, std::vector<std::string>> by_resource_;
};

ItemMap build_item_map(const fabric::Topology& topology);

std::vector<InjectionItem> resolve_items(const ItemMap& map, ResourceKind kind, const std::string& resource_id);

}  // namespace faultfabric::mapper
