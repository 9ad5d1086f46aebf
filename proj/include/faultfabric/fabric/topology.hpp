#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "faultfabric/common/types.hpp"

namespace faultfabric::fabric {

enum class HostRole { Controller, Network, Compute };

std::string_view to_string(HostRole r);

struct Host {
  std::string id;
  HostRole role = HostRole::Compute;
  // Latency added by every injection item located on this host.
  double link_latency_ms = 0.5;
};

struct Tenant {
  std::string id;
  std::string name;
};

enum class DeviceOwner { ComputeNova, RouterInterface, RouterGateway, FloatingIpPort };

// "compute:nova", "network:router_interface", "network:router_gateway",
// "network:floatingip".
std::string_view to_string(DeviceOwner o);
DeviceOwner device_owner_from_string(std::string_view s);

// `seq` is the creation order. It is not part of the serialized document;
// it orders closures, serialization and item resolution, and survives a
// delete/restore round trip.
struct Network {
  std::string id;
  std::string tenant_id;
  std::string name;
  bool is_external = false;
  std::uint64_t seq = 0;
};

struct Subnet {
  std::string id;
  std::string network_id;
  std::string cidr;
  std::uint64_t seq = 0;
};

struct Port {
  std::string id;
  std::string tenant_id;
  DeviceOwner device_owner = DeviceOwner::ComputeNova;
  std::string host_id;
  std::string subnet_id;
  std::string address;
  std::optional<std::string> device_id;  // owning instance, when known
  std::uint64_t seq = 0;
};

struct Router {
  std::string id;
  std::string tenant_id;
  std::vector<std::string> interface_port_ids;
  std::optional<std::string> gateway_port_id;
  std::uint64_t seq = 0;
};

// Backed by the FloatingIpPort on an external network that carries the same
// address.
struct FloatingIp {
  std::string id;
  std::string tenant_id;
  std::string address;
  std::string attached_port_id;
  std::uint64_t seq = 0;
};

struct HealthMonitorConfig {
  double period_ms = 5000;
  double timeout_ms = 5000;
  int max_retries = 3;
};

// Fabric element, not an injectable resource. Probes originate at `port_id`.
struct Balancer {
  std::string id;
  std::string tenant_id;
  std::string port_id;
  std::vector<std::string> backend_port_ids;
  Protocol protocol = Protocol::TCP;
  int service_port = 80;
  HealthMonitorConfig health;
};

using ResourceRecord = std::variant<Network, Subnet, Port, Router, FloatingIp>;

ResourceKind kind_of(const ResourceRecord& r);
const std::string& id_of(const ResourceRecord& r);
std::uint64_t seq_of(const ResourceRecord& r);
nlohmann::json record_to_json(const ResourceRecord& r);

struct ResourceSnapshot {
  ResourceRef root;
  std::vector<ResourceRecord> closure;      // creation order
  std::vector<ResourceRef> external_refs;   // parents outside the closure
  SimTime taken_at = 0;

  std::vector<ResourceRef> members() const;
  nlohmann::json to_json() const;
};

// The validated resource graph. Mutations keep it valid or throw.
class Topology {
 public:
  // Throws ParseError for a malformed document, ValidationError for a
  // dangling reference, CIDR overlap or host-role violation.
  static Topology from_json(const nlohmann::json& doc);
  static Topology from_file(const std::string& path);

  // Same vocabulary as the input document, each array in creation order.
  nlohmann::json to_json() const;

  void validate() const;

  const std::map<std::string, Host>& hosts() const { return hosts_; }
  const std::vector<std::string>& host_order() const { return host_order_; }
  const std::map<std::string, Tenant>& tenants() const { return tenants_; }
  const std::map<std::string, Network>& networks() const { return networks_; }
  const std::map<std::string, Subnet>& subnets() const { return subnets_; }
  const std::map<std::string, Port>& ports() const { return ports_; }
  const std::map<std::string, Router>& routers() const { return routers_; }
  const std::map<std::string, FloatingIp>& floating_ips() const { return floating_ips_; }
  const std::map<std::string, Balancer>& balancers() const { return balancers_; }

  const Host* find_host(const std::string& id) const;
  const Network* find_network(const std::string& id) const;
  const Subnet* find_subnet(const std::string& id) const;
  const Port* find_port(const std::string& id) const;
  const Router* find_router(const std::string& id) const;
  const FloatingIp* find_floating_ip(const std::string& id) const;

  bool exists(ResourceKind kind, const std::string& id) const;
  bool exists_any(const std::string& id) const;
  std::optional<ResourceRecord> record(ResourceKind kind, const std::string& id) const;
  // Owning tenant; subnets inherit their network's tenant.
  std::optional<std::string> tenant_of(ResourceKind kind, const std::string& id) const;

  // Creation-ordered views.
  template <class T>
  static std::vector<const T*> ordered(const std::map<std::string, T>& m) {
    std::vector<const T*> out;
    out.reserve(m.size());
    for (const auto& [_, v] : m) out.push_back(&v);
    std::sort(out.begin(), out.end(), [](const T* a, const T* b) { return a->seq < b->seq; });
    return out;
  }

  std::vector<const Subnet*> subnets_of(const std::string& network_id) const;
  std::vector<const Port*> ports_of(const std::string& subnet_id) const;
  // Router owning the port (interface or gateway), if any.
  const Router* router_of_port(const std::string& port_id) const;
  // FloatingIpPort backing a floating IP.
  const Port* backing_port(const FloatingIp& fip) const;
  std::vector<const FloatingIp*> floating_ips_attached_to(const std::string& port_id) const;

  // Everything that disappears together with the resource, creation order.
  // Throws NotFound.
  std::vector<ResourceRecord> closure(ResourceKind kind, const std::string& id) const;

  ResourceSnapshot snapshot(ResourceKind kind, const std::string& id, SimTime now) const;
  // Removes the snapshot's closure. Returns the snapshot.
  ResourceSnapshot remove(ResourceKind kind, const std::string& id, SimTime now);
  // Replays a snapshot. Throws Conflict / StaleSnapshot.
  void restore(const ResourceSnapshot& snap);

  std::size_t resource_count() const {
    return networks_.size() + subnets_.size() + ports_.size() + routers_.size() + floating_ips_.size();
  }

 private:
  void insert(const ResourceRecord& r);
  void erase(const ResourceRef& ref);
  std::vector<ResourceRef> external_refs_of(const std::vector<ResourceRecord>& closure) const;

  std::map<std::string, Host> hosts_;
  std::vector<std::string> host_order_;
  std::map<std::string, Tenant> tenants_;
  std::vector<std::string> tenant_order_;
  std::map<std::string, Network> networks_;
  std::map<std::string, Subnet> subnets_;
  std::map<std::string, Port> ports_;
  std::map<std::string, Router> routers_;
  std::map<std::string, FloatingIp> floating_ips_;
  std::map<std::string, Balancer> balancers_;
  std::vector<std::string> balancer_order_;
  std::uint64_t next_seq_ = 1;
};

}  // namespace faultfabric::fabric
