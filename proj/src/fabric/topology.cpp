#include "faultfabric/fabric/topology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "faultfabric/common/error.hpp"
#include "faultfabric/common/ipv4.hpp"

namespace faultfabric::fabric {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::ValidationError, msg); }

std::string req_str(const json& j, const char* key, const char* what) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_string()) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": missing string field '" + key + "'");
  }
  return j.at(key).get<std::string>();
}

std::optional<std::string> opt_str(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

const json& array_field(const json& doc, const char* key) {
  static const json empty = json::array();
  if (!doc.contains(key)) return empty;
  const auto& v = doc.at(key);
  if (!v.is_array()) throw Error(ErrorCode::ParseError, std::string("'") + key + "' must be an array");
  return v;
}

HostRole host_role_from_string(const std::string& s) {
  if (s == "controller" || s == "Controller") return HostRole::Controller;
  if (s == "network" || s == "Network") return HostRole::Network;
  if (s == "compute" || s == "Compute") return HostRole::Compute;
  throw Error(ErrorCode::ParseError, "unknown host role '" + s + "'");
}

json port_json(const Port& p) {
  json j = {{"id", p.id},
            {"tenant_id", p.tenant_id},
            {"device_owner", to_string(p.device_owner)},
            {"host_id", p.host_id},
            {"subnet_id", p.subnet_id},
            {"address", p.address}};
  if (p.device_id) j["device_id"] = *p.device_id;
  return j;
}

}  // namespace

std::string_view to_string(HostRole r) {
  switch (r) {
    case HostRole::Controller: return "controller";
    case HostRole::Network: return "network";
    case HostRole::Compute: return "compute";
  }
  return "compute";
}

std::string_view to_string(DeviceOwner o) {
  switch (o) {
    case DeviceOwner::ComputeNova: return "compute:nova";
    case DeviceOwner::RouterInterface: return "network:router_interface";
    case DeviceOwner::RouterGateway: return "network:router_gateway";
    case DeviceOwner::FloatingIpPort: return "network:floatingip";
  }
  return "compute:nova";
}

DeviceOwner device_owner_from_string(std::string_view s) {
  if (s == "compute:nova") return DeviceOwner::ComputeNova;
  if (s == "network:router_interface") return DeviceOwner::RouterInterface;
  if (s == "network:router_gateway") return DeviceOwner::RouterGateway;
  if (s == "network:floatingip") return DeviceOwner::FloatingIpPort;
  throw Error(ErrorCode::ParseError, "unknown device_owner '" + std::string(s) + "'");
}

ResourceKind kind_of(const ResourceRecord& r) {
  return std::visit(overloaded{
                        [](const Network&) { return ResourceKind::Network; },
                        [](const Subnet&) { return ResourceKind::Subnet; },
                        [](const Port&) { return ResourceKind::Port; },
                        [](const Router&) { return ResourceKind::Router; },
                        [](const FloatingIp&) { return ResourceKind::FloatingIp; },
                    },
                    r);
}

const std::string& id_of(const ResourceRecord& r) {
  return std::visit([](const auto& v) -> const std::string& { return v.id; }, r);
}

std::uint64_t seq_of(const ResourceRecord& r) {
  return std::visit([](const auto& v) { return v.seq; }, r);
}

json record_to_json(const ResourceRecord& r) {
  return std::visit(overloaded{
                        [](const Network& n) -> json {
                          return {{"id", n.id}, {"tenant_id", n.tenant_id}, {"name", n.name},
                                  {"is_external", n.is_external}};
                        },
                        [](const Subnet& s) -> json {
                          return {{"id", s.id}, {"network_id", s.network_id}, {"cidr", s.cidr}};
                        },
                        [](const Port& p) -> json { return port_json(p); },
                        [](const Router& r) -> json {
                          json j = {{"id", r.id}, {"tenant_id", r.tenant_id},
                                    {"interface_port_ids", r.interface_port_ids}};
                          j["gateway_port_id"] = r.gateway_port_id ? json(*r.gateway_port_id) : json(nullptr);
                          return j;
                        },
                        [](const FloatingIp& f) -> json {
                          return {{"id", f.id}, {"tenant_id", f.tenant_id}, {"address", f.address},
                                  {"attached_port_id", f.attached_port_id}};
                        },
                    },
                    r);
}

std::vector<ResourceRef> ResourceSnapshot::members() const {
  std::vector<ResourceRef> out;
  for (const auto& r : closure) out.push_back({kind_of(r), id_of(r)});
  return out;
}

json ResourceSnapshot::to_json() const {
  json j;
  j["root"] = {{"kind", to_string(root.kind)}, {"id", root.id}};
  j["closure"] = json::array();
  for (const auto& r : closure) {
    j["closure"].push_back({{"kind", to_string(kind_of(r))}, {"record", record_to_json(r)}});
  }
  j["external_refs"] = json::array();
  for (const auto& ref : external_refs) {
    j["external_refs"].push_back({{"kind", to_string(ref.kind)}, {"id", ref.id}});
  }
  j["taken_at"] = taken_at;
  return j;
}

Topology Topology::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open topology document '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("topology document: ") + e.what());
  }
  return from_json(doc);
}

Topology Topology::from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::ParseError, "topology document must be an object");
  Topology t;
  try {
    for (const auto& h : array_field(doc, "hosts")) {
      Host host;
      host.id = req_str(h, "id", "host");
      host.role = host_role_from_string(req_str(h, "role", "host"));
      host.link_latency_ms = h.value("link_latency_ms", 0.5);
      if (!t.hosts_.emplace(host.id, host).second) invalid("duplicate host id '" + host.id + "'");
      t.host_order_.push_back(host.id);
    }
    for (const auto& j : array_field(doc, "tenants")) {
      Tenant tenant{req_str(j, "id", "tenant"), j.value("name", std::string())};
      if (!t.tenants_.emplace(tenant.id, tenant).second) invalid("duplicate tenant id '" + tenant.id + "'");
      t.tenant_order_.push_back(tenant.id);
    }
    auto claim = [&](const std::string& id) {
      if (t.exists_any(id)) invalid("duplicate resource id '" + id + "'");
    };
    for (const auto& j : array_field(doc, "networks")) {
      Network n;
      n.id = req_str(j, "id", "network");
      n.tenant_id = req_str(j, "tenant_id", "network");
      n.name = j.value("name", n.id);
      n.is_external = j.value("is_external", false);
      n.seq = t.next_seq_++;
      claim(n.id);
      t.networks_.emplace(n.id, n);
    }
    for (const auto& j : array_field(doc, "subnets")) {
      Subnet s;
      s.id = req_str(j, "id", "subnet");
      s.network_id = req_str(j, "network_id", "subnet");
      s.cidr = req_str(j, "cidr", "subnet");
      s.seq = t.next_seq_++;
      claim(s.id);
      t.subnets_.emplace(s.id, s);
    }
    for (const auto& j : array_field(doc, "ports")) {
      Port p;
      p.id = req_str(j, "id", "port");
      p.tenant_id = req_str(j, "tenant_id", "port");
      p.device_owner = device_owner_from_string(req_str(j, "device_owner", "port"));
      p.host_id = req_str(j, "host_id", "port");
      p.subnet_id = req_str(j, "subnet_id", "port");
      p.address = req_str(j, "address", "port");
      p.device_id = opt_str(j, "device_id");
      p.seq = t.next_seq_++;
      claim(p.id);
      t.ports_.emplace(p.id, p);
    }
    for (const auto& j : array_field(doc, "routers")) {
      Router r;
      r.id = req_str(j, "id", "router");
      r.tenant_id = req_str(j, "tenant_id", "router");
      if (j.contains("interface_port_ids")) {
        r.interface_port_ids = j.at("interface_port_ids").get<std::vector<std::string>>();
      }
      r.gateway_port_id = opt_str(j, "gateway_port_id");
      r.seq = t.next_seq_++;
      claim(r.id);
      t.routers_.emplace(r.id, r);
    }
    for (const auto& j : array_field(doc, "floating_ips")) {
      FloatingIp f;
      f.id = req_str(j, "id", "floating ip");
      f.tenant_id = req_str(j, "tenant_id", "floating ip");
      f.address = req_str(j, "address", "floating ip");
      f.attached_port_id = req_str(j, "attached_port_id", "floating ip");
      f.seq = t.next_seq_++;
      claim(f.id);
      t.floating_ips_.emplace(f.id, f);
    }
    for (const auto& j : array_field(doc, "balancers")) {
      Balancer b;
      b.id = req_str(j, "id", "balancer");
      b.tenant_id = req_str(j, "tenant_id", "balancer");
      b.port_id = req_str(j, "port_id", "balancer");
      if (j.contains("backend_port_ids")) b.backend_port_ids = j.at("backend_port_ids").get<std::vector<std::string>>();
      b.protocol = protocol_from_string(j.value("protocol", std::string("tcp")));
      b.service_port = j.value("service_port", 80);
      if (j.contains("health")) {
        const auto& h = j.at("health");
        b.health.period_ms = h.value("period_ms", 5000.0);
        b.health.timeout_ms = h.value("timeout_ms", 5000.0);
        b.health.max_retries = h.value("max_retries", 3);
      }
      if (!t.balancers_.emplace(b.id, b).second) invalid("duplicate balancer id '" + b.id + "'");
      t.balancer_order_.push_back(b.id);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("topology document: ") + e.what());
  }
  t.validate();
  for (const auto& [_, b] : t.balancers_) {
    const std::string who = "balancer '" + b.id + "'";
    std::vector<std::string> ports = b.backend_port_ids;
    ports.push_back(b.port_id);
    for (const auto& pid : ports) {
      const Port* p = t.find_port(pid);
      if (!p) invalid(who + " references unknown port '" + pid + "'");
      if (p->device_owner != DeviceOwner::ComputeNova || p->tenant_id != b.tenant_id) {
        invalid(who + " port '" + pid + "' must be a compute:nova port of the same tenant");
      }
    }
  }
  return t;
}

json Topology::to_json() const {
  json doc;
  doc["hosts"] = json::array();
  for (const auto& id : host_order_) {
    const Host& h = hosts_.at(id);
    doc["hosts"].push_back({{"id", h.id}, {"role", to_string(h.role)}, {"link_latency_ms", h.link_latency_ms}});
  }
  doc["tenants"] = json::array();
  for (const auto& id : tenant_order_) {
    const Tenant& tn = tenants_.at(id);
    doc["tenants"].push_back({{"id", tn.id}, {"name", tn.name}});
  }
  doc["networks"] = json::array();
  for (const auto* n : ordered(networks_)) doc["networks"].push_back(record_to_json(*n));
  doc["subnets"] = json::array();
  for (const auto* s : ordered(subnets_)) doc["subnets"].push_back(record_to_json(*s));
  doc["routers"] = json::array();
  for (const auto* r : ordered(routers_)) doc["routers"].push_back(record_to_json(*r));
  doc["ports"] = json::array();
  for (const auto* p : ordered(ports_)) doc["ports"].push_back(record_to_json(*p));
  doc["floating_ips"] = json::array();
  for (const auto* f : ordered(floating_ips_)) doc["floating_ips"].push_back(record_to_json(*f));
  doc["balancers"] = json::array();
  for (const auto& id : balancer_order_) {
    const Balancer& b = balancers_.at(id);
    doc["balancers"].push_back({{"id", b.id},
                                {"tenant_id", b.tenant_id},
                                {"port_id", b.port_id},
                                {"backend_port_ids", b.backend_port_ids},
                                {"protocol", to_string(b.protocol)},
                                {"service_port", b.service_port},
                                {"health",
                                 {{"period_ms", b.health.period_ms},
                                  {"timeout_ms", b.health.timeout_ms},
                                  {"max_retries", b.health.max_retries}}}});
  }
  return doc;
}

void Topology::validate() const {
  int controllers = 0, network_hosts = 0, compute_hosts = 0;
  for (const auto& [_, h] : hosts_) {
    if (h.role == HostRole::Controller) ++controllers;
    if (h.role == HostRole::Network) ++network_hosts;
    if (h.role == HostRole::Compute) ++compute_hosts;
    if (h.link_latency_ms < 0) invalid("host '" + h.id + "' has negative link latency");
  }
  if (controllers != 1) invalid("exactly one controller host is required");
  if (network_hosts < 1) invalid("at least one network host is required");
  if (compute_hosts < 1) invalid("at least one compute host is required");

  auto need_tenant = [&](const std::string& tenant, const std::string& who) {
    if (!tenants_.count(tenant)) invalid(who + " references unknown tenant '" + tenant + "'");
  };

  for (const auto& [_, n] : networks_) need_tenant(n.tenant_id, "network '" + n.id + "'");

  std::map<std::string, std::vector<Cidr>> cidrs_by_network;
  for (const auto* s : ordered(subnets_)) {
    if (!networks_.count(s->network_id)) invalid("subnet '" + s->id + "' references unknown network '" + s->network_id + "'");
    auto cidr = parse_cidr(s->cidr);
    if (!cidr) invalid("subnet '" + s->id + "' has malformed cidr '" + s->cidr + "'");
    for (const auto& other : cidrs_by_network[s->network_id]) {
      if (other.overlaps(*cidr)) invalid("subnet '" + s->id + "' overlaps another subnet of network '" + s->network_id + "'");
    }
    cidrs_by_network[s->network_id].push_back(*cidr);
  }

  std::map<std::string, std::set<std::uint32_t>> used_addresses;
  for (const auto* p : ordered(ports_)) {
    const std::string who = "port '" + p->id + "'";
    need_tenant(p->tenant_id, who);
    const Subnet* s = find_subnet(p->subnet_id);
    if (!s) invalid(who + " references unknown subnet '" + p->subnet_id + "'");
    const Host* h = find_host(p->host_id);
    if (!h) invalid(who + " references unknown host '" + p->host_id + "'");
    const bool compute = p->device_owner == DeviceOwner::ComputeNova;
    if (compute && h->role != HostRole::Compute) invalid(who + " (compute:nova) must live on a compute host");
    if (!compute && h->role != HostRole::Network) invalid(who + " must live on a network host");
    auto addr = parse_ipv4(p->address);
    if (!addr) invalid(who + " has malformed address '" + p->address + "'");
    if (!parse_cidr(s->cidr)->contains(*addr)) invalid(who + " address is outside subnet " + s->cidr);
    if (!used_addresses[s->id].insert(*addr).second) invalid(who + " reuses address " + p->address);
    const Network& net = networks_.at(s->network_id);
    if (!net.is_external && net.tenant_id != p->tenant_id) {
      invalid(who + " belongs to a different tenant than its network");
    }
    const bool external_owner =
        p->device_owner == DeviceOwner::RouterGateway || p->device_owner == DeviceOwner::FloatingIpPort;
    if (external_owner != net.is_external) {
      invalid(who + (external_owner ? " must sit on an external network" : " cannot sit on an external network"));
    }
  }

  std::map<std::string, std::string> router_port_owner;
  for (const auto* r : ordered(routers_)) {
    const std::string who = "router '" + r->id + "'";
    need_tenant(r->tenant_id, who);
    auto claim = [&](const std::string& port_id, DeviceOwner expected) {
      const Port* p = find_port(port_id);
      if (!p) invalid(who + " references unknown port '" + port_id + "'");
      if (p->device_owner != expected) invalid(who + " port '" + port_id + "' has the wrong device_owner");
      if (p->tenant_id != r->tenant_id) invalid(who + " port '" + port_id + "' belongs to another tenant");
      if (!router_port_owner.emplace(port_id, r->id).second) invalid("port '" + port_id + "' is owned by two routers");
    };
    for (const auto& pid : r->interface_port_ids) claim(pid, DeviceOwner::RouterInterface);
    if (r->gateway_port_id) claim(*r->gateway_port_id, DeviceOwner::RouterGateway);
  }
  for (const auto& [_, p] : ports_) {
    const bool router_owned =
        p.device_owner == DeviceOwner::RouterInterface || p.device_owner == DeviceOwner::RouterGateway;
    if (router_owned && !router_port_owner.count(p.id)) invalid("port '" + p.id + "' is not attached to any router");
  }

  std::set<std::string> backing_ports;
  for (const auto* f : ordered(floating_ips_)) {
    const std::string who = "floating ip '" + f->id + "'";
    need_tenant(f->tenant_id, who);
    if (!parse_ipv4(f->address)) invalid(who + " has malformed address");
    const Port* attached = find_port(f->attached_port_id);
    if (!attached) invalid(who + " references unknown port '" + f->attached_port_id + "'");
    if (attached->device_owner != DeviceOwner::ComputeNova) invalid(who + " must attach to a compute:nova port");
    if (attached->tenant_id != f->tenant_id) invalid(who + " attaches to another tenant's port");
    const Port* backing = backing_port(*f);
    if (!backing) invalid(who + " has no network:floatingip port carrying address " + f->address);
    if (backing->tenant_id != f->tenant_id) invalid(who + " backing port belongs to another tenant");
    if (!backing_ports.insert(backing->id).second) invalid(who + " shares its backing port");
  }
  for (const auto& [_, p] : ports_) {
    if (p.device_owner == DeviceOwner::FloatingIpPort && !backing_ports.count(p.id)) {
      invalid("port '" + p.id + "' does not back any floating ip");
    }
  }

  for (const auto& [_, b] : balancers_) {
    const std::string who = "balancer '" + b.id + "'";
    need_tenant(b.tenant_id, who);
    if (b.backend_port_ids.empty()) invalid(who + " needs at least one backend");
    if (b.health.period_ms <= 0 || b.health.timeout_ms <= 0 || b.health.max_retries < 1) {
      invalid(who + " has an invalid health monitor configuration");
    }
  }
}

const Host* Topology::find_host(const std::string& id) const {
  auto it = hosts_.find(id);
  return it == hosts_.end() ? nullptr : &it->second;
}
const Network* Topology::find_network(const std::string& id) const {
  auto it = networks_.find(id);
  return it == networks_.end() ? nullptr : &it->second;
}
const Subnet* Topology::find_subnet(const std::string& id) const {
  auto it = subnets_.find(id);
  return it == subnets_.end() ? nullptr : &it->second;
}
const Port* Topology::find_port(const std::string& id) const {
  auto it = ports_.find(id);
  return it == ports_.end() ? nullptr : &it->second;
}
const Router* Topology::find_router(const std::string& id) const {
  auto it = routers_.find(id);
  return it == routers_.end() ? nullptr : &it->second;
}
const FloatingIp* Topology::find_floating_ip(const std::string& id) const {
  auto it = floating_ips_.find(id);
  return it == floating_ips_.end() ? nullptr : &it->second;
}

bool Topology::exists(ResourceKind kind, const std::string& id) const {
  switch (kind) {
    case ResourceKind::Network: return networks_.count(id) > 0;
    case ResourceKind::Subnet: return subnets_.count(id) > 0;
    case ResourceKind::Port: return ports_.count(id) > 0;
    case ResourceKind::Router: return routers_.count(id) > 0;
    case ResourceKind::FloatingIp: return floating_ips_.count(id) > 0;
  }
  return false;
}

bool Topology::exists_any(const std::string& id) const {
  return networks_.count(id) || subnets_.count(id) || ports_.count(id) || routers_.count(id) ||
         floating_ips_.count(id);
}

std::optional<ResourceRecord> Topology::record(ResourceKind kind, const std::string& id) const {
  switch (kind) {
    case ResourceKind::Network:
      if (auto* n = find_network(id)) return *n;
      break;
    case ResourceKind::Subnet:
      if (auto* s = find_subnet(id)) return *s;
      break;
    case ResourceKind::Port:
      if (auto* p = find_port(id)) return *p;
      break;
    case ResourceKind::Router:
      if (auto* r = find_router(id)) return *r;
      break;
    case ResourceKind::FloatingIp:
      if (auto* f = find_floating_ip(id)) return *f;
      break;
  }
  return std::nullopt;
}

std::optional<std::string> Topology::tenant_of(ResourceKind kind, const std::string& id) const {
  switch (kind) {
    case ResourceKind::Network:
      if (auto* n = find_network(id)) return n->tenant_id;
      break;
    case ResourceKind::Subnet:
      if (auto* s = find_subnet(id)) return networks_.at(s->network_id).tenant_id;
      break;
    case ResourceKind::Port:
      if (auto* p = find_port(id)) return p->tenant_id;
      break;
    case ResourceKind::Router:
      if (auto* r = find_router(id)) return r->tenant_id;
      break;
    case ResourceKind::FloatingIp:
      if (auto* f = find_floating_ip(id)) return f->tenant_id;
      break;
  }
  return std::nullopt;
}

std::vector<const Subnet*> Topology::subnets_of(const std::string& network_id) const {
  std::vector<const Subnet*> out;
  for (const auto* s : ordered(subnets_)) {
    if (s->network_id == network_id) out.push_back(s);
  }
  return out;
}

std::vector<const Port*> Topology::ports_of(const std::string& subnet_id) const {
  std::vector<const Port*> out;
  for (const auto* p : ordered(ports_)) {
    if (p->subnet_id == subnet_id) out.push_back(p);
  }
  return out;
}

const Router* Topology::router_of_port(const std::string& port_id) const {
  for (const auto& [_, r] : routers_) {
    if (r.gateway_port_id == port_id) return &r;
    if (std::find(r.interface_port_ids.begin(), r.interface_port_ids.end(), port_id) != r.interface_port_ids.end()) {
      return &r;
    }
  }
  return nullptr;
}

const Port* Topology::backing_port(const FloatingIp& fip) const {
  for (const auto* p : ordered(ports_)) {
    if (p->device_owner == DeviceOwner::FloatingIpPort && p->address == fip.address) return p;
  }
  return nullptr;
}

std::vector<const FloatingIp*> Topology::floating_ips_attached_to(const std::string& port_id) const {
  std::vector<const FloatingIp*> out;
  for (const auto* f : ordered(floating_ips_)) {
    if (f->attached_port_id == port_id) out.push_back(f);
  }
  return out;
}

std::vector<ResourceRecord> Topology::closure(ResourceKind kind, const std::string& id) const {
  if (!exists(kind, id)) {
    throw Error(ErrorCode::NotFound, std::string(to_string(kind)) + " '" + id + "' not found");
  }
  // Fixpoint: a resource joins the closure if it depends on a member
  // (subnet->network, port->subnet, router->its ports, floating ip->attached
  // or backing port) or is owned by one (router->ports, floating ip->backing
  // port).
  std::set<std::string> in{id};
  bool grew = true;
  while (grew) {
    grew = false;
    auto add = [&](const std::string& rid) {
      if (in.insert(rid).second) grew = true;
    };
    for (const auto& [sid, s] : subnets_) {
      if (in.count(s.network_id)) add(sid);
    }
    for (const auto& [pid, p] : ports_) {
      if (in.count(p.subnet_id)) add(pid);
    }
    for (const auto& [rid, r] : routers_) {
      bool hit = in.count(rid) > 0;
      for (const auto& pid : r.interface_port_ids) hit = hit || in.count(pid) > 0;
      if (r.gateway_port_id) hit = hit || in.count(*r.gateway_port_id) > 0;
      if (hit) {
        add(rid);
        for (const auto& pid : r.interface_port_ids) add(pid);
        if (r.gateway_port_id) add(*r.gateway_port_id);
      }
    }
    for (const auto& [fid, f] : floating_ips_) {
      const Port* backing = backing_port(f);
      const bool hit = in.count(fid) || in.count(f.attached_port_id) || (backing && in.count(backing->id));
      if (hit) {
        add(fid);
        if (backing) add(backing->id);
      }
    }
  }

  std::vector<ResourceRecord> out;
  for (const auto& [k, n] : networks_) if (in.count(k)) out.emplace_back(n);
  for (const auto& [k, s] : subnets_) if (in.count(k)) out.emplace_back(s);
  for (const auto& [k, p] : ports_) if (in.count(k)) out.emplace_back(p);
  for (const auto& [k, r] : routers_) if (in.count(k)) out.emplace_back(r);
  for (const auto& [k, f] : floating_ips_) if (in.count(k)) out.emplace_back(f);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return seq_of(a) < seq_of(b); });
  return out;
}

std::vector<ResourceRef> Topology::external_refs_of(const std::vector<ResourceRecord>& closure) const {
  std::set<std::string> members;
  for (const auto& r : closure) members.insert(id_of(r));
  std::vector<ResourceRef> refs;
  auto note = [&](ResourceKind k, const std::string& rid) {
    if (members.count(rid)) return;
    ResourceRef ref{k, rid};
    if (std::find(refs.begin(), refs.end(), ref) == refs.end()) refs.push_back(ref);
  };
  for (const auto& r : closure) {
    std::visit(overloaded{
                   [&](const Network&) {},
                   [&](const Subnet& s) { note(ResourceKind::Network, s.network_id); },
                   [&](const Port& p) {
                     note(ResourceKind::Subnet, p.subnet_id);
                     if (const Subnet* s = find_subnet(p.subnet_id)) note(ResourceKind::Network, s->network_id);
                   },
                   [&](const Router& rt) {
                     for (const auto& pid : rt.interface_port_ids) note(ResourceKind::Port, pid);
                     if (rt.gateway_port_id) note(ResourceKind::Port, *rt.gateway_port_id);
                   },
                   [&](const FloatingIp& f) { note(ResourceKind::Port, f.attached_port_id); },
               },
               r);
  }
  return refs;
}

ResourceSnapshot Topology::snapshot(ResourceKind kind, const std::string& id, SimTime now) const {
  ResourceSnapshot snap;
  snap.root = {kind, id};
  snap.closure = closure(kind, id);
  snap.external_refs = external_refs_of(snap.closure);
  snap.taken_at = now;
  return snap;
}

ResourceSnapshot Topology::remove(ResourceKind kind, const std::string& id, SimTime now) {
  ResourceSnapshot snap = snapshot(kind, id, now);
  for (auto it = snap.closure.rbegin(); it != snap.closure.rend(); ++it) {
    erase({kind_of(*it), id_of(*it)});
  }
  return snap;
}

void Topology::restore(const ResourceSnapshot& snap) {
  for (const auto& r : snap.closure) {
    if (exists_any(id_of(r))) {
      throw Error(ErrorCode::Conflict, "resource '" + id_of(r) + "' already exists");
    }
  }
  for (const auto& ref : snap.external_refs) {
    if (!exists(ref.kind, ref.id)) {
      throw Error(ErrorCode::StaleSnapshot,
                  "snapshot parent " + std::string(to_string(ref.kind)) + " '" + ref.id + "' no longer exists");
    }
  }
  for (const auto& r : snap.closure) insert(r);
  try {
    validate();
  } catch (const Error&) {
    for (auto it = snap.closure.rbegin(); it != snap.closure.rend(); ++it) erase({kind_of(*it), id_of(*it)});
    throw;
  }
}

void Topology::insert(const ResourceRecord& r) {
  std::visit(overloaded{
                 [&](const Network& n) { networks_.emplace(n.id, n); },
                 [&](const Subnet& s) { subnets_.emplace(s.id, s); },
                 [&](const Port& p) { ports_.emplace(p.id, p); },
                 [&](const Router& rt) { routers_.emplace(rt.id, rt); },
                 [&](const FloatingIp& f) { floating_ips_.emplace(f.id, f); },
             },
             r);
  next_seq_ = std::max(next_seq_, seq_of(r) + 1);
}

void Topology::erase(const ResourceRef& ref) {
  switch (ref.kind) {
    case ResourceKind::Network: networks_.erase(ref.id); break;
    case ResourceKind::Subnet: subnets_.erase(ref.id); break;
    case ResourceKind::Port: ports_.erase(ref.id); break;
    case ResourceKind::Router: routers_.erase(ref.id); break;
    case ResourceKind::FloatingIp: floating_ips_.erase(ref.id); break;
  }
}

}  // namespace faultfabric::fabric
