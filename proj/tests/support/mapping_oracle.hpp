#pragma once

// Brute-force recomputation of resource-to-item resolution from the raw
// topology document.

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "faultfabric/common/types.hpp"
#include "faultfabric/mapper/item_map.hpp"

namespace fftest {

using nlohmann::json;

// Expected (port id, kind, host) triples for a resource, computed from the
// raw document by scanning ports in document order.
struct Expect {
  std::string port;
  faultfabric::mapper::ItemKind kind;
  std::string host;
  friend bool operator==(const Expect&, const Expect&) = default;
};

class Oracle {
 public:
  explicit Oracle(const json& doc) : doc_(doc) {}

  std::vector<Expect> resolve(faultfabric::ResourceKind kind, const std::string& id) const {
    std::vector<Expect> out;
    switch (kind) {
      case faultfabric::ResourceKind::Port:
        for (const auto& p : doc_["ports"])
          if (p["id"] == id) out.push_back(expect(p));
        break;
      case faultfabric::ResourceKind::Subnet:
        for (const auto& p : doc_["ports"])
          if (p["subnet_id"] == id) out.push_back(expect(p));
        break;
      case faultfabric::ResourceKind::Network:
        for (const auto& s : doc_["subnets"]) {
          if (s["network_id"] != id) continue;
          auto part = resolve(faultfabric::ResourceKind::Subnet, s["id"]);
          out.insert(out.end(), part.begin(), part.end());
        }
        break;
      case faultfabric::ResourceKind::Router:
        for (const auto& r : doc_["routers"]) {
          if (r["id"] != id) continue;
          std::set<std::string> mine(r["interface_port_ids"].begin(), r["interface_port_ids"].end());
          if (r["gateway_port_id"].is_string()) mine.insert(r["gateway_port_id"].get<std::string>());
          for (const auto& p : doc_["ports"])
            if (mine.count(p["id"])) out.push_back(expect(p));
        }
        break;
      case faultfabric::ResourceKind::FloatingIp:
        for (const auto& f : doc_["floating_ips"]) {
          if (f["id"] != id) continue;
          for (const auto& p : doc_["ports"])
            if (p["device_owner"] == "network:floatingip" && p["address"] == f["address"]) out.push_back(expect(p));
        }
        break;
    }
    return out;
  }

 private:
  static Expect expect(const json& p) {
    static const std::map<std::string, faultfabric::mapper::ItemKind> kinds = {
        {"compute:nova", faultfabric::mapper::ItemKind::TapDevice},
        {"network:router_interface", faultfabric::mapper::ItemKind::RouterInternalIf},
        {"network:router_gateway", faultfabric::mapper::ItemKind::RouterExternalIf},
        {"network:floatingip", faultfabric::mapper::ItemKind::FloatingIpIf}};
    return {p["id"], kinds.at(p["device_owner"]), p["host_id"]};
  }

  const json& doc_;
};

inline std::vector<Expect> observed(const std::vector<faultfabric::mapper::InjectionItem>& items) {
  std::vector<Expect> out;
  for (const auto& i : items) out.push_back({i.port_id, i.kind, i.location});
  return out;
}

inline std::vector<std::pair<faultfabric::ResourceKind, std::string>> resources(const json& doc) {
  std::vector<std::pair<faultfabric::ResourceKind, std::string>> out;
  const std::pair<const char*, faultfabric::ResourceKind> groups[] = {{"networks", faultfabric::ResourceKind::Network},
                                                         {"subnets", faultfabric::ResourceKind::Subnet},
                                                         {"ports", faultfabric::ResourceKind::Port},
                                                         {"routers", faultfabric::ResourceKind::Router},
                                                         {"floating_ips", faultfabric::ResourceKind::FloatingIp}};
  for (const auto& [key, kind] : groups)
    for (const auto& r : doc[key]) out.emplace_back(kind, r["id"].get<std::string>());
  return out;
}

}  // namespace fftest
