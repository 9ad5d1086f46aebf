#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "faultfabric/common/flow_event.hpp"
#include "faultfabric/fabric/fabric.hpp"

namespace faultfabric::workload {

struct Bandwidth {
  Protocol protocol = Protocol::UDP;
  double pkts_per_s = 100;
  int payload_bytes = 512;
  double duration_ms = 10000;
  int service_port = 5001;
};

struct RequestResponse {
  int concurrent_users = 25;
  double reqs_per_min = 240;
  double think_time_ms = 0;
  int request_payload_bytes = 512;
  int response_payload_bytes = 20000;
  double timeout_ms = 10000;
  double duration_ms = 60000;
  double link_rate_bytes_per_s = 10e6;
  Protocol protocol = Protocol::TCP;
  int service_port = 80;
};

// Generator implemented outside the library, started and stopped through
// hooks registered under `name`.
struct Custom {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
  double duration_ms = 10000;
};

struct Attach {
  std::vector<std::string> client_port_ids;
  std::optional<std::string> server_port_id;
  std::optional<std::string> balancer_id;
  // Overrides the server port's private address, e.g. with a floating IP.
  std::optional<std::string> server_address;
};

struct WorkloadConfig {
  std::variant<Bandwidth, RequestResponse, Custom> kind = Bandwidth{};
  Attach attach;

  double duration_ms() const;
};

std::string_view kind_name(const WorkloadConfig& c);

// Throws ValidationError on a malformed or out-of-domain document.
WorkloadConfig workload_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WorkloadConfig& c);
// Rates and sizes must be positive. Throws ValidationError.
void validate(const WorkloadConfig& c);

class Workload;

// What a custom generator gets to work with.
struct WorkloadContext {
  fabric::Fabric& fabric;
  std::string tenant_id;
  std::string workload_id;
  const WorkloadConfig& config;
  // Appends a transaction-level event (Sent and its terminal outcome).
  std::function<void(FlowEvent)> report;
};

struct WorkloadHooks {
  std::function<void(WorkloadContext&)> start;
  std::function<void(WorkloadContext&)> stop;
};

class HookRegistry {
 public:
  void add(const std::string& name, WorkloadHooks hooks);
  const WorkloadHooks* find(const std::string& name) const;

 private:
  std::map<std::string, WorkloadHooks> hooks_;
};

// A deployed generator. Transactions are the normalized stream consumed by
// compute_metrics: one Sent per request or datagram plus exactly one
// terminal event (Delivered, Dropped, TimedOut, Rejected or Unreachable).
// Deliveries of duplicated copies appear as Duplicated and never count as
// completions.
class Workload {
 public:
  virtual ~Workload();

  const std::string& id() const { return id_; }
  const std::string& tenant_id() const { return tenant_id_; }
  const WorkloadConfig& config() const { return config_; }
  SimTime start_time() const { return start_; }
  SimTime end_time() const { return start_ + config_.duration_ms(); }

  // No new traffic after this; in-flight transactions still resolve.
  virtual void stop() = 0;
  // Every issued transaction has resolved and no more will be issued.
  virtual bool finished() const = 0;

  const std::vector<FlowEvent>& transactions() const { return transactions_; }

 protected:
  Workload(fabric::Fabric& fabric, std::string tenant_id, WorkloadConfig config, std::string id);
  void report(FlowEvent e) { transactions_.push_back(std::move(e)); }

  fabric::Fabric& fabric_;
  std::string tenant_id_;
  WorkloadConfig config_;
  std::string id_;
  SimTime start_ = 0;
  std::vector<FlowEvent> transactions_;
  // Timers and listeners hold a weak copy; destruction disarms them.
  std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

// The checks deploy_workload runs, without starting anything. Returns the
// server address when the workload has one.
std::optional<std::string> check_attach(const fabric::Topology& topology, const std::string& tenant_id,
                                        const WorkloadConfig& config, const HookRegistry* hooks = nullptr);

// Validates attach points and starts generating at fabric.now(). Throws
// BadAttach for missing or non-VM ports or an unknown balancer, NotOwner
// when an attach point belongs to another tenant.
std::unique_ptr<Workload> deploy_workload(fabric::Fabric& fabric, const std::string& tenant_id,
                                          const WorkloadConfig& config, const std::string& workload_id = "wl",
                                          const HookRegistry* hooks = nullptr);

}  // namespace faultfabric::workload
