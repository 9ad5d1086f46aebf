#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faultfabric/agents/agent.hpp"
#include "faultfabric/fabric/fabric.hpp"
#include "faultfabric/orchestrator/injection.hpp"
#include "faultfabric/orchestrator/plan.hpp"
#include "faultfabric/orchestrator/report.hpp"
#include "faultfabric/workload/workload.hpp"

namespace faultfabric::orchestrator {

enum class CampaignState { Pending, Running, Stopped, Finished };

std::string_view to_string(CampaignState s);

struct Options {
  std::uint64_t seed = 0;
  fabric::ClockMode clock = fabric::ClockMode::Deterministic;
};

// Owns the fabric and its agents and turns resource-level requests into
// agent commands on the fabric clock. Every public method is thread safe;
// the fabric only moves when advance()/run_until_idle() is called, by a
// test or by a ClockPump.
class Orchestrator {
 public:
  explicit Orchestrator(fabric::Topology topology, Options options = {});
  ~Orchestrator();
  Orchestrator(const Orchestrator&) = delete;
  Orchestrator& operator=(const Orchestrator&) = delete;

  // Tenant view of the topology. Throws UnknownTenant.
  nlohmann::json topology(const std::string& tenant_id) const;

  // Schedules Inject at now + pre_ms and Clear at the end of the fault
  // window. Throws UnknownResource, NotOwner, ItemBusy, InvalidSpec.
  InjectionHandle inject_resource(const std::string& tenant_id, ResourceKind kind, const std::string& resource_id,
                                  const faultengine::FaultSpec& spec);
  // Deletes the resource at now + pre_ms and restores it outage_ms later.
  // With pre_ms == 0 the delete happens before returning, so Busy and
  // NotFound are thrown here; later failures land in the handle.
  InjectionHandle inject_config_fault(const std::string& tenant_id, ResourceKind kind, const std::string& resource_id,
                                      double outage_ms, double pre_ms = 0, double post_ms = 0);
  // Throws UnknownInjection.
  InjectionHandle injection(const std::string& id) const;
  // Clears or restores right away; the handle ends Aborted. Throws
  // UnknownInjection, NotOwner when a tenant is given and differs,
  // AlreadyFinished for a terminal handle.
  InjectionHandle clear_injection(const std::string& id, const std::optional<std::string>& tenant_id = std::nullopt);

  // Throws PlanInvalid, CampaignAlreadyRunning.
  std::string start_tests(const std::string& tenant_id, const Plan& plan);
  // Throws UnknownCampaign.
  nlohmann::json status_tests(const std::string& campaign_id) const;
  CampaignState campaign_state(const std::string& campaign_id) const;
  // Throws UnknownCampaign, AlreadyFinished.
  void stop_tests(const std::string& campaign_id);
  // Throws UnknownCampaign, NotTerminated.
  ReportBundle report(const std::string& campaign_id) const;
  // Writes the bundle to <dir>/<campaign id> and returns that path.
  std::filesystem::path save_logs(const std::string& campaign_id, const std::filesystem::path& dir) const;
  std::vector<CaseResult> case_results(const std::string& campaign_id) const;

  // Steps the fabric to `until`.
  void advance(SimTime until);
  // Steps in slices while a campaign or injection is pending. Returns
  // false when `limit` was reached first.
  bool run_until_idle(SimTime limit = std::numeric_limits<double>::infinity(), SimTime slice_ms = 1000);
  bool busy() const;
  SimTime now() const;

  // Direct access for tests and embedding. Not synchronized.
  fabric::Fabric& fabric() { return *fabric_; }
  agents::AgentBus& agents() { return *bus_; }
  workload::HookRegistry& hooks() { return hooks_; }
  std::uint64_t seed() const { return options_.seed; }

 private:
  struct HandleState {
    InjectionHandle pub;
    std::vector<fabric::TimerId> timers;
    std::optional<fabric::ResourceSnapshot> snapshot;
    std::vector<std::string> injected;  // items whose Inject was acked
  };

  struct Campaign {
    std::string id;
    std::string tenant_id;
    Plan plan;
    std::vector<TestCase> cases;
    CampaignState state = CampaignState::Pending;
    std::optional<std::size_t> current;
    std::vector<CaseResult> results;
    SimTime started_at = 0;
    SimTime ended_at = 0;
    // Running case.
    std::vector<std::unique_ptr<workload::Workload>> workloads;
    std::vector<fabric::TimerId> timers;
    std::optional<std::uint64_t> observer;
    SimTime drain_deadline = 0;
  };

  HandleState& handle(const std::string& id);
  void check_target(const std::string& tenant_id, ResourceKind kind, const std::string& resource_id) const;
  void check_free(const std::vector<std::string>& items) const;
  InjectionHandle inject_resource_locked(const std::string& tenant_id, ResourceKind kind,
                                         const std::string& resource_id, const faultengine::FaultSpec& spec,
                                         const std::string& campaign_id);
  InjectionHandle inject_config_locked(const std::string& tenant_id, const ConfigFault& fault,
                                       const std::string& campaign_id);
  void enter(HandleState& h, InjectionPhase phase);
  void fail(HandleState& h, ErrorCode code, const std::string& msg);
  void start_fault(const std::string& id);
  void end_fault(const std::string& id);
  void do_delete(const std::string& id);
  void do_restore(const std::string& id);
  void abort_handle(HandleState& h);

  Campaign& campaign(const std::string& id);
  const Campaign& campaign(const std::string& id) const;
  void validate_plan(const std::string& tenant_id, const Plan& plan) const;
  void start_case(Campaign& c, std::size_t index);
  void trigger_injection(Campaign& c);
  void end_case(Campaign& c);
  void finish_case(Campaign& c, CaseState state);
  void collect(Campaign& c, CaseResult& r);
  CampaignSummary summary(const Campaign& c) const;

  Options options_;
  mutable std::mutex mutex_;
  std::unique_ptr<fabric::Fabric> fabric_;
  std::unique_ptr<agents::AgentBus> bus_;
  workload::HookRegistry hooks_;

  std::map<std::string, HandleState> handles_;
  std::map<std::string, std::string> reserved_;  // item id -> handle id
  std::uint64_t next_handle_ = 1;
  std::map<std::string, std::unique_ptr<Campaign>> campaigns_;
  std::uint64_t next_campaign_ = 1;
};

}  // namespace faultfabric::orchestrator
