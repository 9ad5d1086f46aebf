#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faultfabric/common/error.hpp"
#include "faultfabric/common/types.hpp"
#include "faultfabric/faultengine/fault_spec.hpp"

namespace faultfabric::orchestrator {

enum class InjectionPhase { PreInjection, Injecting, PostInjection, Completed, Aborted };

std::string_view to_string(InjectionPhase p);

// One control action taken on behalf of a handle.
struct CommandRecord {
  SimTime t = 0;
  std::string op;    // inject | clear | delete | restore
  std::string host;  // agent host; empty for delete/restore
  std::string target;
  bool ok = true;
  std::string error;
};

struct InjectionHandle {
  std::string id;
  std::string tenant_id;
  ResourceRef resource;
  std::optional<faultengine::FaultSpec> spec;  // traffic fault
  std::optional<double> outage_ms;             // configuration fault
  std::vector<std::string> items;
  InjectionPhase phase = InjectionPhase::PreInjection;
  SimTime created_at = 0;
  // Planned window start/end of the fault, absolute.
  SimTime window_start = 0;
  SimTime window_end = 0;
  SimTime completes_at = 0;
  // When each phase was actually entered.
  std::map<InjectionPhase, SimTime> entered;
  std::vector<CommandRecord> commands;
  std::optional<ErrorCode> error;
  std::string error_message;
  std::string campaign_id;

  bool terminal() const { return phase == InjectionPhase::Completed || phase == InjectionPhase::Aborted; }
};

nlohmann::json to_json(const InjectionHandle& h);

}  // namespace faultfabric::orchestrator
