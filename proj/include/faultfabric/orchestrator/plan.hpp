#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faultfabric/common/types.hpp"
#include "faultfabric/faultengine/fault_spec.hpp"
#include "faultfabric/workload/workload.hpp"

namespace faultfabric::orchestrator {

// Controlled deletion of a resource followed by automatic restoration.
struct ConfigFault {
  ResourceRef target;
  double outage_ms = 0;
  double pre_ms = 0;
  double post_ms = 0;
};

struct TestCase {
  std::string id;
  // Traffic fault: target + spec. Configuration fault: config_fault.
  // Neither: a fault-free run (only the generated baseline case).
  std::optional<ResourceRef> target;
  std::optional<faultengine::FaultSpec> spec;
  std::optional<ConfigFault> config_fault;
  workload::WorkloadConfig workload;
  int repetitions = 1;
  std::optional<int> trigger_repetition;
  bool baseline = false;

  // Repetition at whose start the injection is requested; default midpoint.
  int trigger() const { return trigger_repetition.value_or(repetitions / 2); }
  double repetition_ms() const { return workload.duration_ms(); }
  // Injection request time, relative to case start.
  double injection_offset_ms() const { return trigger() * repetition_ms(); }
  // Planned [start, end) of the fault window, relative to case start.
  std::optional<std::pair<double, double>> fault_window() const;
  // Long enough for every repetition and the whole injection timeline.
  double duration_ms() const;
};

struct Plan {
  std::string tenant_id;
  std::string name;
  // Adds a fault-free copy of the first case as case 0.
  bool baseline = false;
  std::vector<TestCase> cases;

  // The cases as executed: the baseline (if requested) followed by `cases`.
  std::vector<TestCase> expanded() const;
};

// Shape and domain checks only; ownership is checked against a topology at
// campaign start. Throws PlanInvalid.
Plan plan_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const TestCase& c);
nlohmann::json to_json(const Plan& plan);

}  // namespace faultfabric::orchestrator
