#include "faultfabric/orchestrator/plan.hpp"

#include <algorithm>

#include "faultfabric/common/error.hpp"

namespace faultfabric::orchestrator {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::PlanInvalid, msg); }

double non_negative(const json& j, const char* key, double dflt, const std::string& where) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number()) invalid(where + ": " + key + " must be a number");
  const double v = j[key].get<double>();
  if (v < 0) invalid(where + ": " + key + " must be >= 0");
  return v;
}

ResourceRef ref_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("id") || !j["kind"].is_string() || !j["id"].is_string())
    invalid(where + ": target needs string 'kind' and 'id'");
  try {
    return {resource_kind_from_string(j["kind"].get<std::string>()), j["id"].get<std::string>()};
  } catch (const Error& e) {
    invalid(where + ": " + e.what());
  }
}

json ref_to_json(const ResourceRef& r) { return {{"kind", to_string(r.kind)}, {"id", r.id}}; }

TestCase case_from_json(const json& j, std::size_t index) {
  const std::string where = "case " + std::to_string(index);
  if (!j.is_object()) invalid(where + " must be an object");
  TestCase c;
  c.id = j.value("id", "case-" + std::to_string(index + 1));
  if (c.id.empty() || c.id == "baseline") invalid(where + ": id '" + c.id + "' is reserved or empty");

  const bool has_fault = j.contains("fault");
  const bool has_config = j.contains("config_fault");
  if (has_fault == has_config) invalid(where + ": exactly one of 'fault' and 'config_fault' is required");

  if (has_fault) {
    if (!j.contains("target")) invalid(where + ": 'fault' needs a 'target'");
    c.target = ref_from_json(j["target"], where);
    try {
      c.spec = faultengine::fault_spec_from_json(j["fault"]);
    } catch (const Error& e) {
      invalid(where + ": " + e.what());
    }
  } else {
    const json& cf = j["config_fault"];
    if (!cf.is_object()) invalid(where + ": config_fault must be an object");
    ConfigFault f;
    f.target = ref_from_json(cf, where);
    f.outage_ms = non_negative(cf, "outage_ms", -1, where);
    if (!(f.outage_ms > 0)) invalid(where + ": config_fault needs outage_ms > 0");
    f.pre_ms = non_negative(cf, "pre_ms", 0, where);
    f.post_ms = non_negative(cf, "post_ms", 0, where);
    c.config_fault = f;
  }

  if (!j.contains("workload")) invalid(where + ": 'workload' is required");
  try {
    c.workload = workload::workload_config_from_json(j["workload"]);
  } catch (const Error& e) {
    invalid(where + ": " + e.what());
  }

  if (j.contains("repetitions")) {
    if (!j["repetitions"].is_number_integer() || j["repetitions"].get<int>() < 1)
      invalid(where + ": repetitions must be an integer >= 1");
    c.repetitions = j["repetitions"].get<int>();
  }
  if (j.contains("trigger_repetition")) {
    if (!j["trigger_repetition"].is_number_integer()) invalid(where + ": trigger_repetition must be an integer");
    c.trigger_repetition = j["trigger_repetition"].get<int>();
    if (*c.trigger_repetition < 0 || *c.trigger_repetition >= c.repetitions)
      invalid(where + ": trigger_repetition must be in [0, repetitions)");
  }
  return c;
}

}  // namespace

std::optional<std::pair<double, double>> TestCase::fault_window() const {
  if (baseline) return std::nullopt;
  const double at = injection_offset_ms();
  if (spec) return std::pair{at + spec->timing.pre_ms, at + spec->timing.pre_ms + spec->timing.inject_ms};
  if (config_fault) return std::pair{at + config_fault->pre_ms, at + config_fault->pre_ms + config_fault->outage_ms};
  return std::nullopt;
}

double TestCase::duration_ms() const {
  double timeline = 0;
  if (spec) timeline = spec->timing.pre_ms + spec->timing.inject_ms + spec->timing.post_ms;
  if (config_fault) timeline = config_fault->pre_ms + config_fault->outage_ms + config_fault->post_ms;
  return std::max(repetitions * repetition_ms(), injection_offset_ms() + timeline);
}

std::vector<TestCase> Plan::expanded() const {
  std::vector<TestCase> out;
  if (baseline && !cases.empty()) {
    // Same workload and length as the first case, nothing injected.
    TestCase b = cases.front();
    b.id = "baseline";
    b.baseline = true;
    out.push_back(std::move(b));
  }
  out.insert(out.end(), cases.begin(), cases.end());
  return out;
}

Plan plan_from_json(const json& doc) {
  if (!doc.is_object()) invalid("plan must be an object");
  Plan p;
  p.tenant_id = doc.value("tenant", std::string());
  p.name = doc.value("name", std::string());
  if (doc.contains("baseline")) {
    if (!doc["baseline"].is_boolean()) invalid("baseline must be a boolean");
    p.baseline = doc["baseline"].get<bool>();
  }
  const json cases = doc.value("cases", json::array());
  if (!cases.is_array()) invalid("cases must be an array");
  for (std::size_t i = 0; i < cases.size(); ++i) {
    TestCase c = case_from_json(cases[i], i);
    for (const auto& other : p.cases) {
      if (other.id == c.id) invalid("duplicate case id '" + c.id + "'");
    }
    p.cases.push_back(std::move(c));
  }
  return p;
}

json to_json(const TestCase& c) {
  json j = {{"id", c.id}};
  if (c.baseline) {
    j["baseline"] = true;
  } else if (c.spec) {
    j["target"] = ref_to_json(*c.target);
    j["fault"] = faultengine::to_json(*c.spec);
  } else if (c.config_fault) {
    json cf = ref_to_json(c.config_fault->target);
    cf["outage_ms"] = c.config_fault->outage_ms;
    cf["pre_ms"] = c.config_fault->pre_ms;
    cf["post_ms"] = c.config_fault->post_ms;
    j["config_fault"] = std::move(cf);
  }
  j["workload"] = workload::to_json(c.workload);
  j["repetitions"] = c.repetitions;
  j["trigger_repetition"] = c.trigger();
  return j;
}

json to_json(const Plan& plan) {
  json cases = json::array();
  for (const auto& c : plan.cases) cases.push_back(to_json(c));
  return {{"tenant", plan.tenant_id}, {"name", plan.name}, {"baseline", plan.baseline}, {"cases", std::move(cases)}};
}

}  // namespace faultfabric::orchestrator
