#include "faultfabric/orchestrator/injection.hpp"

namespace faultfabric::orchestrator {

using nlohmann::json;

std::string_view to_string(InjectionPhase p) {
  switch (p) {
    case InjectionPhase::PreInjection: return "PreInjection";
    case InjectionPhase::Injecting: return "Injecting";
    case InjectionPhase::PostInjection: return "PostInjection";
    case InjectionPhase::Completed: return "Completed";
    case InjectionPhase::Aborted: return "Aborted";
  }
  return "PreInjection";
}

json to_json(const InjectionHandle& h) {
  json entered = json::object();
  for (const auto& [phase, t] : h.entered) entered[std::string(to_string(phase))] = t;
  json commands = json::array();
  for (const auto& c : h.commands) {
    json jc = {{"t", c.t}, {"op", c.op}, {"target", c.target}, {"ok", c.ok}};
    if (!c.host.empty()) jc["host"] = c.host;
    if (!c.ok) jc["error"] = c.error;
    commands.push_back(std::move(jc));
  }
  json j = {{"id", h.id},
            {"tenant_id", h.tenant_id},
            {"resource", {{"kind", to_string(h.resource.kind)}, {"id", h.resource.id}}},
            {"items", h.items},
            {"phase", to_string(h.phase)},
            {"created_at_ms", h.created_at},
            {"window_ms", {h.window_start, h.window_end}},
            {"completes_at_ms", h.completes_at},
            {"entered_ms", std::move(entered)},
            {"commands", std::move(commands)}};
  if (h.spec) j["fault"] = faultengine::to_json(*h.spec);
  if (h.outage_ms) j["outage_ms"] = *h.outage_ms;
  if (h.error) j["error"] = {{"code", to_string(*h.error)}, {"message", h.error_message}};
  if (!h.campaign_id.empty()) j["campaign_id"] = h.campaign_id;
  return j;
}

}  // namespace faultfabric::orchestrator
