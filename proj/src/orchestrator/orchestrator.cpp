#include "faultfabric/orchestrator/orchestrator.hpp"

#include <algorithm>

#include "faultfabric/common/error.hpp"
#include "faultfabric/mapper/topology_graph.hpp"

namespace faultfabric::orchestrator {

using nlohmann::json;

namespace {

// Case drain: how long to wait for in-flight transactions after the planned
// end before cutting them off.
constexpr double kDrainLimitMs = 60000;
constexpr double kDrainPollMs = 1000;

std::string describe(const Error& e) { return std::string(to_string(e.code())) + ": " + e.what(); }

}  // namespace

std::string_view to_string(CampaignState s) {
  switch (s) {
    case CampaignState::Pending: return "Pending";
    case CampaignState::Running: return "Running";
    case CampaignState::Stopped: return "Stopped";
    case CampaignState::Finished: return "Finished";
  }
  return "Pending";
}

Orchestrator::Orchestrator(fabric::Topology topology, Options options) : options_(options) {
  fabric_ = std::make_unique<fabric::Fabric>(std::move(topology), options_.clock);
  bus_ = std::make_unique<agents::AgentBus>(*fabric_, options_.seed);
}

Orchestrator::~Orchestrator() {
  campaigns_.clear();
  bus_.reset();
  fabric_.reset();
}

json Orchestrator::topology(const std::string& tenant_id) const {
  std::lock_guard lock(mutex_);
  return mapper::get_network_topology(fabric_->topology(), tenant_id).to_json();
}

// ---- injections -----------------------------------------------------------

Orchestrator::HandleState& Orchestrator::handle(const std::string& id) {
  auto it = handles_.find(id);
  if (it == handles_.end()) throw Error(ErrorCode::UnknownInjection, "no injection " + id);
  return it->second;
}

void Orchestrator::check_target(const std::string& tenant_id, ResourceKind kind, const std::string& id) const {
  const fabric::Topology& topo = fabric_->topology();
  if (!topo.exists(kind, id))
    throw Error(ErrorCode::UnknownResource, std::string(to_string(kind)) + " " + id + " does not exist");
  if (topo.tenant_of(kind, id) != tenant_id)
    throw Error(ErrorCode::NotOwner, std::string(to_string(kind)) + " " + id + " is not owned by " + tenant_id);
}

void Orchestrator::check_free(const std::vector<std::string>& items) const {
  for (const auto& item : items) {
    auto it = reserved_.find(item);
    if (it != reserved_.end())
      throw Error(ErrorCode::ItemBusy, "item " + item + " is taken by injection " + it->second);
    if (bus_->has_active(item)) throw Error(ErrorCode::ItemBusy, "item " + item + " has an active injection");
  }
}

void Orchestrator::enter(HandleState& h, InjectionPhase phase) {
  h.pub.phase = phase;
  h.pub.entered[phase] = fabric_->now();
  if (h.pub.terminal()) {
    for (const auto& item : h.pub.items) {
      auto it = reserved_.find(item);
      if (it != reserved_.end() && it->second == h.pub.id) reserved_.erase(it);
    }
  }
}

void Orchestrator::fail(HandleState& h, ErrorCode code, const std::string& msg) {
  if (!h.pub.error) {
    h.pub.error = code;
    h.pub.error_message = msg;
  }
  abort_handle(h);
}

void Orchestrator::abort_handle(HandleState& h) {
  if (h.pub.terminal()) return;
  for (auto t : h.timers) fabric_->cancel(t);
  h.timers.clear();
  const SimTime now = fabric_->now();
  for (const auto& item_id : h.injected) {
    const mapper::InjectionItem* item = fabric_->item_map().find(item_id);
    if (!item) continue;
    agents::AgentReply r = bus_->send(item->location, agents::command::Clear{item_id});
    h.pub.commands.push_back({now, "clear", item->location, item_id, r.ok, r.message});
  }
  h.injected.clear();
  if (h.snapshot) {
    try {
      fabric_->restore_resource(*h.snapshot);
      h.pub.commands.push_back({now, "restore", "", h.pub.resource.id, true, ""});
      h.snapshot.reset();
    } catch (const Error& e) {
      h.pub.commands.push_back({now, "restore", "", h.pub.resource.id, false, e.what()});
      if (!h.pub.error) {
        h.pub.error = ErrorCode::RestoreFailed;
        h.pub.error_message = describe(e);
      }
    }
  }
  enter(h, InjectionPhase::Aborted);
}

InjectionHandle Orchestrator::inject_resource(const std::string& tenant_id, ResourceKind kind,
                                              const std::string& resource_id, const faultengine::FaultSpec& spec) {
  std::lock_guard lock(mutex_);
  return inject_resource_locked(tenant_id, kind, resource_id, spec, "");
}

InjectionHandle Orchestrator::inject_resource_locked(const std::string& tenant_id, ResourceKind kind,
                                                     const std::string& resource_id,
                                                     const faultengine::FaultSpec& spec,
                                                     const std::string& campaign_id) {
  faultengine::validate(spec);
  check_target(tenant_id, kind, resource_id);
  std::vector<std::string> items;
  for (const auto& item : fabric_->item_map().resolve(kind, resource_id)) items.push_back(item.id);
  if (items.empty())
    throw Error(ErrorCode::UnknownResource,
                std::string(to_string(kind)) + " " + resource_id + " has no injection items");
  check_free(items);

  const std::string id = "inj-" + std::to_string(next_handle_++);
  const SimTime t = fabric_->now();
  HandleState& h = handles_[id];
  h.pub.id = id;
  h.pub.tenant_id = tenant_id;
  h.pub.resource = {kind, resource_id};
  h.pub.spec = spec;
  h.pub.items = items;
  h.pub.created_at = t;
  h.pub.window_start = t + spec.timing.pre_ms;
  h.pub.window_end = h.pub.window_start + spec.timing.inject_ms;
  h.pub.completes_at = h.pub.window_end + spec.timing.post_ms;
  h.pub.campaign_id = campaign_id;
  for (const auto& item : items) reserved_[item] = id;
  enter(h, InjectionPhase::PreInjection);

  h.timers.push_back(fabric_->schedule_control_at(h.pub.window_end, [this, id] { end_fault(id); }));
  if (spec.timing.pre_ms > 0) {
    h.timers.push_back(fabric_->schedule_control_at(h.pub.window_start, [this, id] { start_fault(id); }));
  } else {
    start_fault(id);
  }
  return handles_.at(id).pub;
}

void Orchestrator::start_fault(const std::string& id) {
  HandleState& h = handle(id);
  if (h.pub.terminal()) return;
  enter(h, InjectionPhase::Injecting);
  for (const auto& item_id : h.pub.items) {
    const mapper::InjectionItem* item = fabric_->item_map().find(item_id);
    if (!item) {
      h.pub.commands.push_back({fabric_->now(), "inject", "", item_id, false, "item no longer exists"});
      fail(h, ErrorCode::NotFound, "item " + item_id + " no longer exists");
      return;
    }
    // The agent opens the window at origin + pre_ms, which is now.
    agents::AgentReply r =
        bus_->send(item->location, agents::command::Inject{id, item_id, *h.pub.spec, h.pub.created_at});
    h.pub.commands.push_back({fabric_->now(), "inject", item->location, item_id, r.ok, r.message});
    if (!r.ok) {
      fail(h, r.error.value_or(ErrorCode::Internal), r.message);
      return;
    }
    h.injected.push_back(item_id);
  }
}

void Orchestrator::end_fault(const std::string& id) {
  HandleState& h = handle(id);
  if (h.pub.terminal()) return;
  for (const auto& item_id : h.injected) {
    const mapper::InjectionItem* item = fabric_->item_map().find(item_id);
    const std::string host = item ? item->location : "";
    agents::AgentReply r = item ? bus_->send(host, agents::command::Clear{item_id})
                                : agents::AgentReply::failure(ErrorCode::NotFound, "item vanished");
    h.pub.commands.push_back({fabric_->now(), "clear", host, item_id, r.ok, r.message});
  }
  h.injected.clear();
  enter(h, InjectionPhase::PostInjection);
  if (h.pub.completes_at > fabric_->now()) {
    h.timers.push_back(fabric_->schedule_at(h.pub.completes_at, [this, id] {
      HandleState& hh = handle(id);
      if (!hh.pub.terminal()) enter(hh, InjectionPhase::Completed);
    }));
  } else {
    enter(h, InjectionPhase::Completed);
  }
}

InjectionHandle Orchestrator::inject_config_fault(const std::string& tenant_id, ResourceKind kind,
                                                  const std::string& resource_id, double outage_ms, double pre_ms,
                                                  double post_ms) {
  std::lock_guard lock(mutex_);
  return inject_config_locked(tenant_id, ConfigFault{{kind, resource_id}, outage_ms, pre_ms, post_ms}, "");
}

InjectionHandle Orchestrator::inject_config_locked(const std::string& tenant_id, const ConfigFault& fault,
                                                   const std::string& campaign_id) {
  if (!(fault.outage_ms > 0) || fault.pre_ms < 0 || fault.post_ms < 0)
    throw Error(ErrorCode::ValidationError, "outage_ms must be > 0 and pre/post >= 0");
  const auto [kind, resource_id] = fault.target;
  check_target(tenant_id, kind, resource_id);

  // Items of every port that disappears with the resource.
  std::vector<std::string> items;
  for (const auto& rec : fabric_->snapshot_resource(kind, resource_id).closure) {
    if (const auto* port = std::get_if<fabric::Port>(&rec)) {
      if (const auto* item = fabric_->item_map().item_for_port(port->id)) items.push_back(item->id);
    }
  }
  check_free(items);

  const std::string id = "inj-" + std::to_string(next_handle_++);
  const SimTime t = fabric_->now();
  HandleState& h = handles_[id];
  h.pub.id = id;
  h.pub.tenant_id = tenant_id;
  h.pub.resource = fault.target;
  h.pub.outage_ms = fault.outage_ms;
  h.pub.items = items;
  h.pub.created_at = t;
  h.pub.window_start = t + fault.pre_ms;
  h.pub.window_end = h.pub.window_start + fault.outage_ms;
  h.pub.completes_at = h.pub.window_end + fault.post_ms;
  h.pub.campaign_id = campaign_id;
  for (const auto& item : items) reserved_[item] = id;
  enter(h, InjectionPhase::PreInjection);

  if (fault.pre_ms > 0) {
    h.timers.push_back(fabric_->schedule_control_at(h.pub.window_start, [this, id] { do_delete(id); }));
  } else {
    try {
      h.snapshot = fabric_->delete_resource(kind, resource_id);
    } catch (const Error&) {
      for (const auto& item : items) reserved_.erase(item);
      handles_.erase(id);
      --next_handle_;
      throw;
    }
    h.pub.commands.push_back({t, "delete", "", resource_id, true, ""});
    enter(h, InjectionPhase::Injecting);
    h.timers.push_back(fabric_->schedule_control_at(h.pub.window_end, [this, id] { do_restore(id); }));
  }
  return handles_.at(id).pub;
}

void Orchestrator::do_delete(const std::string& id) {
  HandleState& h = handle(id);
  if (h.pub.terminal()) return;
  try {
    h.snapshot = fabric_->delete_resource(h.pub.resource.kind, h.pub.resource.id);
  } catch (const Error& e) {
    h.pub.commands.push_back({fabric_->now(), "delete", "", h.pub.resource.id, false, e.what()});
    fail(h, e.code(), e.what());
    return;
  }
  h.pub.commands.push_back({fabric_->now(), "delete", "", h.pub.resource.id, true, ""});
  enter(h, InjectionPhase::Injecting);
  h.timers.push_back(fabric_->schedule_control_at(h.pub.window_end, [this, id] { do_restore(id); }));
}

void Orchestrator::do_restore(const std::string& id) {
  HandleState& h = handle(id);
  if (h.pub.terminal() || !h.snapshot) return;
  try {
    fabric_->restore_resource(*h.snapshot);
  } catch (const Error& e) {
    h.pub.commands.push_back({fabric_->now(), "restore", "", h.pub.resource.id, false, e.what()});
    // The snapshot is kept so a later retry is possible; nothing else is.
    h.pub.error = ErrorCode::RestoreFailed;
    h.pub.error_message = describe(e);
    for (auto t : h.timers) fabric_->cancel(t);
    h.timers.clear();
    enter(h, InjectionPhase::Aborted);
    return;
  }
  h.snapshot.reset();
  h.pub.commands.push_back({fabric_->now(), "restore", "", h.pub.resource.id, true, ""});
  enter(h, InjectionPhase::PostInjection);
  if (h.pub.completes_at > fabric_->now()) {
    h.timers.push_back(fabric_->schedule_at(h.pub.completes_at, [this, id] {
      HandleState& hh = handle(id);
      if (!hh.pub.terminal()) enter(hh, InjectionPhase::Completed);
    }));
  } else {
    enter(h, InjectionPhase::Completed);
  }
}

InjectionHandle Orchestrator::injection(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = handles_.find(id);
  if (it == handles_.end()) throw Error(ErrorCode::UnknownInjection, "no injection " + id);
  return it->second.pub;
}

InjectionHandle Orchestrator::clear_injection(const std::string& id, const std::optional<std::string>& tenant_id) {
  std::lock_guard lock(mutex_);
  HandleState& h = handle(id);
  if (tenant_id && *tenant_id != h.pub.tenant_id)
    throw Error(ErrorCode::NotOwner, "injection " + id + " belongs to another tenant");
  if (h.pub.terminal()) throw Error(ErrorCode::AlreadyFinished, "injection " + id + " already ended");
  abort_handle(h);
  return h.pub;
}

// ---- campaigns ------------------------------------------------------------

Orchestrator::Campaign& Orchestrator::campaign(const std::string& id) {
  auto it = campaigns_.find(id);
  if (it == campaigns_.end()) throw Error(ErrorCode::UnknownCampaign, "no campaign " + id);
  return *it->second;
}

const Orchestrator::Campaign& Orchestrator::campaign(const std::string& id) const {
  auto it = campaigns_.find(id);
  if (it == campaigns_.end()) throw Error(ErrorCode::UnknownCampaign, "no campaign " + id);
  return *it->second;
}

void Orchestrator::validate_plan(const std::string& tenant_id, const Plan& plan) const {
  const fabric::Topology& topo = fabric_->topology();
  if (!topo.tenants().count(tenant_id)) throw Error(ErrorCode::PlanInvalid, "unknown tenant " + tenant_id);
  if (!plan.tenant_id.empty() && plan.tenant_id != tenant_id)
    throw Error(ErrorCode::PlanInvalid, "plan is for tenant " + plan.tenant_id + ", not " + tenant_id);
  for (const auto& c : plan.cases) {
    try {
      if (c.spec) {
        check_target(tenant_id, c.target->kind, c.target->id);
        if (fabric_->item_map().resolve(c.target->kind, c.target->id).empty())
          throw Error(ErrorCode::UnknownResource, c.target->id + " has no injection items");
      }
      if (c.config_fault) check_target(tenant_id, c.config_fault->target.kind, c.config_fault->target.id);
      workload::check_attach(topo, tenant_id, c.workload, &hooks_);
    } catch (const Error& e) {
      throw Error(ErrorCode::PlanInvalid, "case " + c.id + ": " + describe(e));
    }
  }
}

std::string Orchestrator::start_tests(const std::string& tenant_id, const Plan& plan) {
  std::lock_guard lock(mutex_);
  validate_plan(tenant_id, plan);
  for (const auto& [id, c] : campaigns_) {
    if (c->tenant_id == tenant_id && (c->state == CampaignState::Pending || c->state == CampaignState::Running))
      throw Error(ErrorCode::CampaignAlreadyRunning, "tenant " + tenant_id + " already runs campaign " + id);
  }
  const std::string id = "campaign-" + std::to_string(next_campaign_++);
  auto c = std::make_unique<Campaign>();
  c->id = id;
  c->tenant_id = tenant_id;
  c->plan = plan;
  c->cases = plan.expanded();
  for (const auto& tc : c->cases) {
    CaseResult r;
    r.test_case = tc;
    c->results.push_back(std::move(r));
  }
  c->started_at = fabric_->now();
  Campaign* cp = c.get();
  campaigns_[id] = std::move(c);
  if (cp->cases.empty()) {
    cp->state = CampaignState::Finished;
    cp->ended_at = cp->started_at;
  } else {
    cp->timers.push_back(fabric_->schedule_at(fabric_->now(), [this, cp] { start_case(*cp, 0); }));
  }
  return id;
}

void Orchestrator::start_case(Campaign& c, std::size_t index) {
  c.timers.clear();
  c.state = CampaignState::Running;
  c.current = index;
  CaseResult& r = c.results[index];
  const TestCase& tc = c.cases[index];
  const SimTime t0 = fabric_->now();
  r.state = CaseState::Running;
  r.started_at = t0;

  Campaign* cp = &c;
  c.observer = fabric_->observe([cp, index](const FlowEvent& e) {
    if (e.tenant_id == cp->tenant_id) cp->results[index].events.push_back(e);
  });

  auto deploy = [this, cp, index](int rep) {
    Campaign& cc = *cp;
    if (!cc.workloads.empty()) cc.workloads.back()->stop();
    const std::string wid = cc.id + "/" + cc.cases[index].id + "/r" + std::to_string(rep);
    try {
      cc.workloads.push_back(workload::deploy_workload(*fabric_, cc.tenant_id, cc.cases[index].workload, wid, &hooks_));
    } catch (const Error& e) {
      cc.results[index].error = "repetition " + std::to_string(rep) + ": " + describe(e);
      finish_case(cc, CaseState::Aborted);
      return false;
    }
    return true;
  };

  if (!deploy(0)) return;
  for (int rep = 1; rep < tc.repetitions; ++rep) {
    c.timers.push_back(fabric_->schedule_at(t0 + rep * tc.repetition_ms(), [deploy, rep] { deploy(rep); }));
  }
  if (!tc.baseline && (tc.spec || tc.config_fault)) {
    if (tc.injection_offset_ms() > 0) {
      c.timers.push_back(fabric_->schedule_at(t0 + tc.injection_offset_ms(), [this, cp] { trigger_injection(*cp); }));
    } else {
      trigger_injection(c);
    }
  }
  c.drain_deadline = t0 + tc.duration_ms() + kDrainLimitMs;
  c.timers.push_back(fabric_->schedule_at(t0 + tc.duration_ms(), [this, cp] { end_case(*cp); }));
}

void Orchestrator::trigger_injection(Campaign& c) {
  const std::size_t index = *c.current;
  const TestCase& tc = c.cases[index];
  CaseResult& r = c.results[index];
  try {
    InjectionHandle h = tc.spec ? inject_resource_locked(c.tenant_id, tc.target->kind, tc.target->id, *tc.spec, c.id)
                                : inject_config_locked(c.tenant_id, *tc.config_fault, c.id);
    r.injection_id = h.id;
  } catch (const Error& e) {
    r.error = "injection: " + describe(e);
  }
}

void Orchestrator::end_case(Campaign& c) {
  for (auto& w : c.workloads) w->stop();
  const CaseResult& r = c.results[*c.current];
  bool drained = std::all_of(c.workloads.begin(), c.workloads.end(), [](const auto& w) { return w->finished(); });
  if (r.injection_id && !handles_.at(*r.injection_id).pub.terminal()) drained = false;
  if (drained || fabric_->now() >= c.drain_deadline) {
    const bool failed = !r.error.empty() || (r.injection_id && handles_.at(*r.injection_id).pub.error);
    finish_case(c, failed ? CaseState::Aborted : CaseState::Completed);
    return;
  }
  Campaign* cp = &c;
  c.timers.push_back(fabric_->schedule_after(kDrainPollMs, [this, cp] { end_case(*cp); }));
}

void Orchestrator::collect(Campaign& c, CaseResult& r) {
  r.transactions.clear();
  for (const auto& w : c.workloads) {
    r.transactions.insert(r.transactions.end(), w->transactions().begin(), w->transactions().end());
  }
  std::stable_sort(r.transactions.begin(), r.transactions.end(),
                   [](const FlowEvent& a, const FlowEvent& b) { return a.t < b.t; });
  r.ended_at = fabric_->now();
  r.fault_window.reset();
  if (r.injection_id) {
    const InjectionHandle& h = handles_.at(*r.injection_id).pub;
    auto in = h.entered.find(InjectionPhase::Injecting);
    if (in != h.entered.end()) {
      SimTime out = r.ended_at;
      for (auto p : {InjectionPhase::PostInjection, InjectionPhase::Aborted}) {
        auto it = h.entered.find(p);
        if (it != h.entered.end()) out = std::min(out, it->second);
      }
      r.fault_window = std::pair{in->second - r.started_at, out - r.started_at};
    }
  }
  compute_case_metrics(r);
}

void Orchestrator::finish_case(Campaign& c, CaseState state) {
  for (auto t : c.timers) fabric_->cancel(t);
  c.timers.clear();
  const std::size_t index = *c.current;
  CaseResult& r = c.results[index];
  if (r.injection_id) {
    HandleState& h = handles_.at(*r.injection_id);
    if (!h.pub.terminal()) abort_handle(h);
  }
  collect(c, r);
  if (c.observer) fabric_->unobserve(*c.observer);
  c.observer.reset();
  c.workloads.clear();
  r.state = state;
  if (index + 1 < c.cases.size()) {
    start_case(c, index + 1);
    return;
  }
  c.state = CampaignState::Finished;
  c.current.reset();
  c.ended_at = fabric_->now();
}

json Orchestrator::status_tests(const std::string& campaign_id) const {
  std::lock_guard lock(mutex_);
  const Campaign& c = campaign(campaign_id);
  json cases = json::array();
  for (std::size_t i = 0; i < c.results.size(); ++i) {
    const CaseResult& r = c.results[i];
    json jc = {{"id", r.test_case.id}, {"baseline", r.test_case.baseline}, {"state", to_string(r.state)}};
    jc["injection_id"] = r.injection_id ? json(*r.injection_id) : json(nullptr);
    jc["injection_phase"] =
        r.injection_id ? json(to_string(handles_.at(*r.injection_id).pub.phase)) : json(nullptr);
    jc["error"] = r.error;
    std::optional<workload::MetricsSummary> m = r.metrics;
    if (r.state == CaseState::Running) {
      // Partial metrics over what has resolved so far.
      CaseResult partial;
      partial.test_case = r.test_case;
      partial.started_at = r.started_at;
      partial.ended_at = fabric_->now();
      for (const auto& w : c.workloads)
        partial.transactions.insert(partial.transactions.end(), w->transactions().begin(), w->transactions().end());
      std::stable_sort(partial.transactions.begin(), partial.transactions.end(),
                       [](const FlowEvent& a, const FlowEvent& b) { return a.t < b.t; });
      compute_case_metrics(partial);
      m = partial.metrics;
    }
    jc["metrics"] = m ? metrics_row(*m) : json(nullptr);
    cases.push_back(std::move(jc));
  }
  return {{"id", c.id},
          {"tenant_id", c.tenant_id},
          {"name", c.plan.name},
          {"state", to_string(c.state)},
          {"current_case", c.current ? json(*c.current) : json(nullptr)},
          {"now_ms", fabric_->now()},
          {"cases", std::move(cases)}};
}

CampaignState Orchestrator::campaign_state(const std::string& campaign_id) const {
  std::lock_guard lock(mutex_);
  return campaign(campaign_id).state;
}

void Orchestrator::stop_tests(const std::string& campaign_id) {
  std::lock_guard lock(mutex_);
  Campaign& c = campaign(campaign_id);
  if (c.state == CampaignState::Finished || c.state == CampaignState::Stopped)
    throw Error(ErrorCode::AlreadyFinished, "campaign " + campaign_id + " is " + std::string(to_string(c.state)));
  for (auto t : c.timers) fabric_->cancel(t);
  c.timers.clear();
  if (c.current) {
    CaseResult& r = c.results[*c.current];
    // Safety first: clear and restore now rather than at the planned time.
    if (r.injection_id) abort_handle(handles_.at(*r.injection_id));
    for (auto& w : c.workloads) w->stop();
    collect(c, r);
    if (c.observer) fabric_->unobserve(*c.observer);
    c.observer.reset();
    c.workloads.clear();
    r.state = CaseState::Aborted;
    r.error = "stopped";
  }
  c.state = CampaignState::Stopped;
  c.current.reset();
  c.ended_at = fabric_->now();
}

CampaignSummary Orchestrator::summary(const Campaign& c) const {
  return {c.id, c.tenant_id, c.plan.name, std::string(to_string(c.state)), c.started_at, c.ended_at};
}

ReportBundle Orchestrator::report(const std::string& campaign_id) const {
  std::lock_guard lock(mutex_);
  const Campaign& c = campaign(campaign_id);
  if (c.state != CampaignState::Finished && c.state != CampaignState::Stopped)
    throw Error(ErrorCode::NotTerminated, "campaign " + campaign_id + " is still " + std::string(to_string(c.state)));
  return build_bundle(summary(c), c.results);
}

std::filesystem::path Orchestrator::save_logs(const std::string& campaign_id, const std::filesystem::path& dir) const {
  ReportBundle b = report(campaign_id);
  const std::filesystem::path out = dir / campaign_id;
  write_bundle(b, out);
  return out;
}

std::vector<CaseResult> Orchestrator::case_results(const std::string& campaign_id) const {
  std::lock_guard lock(mutex_);
  return campaign(campaign_id).results;
}

// ---- clock ----------------------------------------------------------------

void Orchestrator::advance(SimTime until) {
  std::lock_guard lock(mutex_);
  if (until > fabric_->now()) fabric_->step(until);
}

bool Orchestrator::busy() const {
  std::lock_guard lock(mutex_);
  for (const auto& [_, c] : campaigns_) {
    if (c->state == CampaignState::Pending || c->state == CampaignState::Running) return true;
  }
  for (const auto& [_, h] : handles_) {
    if (!h.pub.terminal()) return true;
  }
  return false;
}

bool Orchestrator::run_until_idle(SimTime limit, SimTime slice_ms) {
  while (busy()) {
    std::lock_guard lock(mutex_);
    if (fabric_->now() >= limit) return false;
    fabric_->step(std::min(limit, fabric_->now() + slice_ms));
  }
  return true;
}

SimTime Orchestrator::now() const {
  std::lock_guard lock(mutex_);
  return fabric_->now();
}

}  // namespace faultfabric::orchestrator
