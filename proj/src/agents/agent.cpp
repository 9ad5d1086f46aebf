#include "faultfabric/agents/agent.hpp"

#include "faultfabric/common/rng.hpp"

namespace faultfabric::agents {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json status_to_json(const ItemStatus& s) {
  return {{"item_id", s.item_id},     {"injection_id", s.injection_id}, {"window_start", s.window_start},
          {"window_end", s.window_end}, {"matched", s.matched},         {"affected", s.affected}};
}

ItemStatus status_from_json(const json& j) {
  ItemStatus s;
  s.item_id = j.at("item_id").get<std::string>();
  s.injection_id = j.value("injection_id", "");
  s.window_start = j.value("window_start", 0.0);
  s.window_end = j.value("window_end", 0.0);
  s.matched = j.value("matched", std::uint64_t{0});
  s.affected = j.value("affected", std::uint64_t{0});
  return s;
}

}  // namespace

ErrorCode error_code_from_string(std::string_view s) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::Internal); ++c) {
    if (to_string(static_cast<ErrorCode>(c)) == s) return static_cast<ErrorCode>(c);
  }
  return ErrorCode::Internal;
}

json to_json(const AgentCommand& cmd) {
  return std::visit(
      overloaded{
          [](const command::Inject& c) -> json {
            return {{"command", "inject"}, {"injection_id", c.injection_id}, {"item_id", c.item_id},
                    {"origin", c.origin},  {"spec", faultengine::to_json(c.spec)}};
          },
          [](const command::Clear& c) -> json { return {{"command", "clear"}, {"item_id", c.item_id}}; },
          [](const command::ClearAll&) -> json { return {{"command", "clear_all"}}; },
          [](const command::Status& c) -> json {
            json j{{"command", "status"}};
            if (c.item_id) j["item_id"] = *c.item_id;
            return j;
          },
      },
      cmd);
}

AgentCommand command_from_json(const json& j) {
  try {
    const std::string name = j.at("command").get<std::string>();
    if (name == "inject") {
      command::Inject c;
      c.injection_id = j.at("injection_id").get<std::string>();
      c.item_id = j.at("item_id").get<std::string>();
      c.origin = j.value("origin", 0.0);
      c.spec = faultengine::fault_spec_from_json(j.at("spec"));
      return c;
    }
    if (name == "clear") return command::Clear{j.at("item_id").get<std::string>()};
    if (name == "clear_all") return command::ClearAll{};
    if (name == "status") {
      command::Status c;
      if (j.contains("item_id")) c.item_id = j.at("item_id").get<std::string>();
      return c;
    }
    throw Error(ErrorCode::ParseError, "unknown agent command '" + name + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed agent command: ") + e.what());
  }
}

json to_json(const AgentReply& reply) {
  json j{{"seq", reply.seq}, {"ok", reply.ok}, {"message", reply.message}};
  if (reply.error) j["error"] = to_string(*reply.error);
  json items = json::array();
  for (const auto& s : reply.items) items.push_back(status_to_json(s));
  j["items"] = std::move(items);
  return j;
}

AgentReply reply_from_json(const json& j) {
  try {
    AgentReply r;
    r.seq = j.value("seq", std::uint64_t{0});
    r.ok = j.at("ok").get<bool>();
    r.message = j.value("message", "");
    if (j.contains("error")) r.error = error_code_from_string(j.at("error").get<std::string>());
    for (const auto& s : j.value("items", json::array())) r.items.push_back(status_from_json(s));
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed agent reply: ") + e.what());
  }
}

std::uint64_t item_seed(std::uint64_t global_seed, std::uint64_t spec_seed, const std::string& item_id) {
  return mix_seed(mix_seed(global_seed, spec_seed), stable_hash(item_id));
}

Agent::Agent(std::string host_id, const mapper::ItemMap* items, std::uint64_t global_seed, double hop_latency_ms)
    : host_id_(std::move(host_id)), items_(items), global_seed_(global_seed), hop_latency_ms_(hop_latency_ms) {}

void Agent::set_item_map(const mapper::ItemMap* items) {
  std::lock_guard lock(mutex_);
  items_ = items;
}

AgentReply Agent::handle_command(const AgentCommand& cmd) {
  std::lock_guard lock(mutex_);
  auto status_of = [](const std::string& id, const Active& a) {
    return ItemStatus{id, a.injection_id, a.state.window_start(), a.state.window_end(), a.state.matched,
                      a.state.affected};
  };
  AgentReply reply = std::visit(
      overloaded{
          [&](const command::Inject& c) -> AgentReply {
            const mapper::InjectionItem* item = items_ ? items_->find(c.item_id) : nullptr;
            if (!item) return AgentReply::failure(ErrorCode::NotFound, "unknown item " + c.item_id);
            if (item->location != host_id_)
              return AgentReply::failure(ErrorCode::WrongHost,
                                         "item " + c.item_id + " is on " + item->location + ", not " + host_id_);
            if (active_.count(c.item_id))
              return AgentReply::failure(ErrorCode::AlreadyInjected, "item " + c.item_id + " already injected");
            try {
              faultengine::validate(c.spec);
            } catch (const Error& e) {
              return AgentReply::failure(e.code(), e.what());
            }
            auto [it, _] = active_.emplace(
                c.item_id, Active{c.injection_id, faultengine::ItemInjectionState(
                                                      c.spec, c.origin, item_seed(global_seed_, c.spec.seed, c.item_id),
                                                      hop_latency_ms_)});
            AgentReply r;
            r.items.push_back(status_of(it->first, it->second));
            return r;
          },
          [&](const command::Clear& c) -> AgentReply {
            auto it = active_.find(c.item_id);
            if (it == active_.end())
              return AgentReply::failure(ErrorCode::NotInjected, "item " + c.item_id + " has no injection");
            AgentReply r;
            r.items.push_back(status_of(it->first, it->second));
            active_.erase(it);
            return r;
          },
          [&](const command::ClearAll&) -> AgentReply {
            AgentReply r;
            for (const auto& [id, a] : active_) r.items.push_back(status_of(id, a));
            active_.clear();
            return r;
          },
          [&](const command::Status& c) -> AgentReply {
            AgentReply r;
            for (const auto& [id, a] : active_) {
              if (!c.item_id || *c.item_id == id) r.items.push_back(status_of(id, a));
            }
            return r;
          },
      },
      cmd);
  reply.seq = log_.size() + 1;
  log_.push_back({reply.seq, to_json(cmd), reply.ok, reply.error});
  return reply;
}

std::vector<LogEntry> Agent::command_log() const {
  std::lock_guard lock(mutex_);
  return log_;
}

faultengine::PacketOutcome Agent::intercept(const std::string& item_id, const Packet& packet, SimTime t) {
  std::lock_guard lock(mutex_);
  auto it = active_.find(item_id);
  if (it == active_.end()) return faultengine::outcome::Deliver{};
  return faultengine::apply_fault(it->second.state, packet, t);
}

bool Agent::has_active(const std::string& item_id) const {
  std::lock_guard lock(mutex_);
  return active_.count(item_id) > 0;
}

AgentBus::AgentBus(fabric::Fabric& fabric, std::uint64_t global_seed) : fabric_(fabric), global_seed_(global_seed) {
  for (const auto& [id, host] : fabric_.topology().hosts()) {
    agents_[id] = std::make_unique<Agent>(id, &fabric_.item_map(), global_seed_, host.link_latency_ms);
  }
  fabric_.set_interceptor(this);
}

AgentBus::~AgentBus() { fabric_.set_interceptor(nullptr); }

Agent& AgentBus::agent(const std::string& host_id) {
  auto it = agents_.find(host_id);
  if (it == agents_.end()) throw Error(ErrorCode::NotFound, "no agent on host " + host_id);
  return *it->second;
}

AgentReply AgentBus::send(const std::string& host_id, const AgentCommand& cmd) {
  Agent& a = agent(host_id);
  const std::string wire = to_json(cmd).dump();
  AgentReply reply = a.handle_command(command_from_json(json::parse(wire)));
  return reply_from_json(json::parse(to_json(reply).dump()));
}

void AgentBus::topology_changed() {
  for (auto& [_, a] : agents_) a->set_item_map(&fabric_.item_map());
}

faultengine::PacketOutcome AgentBus::intercept(const mapper::InjectionItem& item, const Packet& packet, SimTime t) {
  auto it = agents_.find(item.location);
  if (it == agents_.end()) return faultengine::outcome::Deliver{};
  return it->second->intercept(item.id, packet, t);
}

bool AgentBus::has_active(const std::string& item_id) const {
  for (const auto& [_, a] : agents_) {
    if (a->has_active(item_id)) return true;
  }
  return false;
}

}  // namespace faultfabric::agents
