#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "faultfabric/common/error.hpp"
#include "faultfabric/fabric/fabric.hpp"
#include "faultfabric/faultengine/engine.hpp"
#include "faultfabric/faultengine/fault_spec.hpp"
#include "faultfabric/mapper/item_map.hpp"

namespace faultfabric::agents {

namespace command {
struct Inject {
  std::string injection_id;
  std::string item_id;
  faultengine::FaultSpec spec;
  // Timeline origin; the fault window opens at origin + spec.timing.pre_ms.
  SimTime origin = 0;
};
struct Clear {
  std::string item_id;
};
struct ClearAll {};
struct Status {
  std::optional<std::string> item_id;
};
}  // namespace command

using AgentCommand = std::variant<command::Inject, command::Clear, command::ClearAll, command::Status>;

struct ItemStatus {
  std::string item_id;
  std::string injection_id;
  SimTime window_start = 0;
  SimTime window_end = 0;
  std::uint64_t matched = 0;
  std::uint64_t affected = 0;
};

struct AgentReply {
  // Position of the answered command in the agent's log, from 1.
  std::uint64_t seq = 0;
  bool ok = true;
  std::optional<ErrorCode> error;
  std::string message;
  std::vector<ItemStatus> items;

  static AgentReply failure(ErrorCode code, std::string msg) { return {0, false, code, std::move(msg), {}}; }
};

nlohmann::json to_json(const AgentCommand& cmd);
AgentCommand command_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AgentReply& reply);
AgentReply reply_from_json(const nlohmann::json& j);
ErrorCode error_code_from_string(std::string_view s);

struct LogEntry {
  std::uint64_t seq = 0;
  nlohmann::json command;
  bool ok = true;
  std::optional<ErrorCode> error;
};

// Per-host daemon applying fault transformers to the items it hosts. One
// active injection per item. Thread safe.
class Agent {
 public:
  Agent(std::string host_id, const mapper::ItemMap* items, std::uint64_t global_seed, double hop_latency_ms = 0.5);

  const std::string& host_id() const { return host_id_; }

  AgentReply handle_command(const AgentCommand& cmd);
  faultengine::PacketOutcome intercept(const std::string& item_id, const Packet& packet, SimTime t);
  bool has_active(const std::string& item_id) const;
  // Every handled command in arrival order.
  std::vector<LogEntry> command_log() const;

  // The item map changes on every delete/restore.
  void set_item_map(const mapper::ItemMap* items);

 private:
  struct Active {
    std::string injection_id;
    faultengine::ItemInjectionState state;
  };

  std::string host_id_;
  const mapper::ItemMap* items_;
  std::uint64_t global_seed_;
  double hop_latency_ms_;
  mutable std::mutex mutex_;
  std::map<std::string, Active> active_;
  std::vector<LogEntry> log_;
};

// Seed of the fault RNG for one item: (global seed, spec seed, item id).
std::uint64_t item_seed(std::uint64_t global_seed, std::uint64_t spec_seed, const std::string& item_id);

// In-process control channel to every host's agent. Commands and replies
// are serialized through the same JSON schema the socket transport uses.
// Also the fabric's packet interceptor.
class AgentBus : public fabric::PacketInterceptor {
 public:
  AgentBus(fabric::Fabric& fabric, std::uint64_t global_seed);
  ~AgentBus() override;

  AgentReply send(const std::string& host_id, const AgentCommand& cmd);
  Agent& agent(const std::string& host_id);

  void topology_changed() override;

  faultengine::PacketOutcome intercept(const mapper::InjectionItem& item, const Packet& packet, SimTime t) override;
  bool has_active(const std::string& item_id) const override;

  std::uint64_t global_seed() const { return global_seed_; }

 private:
  fabric::Fabric& fabric_;
  std::uint64_t global_seed_;
  std::map<std::string, std::unique_ptr<Agent>> agents_;
};

}  // namespace faultfabric::agents
