#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "faultfabric/common/flow_event.hpp"
#include "faultfabric/fabric/topology.hpp"
#include "faultfabric/faultengine/engine.hpp"
#include "faultfabric/mapper/item_map.hpp"

namespace faultfabric::fabric {

enum class ClockMode { Deterministic, WallAnchored };

// Hook through which the fabric consults injection agents. Implemented by
// the agent bus; the fabric only sees items and outcomes.
class PacketInterceptor {
 public:
  virtual ~PacketInterceptor() = default;
  virtual faultengine::PacketOutcome intercept(const mapper::InjectionItem& item, const Packet& packet,
                                               SimTime t) = 0;
  virtual bool has_active(const std::string& item_id) const = 0;
  // Called after every delete/restore, once the new item map is in place.
  virtual void topology_changed() {}
};

struct Route {
  std::vector<std::string> items;  // injection item ids in traversal order
  std::string dst_port_id;
};

struct BackendHealth {
  std::string port_id;
  std::string address;
  bool healthy = true;
  int consecutive_failures = 0;
};

struct HealthTransition {
  SimTime t = 0;
  std::string port_id;
  bool healthy = false;
};

struct BalancerState {
  std::string id;
  std::vector<BackendHealth> backends;
  std::size_t cursor = 0;
  std::vector<HealthTransition> transitions;
  std::uint64_t probes_sent = 0;
};

using TimerId = std::uint64_t;
using FlowListener = std::function<void(const FlowEvent&)>;

// Deterministic discrete-event model of the data center. Single writer: every
// mutation (stepping, sends, deletes, restores) must come from one thread at
// a time. `published_topology()` may be read concurrently.
class Fabric {
 public:
  explicit Fabric(Topology topology, ClockMode mode = ClockMode::Deterministic);
  Fabric(const Fabric&) = delete;
  Fabric& operator=(const Fabric&) = delete;

  const Topology& topology() const { return *topology_; }
  std::shared_ptr<const Topology> published_topology() const;
  const mapper::ItemMap& item_map() const { return *item_map_; }

  SimTime now() const { return now_; }
  ClockMode clock_mode() const { return mode_; }

  void set_interceptor(PacketInterceptor* interceptor) { interceptor_ = interceptor; }

  // Items traversed from a compute:nova port to an address. Throws
  // Unreachable when no route exists.
  std::vector<std::string> route_path(const std::string& src_port_id, const std::string& dst_address) const;
  Route resolve_route(const std::string& src_port_id, const std::string& dst_address) const;

  // Stamps sent_at and packet_id, records Sent and schedules traversal. A
  // missing route shows up as an Unreachable event. Returns the packet id.
  std::uint64_t send(Packet packet);
  // Sends `reply` back along the reverse of the request's route, recomputed
  // now so deletions in between are honored.
  std::uint64_t send_reply(const Packet& request, Packet reply);

  void subscribe(const std::string& flow_id, FlowListener listener);
  void unsubscribe(const std::string& flow_id);
  // Sees every event; returns a handle for unobserve().
  std::uint64_t observe(FlowListener listener);
  void unobserve(std::uint64_t handle);

  // Records an event produced outside the fabric (timeouts, rejections).
  void record(FlowEvent event);

  TimerId schedule_at(SimTime t, std::function<void()> fn);
  TimerId schedule_after(SimTime dt, std::function<void()> fn) { return schedule_at(now_ + dt, std::move(fn)); }
  // Runs before every ordinary event with the same timestamp. For control
  // actions (injection start/stop, delete/restore) so that a window
  // [start, end) is exact regardless of traffic scheduled earlier.
  TimerId schedule_control_at(SimTime t, std::function<void()> fn);
  void cancel(TimerId id);

  // Processes every event with timestamp <= until in (time, sequence) order
  // and leaves the clock at `until`. Returns the events emitted meanwhile.
  std::vector<FlowEvent> step(SimTime until);
  std::optional<SimTime> next_event_time() const;

  ResourceSnapshot snapshot_resource(ResourceKind kind, const std::string& id) const;
  // Throws NotFound, or Busy when an injection is active on the closure.
  ResourceSnapshot delete_resource(ResourceKind kind, const std::string& id);
  // Throws Conflict / StaleSnapshot.
  void restore_resource(const ResourceSnapshot& snapshot);

  // Round robin over healthy backends; throws NoBackendAvailable.
  std::string balancer_dispatch(const std::string& balancer_id);
  const BalancerState& balancer_state(const std::string& balancer_id) const;

  const std::vector<FlowEvent>& trace() const { return trace_; }

 private:
  struct InFlight {
    Packet packet;
    std::vector<std::string> path;
    std::size_t hop = 0;
    std::string dst_port_id;
  };

  void emit(FlowEvent event);
  void launch(std::shared_ptr<InFlight> flight);
  void arrive(std::shared_ptr<InFlight> flight);
  void deliver(const std::shared_ptr<InFlight>& flight);
  void republish();
  void start_health_monitor(const Balancer& balancer);
  void probe_round(const std::string& balancer_id);
  void on_probe_event(const std::string& balancer_id, const FlowEvent& e);
  double hop_latency(const mapper::InjectionItem& item) const;

  std::shared_ptr<const Topology> topology_;
  std::shared_ptr<const mapper::ItemMap> item_map_;
  mutable std::mutex publish_mutex_;

  ClockMode mode_;
  SimTime now_ = 0;
  PacketInterceptor* interceptor_ = nullptr;

  using QueueKey = std::tuple<SimTime, int, std::uint64_t>;  // time, lane, sequence
  TimerId enqueue(SimTime t, int lane, std::function<void()> fn);

  std::map<QueueKey, std::function<void()>> queue_;
  std::map<TimerId, std::pair<SimTime, int>> timer_times_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t next_packet_id_ = 1;

  std::map<std::string, FlowListener> listeners_;
  std::map<std::uint64_t, FlowListener> observers_;
  std::uint64_t next_observer_ = 1;

  std::vector<FlowEvent> trace_;
  std::vector<FlowEvent>* step_sink_ = nullptr;

  struct PendingProbe {
    std::size_t backend_index;
    TimerId timeout;
  };
  std::map<std::string, BalancerState> balancers_;
  std::map<std::string, std::map<std::uint64_t, PendingProbe>> pending_probes_;
};

}  // namespace faultfabric::fabric
