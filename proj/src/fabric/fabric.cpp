#include "faultfabric/fabric/fabric.hpp"

#include <deque>
#include <set>
#include <stdexcept>
#include <tuple>

#include "faultfabric/common/error.hpp"

namespace faultfabric::fabric {

namespace {

using mapper::item_id_for;

struct Edge {
  std::string next_subnet;
  std::string in_port;   // router interface on the current subnet
  std::string out_port;  // router interface on next_subnet
};

// Subnet adjacency through the tenant's routers, creation ordered.
std::map<std::string, std::vector<Edge>> router_adjacency(const Topology& topo, const std::string& tenant) {
  std::map<std::string, std::vector<Edge>> adj;
  for (const Router* r : Topology::ordered(topo.routers())) {
    if (r->tenant_id != tenant) continue;
    for (const auto& a : r->interface_port_ids) {
      const Port* pa = topo.find_port(a);
      if (!pa) continue;
      for (const auto& b : r->interface_port_ids) {
        if (a == b) continue;
        const Port* pb = topo.find_port(b);
        if (!pb || pb->subnet_id == pa->subnet_id) continue;
        adj[pa->subnet_id].push_back({pb->subnet_id, a, b});
      }
    }
  }
  return adj;
}

// Breadth-first search over subnets; returns the router crossings from
// `from` to the first subnet accepted by `is_target`, and that subnet.
std::optional<std::pair<std::vector<Edge>, std::string>> subnet_path(
    const Topology& topo, const std::string& tenant, const std::string& from,
    const std::function<bool(const std::string&)>& is_target) {
  if (is_target(from)) return std::make_pair(std::vector<Edge>{}, from);
  auto adj = router_adjacency(topo, tenant);
  std::map<std::string, std::pair<std::string, Edge>> parent;
  std::set<std::string> seen{from};
  std::deque<std::string> frontier{from};
  while (!frontier.empty()) {
    std::string cur = frontier.front();
    frontier.pop_front();
    for (const auto& e : adj[cur]) {
      if (!seen.insert(e.next_subnet).second) continue;
      parent[e.next_subnet] = {cur, e};
      if (is_target(e.next_subnet)) {
        std::vector<Edge> hops;
        for (std::string s = e.next_subnet; s != from; s = parent[s].first) hops.push_back(parent[s].second);
        std::reverse(hops.begin(), hops.end());
        return std::make_pair(hops, e.next_subnet);
      }
      frontier.push_back(e.next_subnet);
    }
  }
  return std::nullopt;
}

void append_crossings(const Topology& topo, const std::vector<Edge>& hops, std::vector<std::string>& items) {
  for (const auto& h : hops) {
    items.push_back(item_id_for(*topo.find_port(h.in_port)));
    items.push_back(item_id_for(*topo.find_port(h.out_port)));
  }
}

const Network* network_of(const Topology& topo, const Port& p) {
  const Subnet* s = topo.find_subnet(p.subnet_id);
  return s ? topo.find_network(s->network_id) : nullptr;
}

// Tenant router with an interface on `subnet_id` and a gateway on `ext_net`.
const Router* gateway_router(const Topology& topo, const std::string& tenant, const std::string& subnet_id,
                             const std::string& ext_net, const Port** iface) {
  for (const Router* r : Topology::ordered(topo.routers())) {
    if (r->tenant_id != tenant || !r->gateway_port_id) continue;
    const Port* gw = topo.find_port(*r->gateway_port_id);
    if (!gw) continue;
    const Network* gw_net = network_of(topo, *gw);
    if (!gw_net || gw_net->id != ext_net) continue;
    for (const auto& pid : r->interface_port_ids) {
      const Port* p = topo.find_port(pid);
      if (p && p->subnet_id == subnet_id) {
        if (iface) *iface = p;
        return r;
      }
    }
  }
  return nullptr;
}

[[noreturn]] void unreachable(const std::string& src, const std::string& dst, const std::string& why) {
  throw Error(ErrorCode::Unreachable, "no route from port " + src + " to " + dst + ": " + why);
}

}  // namespace

Fabric::Fabric(Topology topology, ClockMode mode)
    : topology_(std::make_shared<const Topology>(std::move(topology))), mode_(mode) {
  item_map_ = std::make_shared<const mapper::ItemMap>(mapper::build_item_map(*topology_));
  for (const auto& [_, b] : topology_->balancers()) start_health_monitor(b);
}

std::shared_ptr<const Topology> Fabric::published_topology() const {
  std::lock_guard lock(publish_mutex_);
  return topology_;
}

void Fabric::republish() {
  auto map = std::make_shared<const mapper::ItemMap>(mapper::build_item_map(*topology_));
  item_map_ = std::move(map);
  if (interceptor_) interceptor_->topology_changed();
}

Route Fabric::resolve_route(const std::string& src_port_id, const std::string& dst_address) const {
  const Topology& topo = *topology_;
  const Port* src = topo.find_port(src_port_id);
  if (!src) unreachable(src_port_id, dst_address, "source port does not exist");
  if (src->device_owner != DeviceOwner::ComputeNova) unreachable(src_port_id, dst_address, "source is not a VM port");
  const std::string& tenant = src->tenant_id;

  // Private address of a tenant VM.
  for (const Port* q : Topology::ordered(topo.ports())) {
    if (q->address != dst_address || q->tenant_id != tenant || q->device_owner != DeviceOwner::ComputeNova) continue;
    const Network* qn = network_of(topo, *q);
    if (!qn || qn->is_external) continue;
    auto found = subnet_path(topo, tenant, src->subnet_id, [&](const std::string& s) { return s == q->subnet_id; });
    if (!found) continue;
    Route route;
    route.items.push_back(item_id_for(*src));
    append_crossings(topo, found->first, route.items);
    route.items.push_back(item_id_for(*q));
    route.dst_port_id = q->id;
    return route;
  }

  // Floating IP.
  for (const FloatingIp* f : Topology::ordered(topo.floating_ips())) {
    if (f->address != dst_address) continue;
    const Port* backing = topo.backing_port(*f);
    const Port* target = topo.find_port(f->attached_port_id);
    if (!backing || !target) continue;
    const Network* ext = network_of(topo, *backing);
    if (!ext) continue;

    const Port* in_iface = nullptr;
    if (!gateway_router(topo, f->tenant_id, target->subnet_id, ext->id, &in_iface)) continue;

    const Router* egress = nullptr;
    const Port* out_iface = nullptr;
    auto found = subnet_path(topo, tenant, src->subnet_id, [&](const std::string& s) {
      egress = gateway_router(topo, tenant, s, ext->id, &out_iface);
      return egress != nullptr;
    });
    if (!found) continue;
    egress = gateway_router(topo, tenant, found->second, ext->id, &out_iface);

    Route route;
    route.items.push_back(item_id_for(*src));
    append_crossings(topo, found->first, route.items);
    route.items.push_back(item_id_for(*out_iface));
    route.items.push_back(item_id_for(*topo.find_port(*egress->gateway_port_id)));
    route.items.push_back(item_id_for(*backing));
    route.items.push_back(item_id_for(*in_iface));
    route.items.push_back(item_id_for(*target));
    route.dst_port_id = target->id;
    return route;
  }

  unreachable(src_port_id, dst_address, "address not routable");
}

std::vector<std::string> Fabric::route_path(const std::string& src_port_id, const std::string& dst_address) const {
  return resolve_route(src_port_id, dst_address).items;
}

void Fabric::emit(FlowEvent event) {
  trace_.push_back(event);
  if (step_sink_) step_sink_->push_back(event);
  if (auto it = listeners_.find(event.flow_id); it != listeners_.end()) {
    FlowListener fn = it->second;
    fn(event);
  }
  if (!observers_.empty()) {
    std::vector<FlowListener> obs;
    for (const auto& [_, fn] : observers_) obs.push_back(fn);
    for (auto& fn : obs) fn(event);
  }
}

void Fabric::record(FlowEvent event) { emit(std::move(event)); }

std::uint64_t Fabric::send(Packet packet) {
  packet.sent_at = now_;
  packet.packet_id = next_packet_id_++;
  emit(make_event(FlowEventKind::Sent, packet, now_));
  auto flight = std::make_shared<InFlight>();
  std::uint64_t id = packet.packet_id;
  try {
    Route route = resolve_route(packet.src_port_id, packet.dst_address);
    flight->path = std::move(route.items);
    flight->dst_port_id = std::move(route.dst_port_id);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Unreachable) throw;
    FlowEvent ev = make_event(FlowEventKind::Unreachable, packet, now_);
    ev.port_id = packet.src_port_id;
    emit(std::move(ev));
    return id;
  }
  flight->packet = std::move(packet);
  launch(std::move(flight));
  return id;
}

std::uint64_t Fabric::send_reply(const Packet& request, Packet reply) {
  reply.sent_at = now_;
  reply.packet_id = next_packet_id_++;
  reply.flow_id = request.flow_id;
  reply.tenant_id = request.tenant_id;
  reply.dst_address.clear();
  if (const Port* client = topology_->find_port(request.src_port_id)) reply.dst_address = client->address;
  if (!reply.request_id) reply.request_id = request.request_id;
  emit(make_event(FlowEventKind::Sent, reply, now_));
  std::uint64_t id = reply.packet_id;
  auto flight = std::make_shared<InFlight>();
  try {
    Route route = resolve_route(request.src_port_id, request.dst_address);
    reply.src_port_id = route.dst_port_id;
    flight->path.assign(route.items.rbegin(), route.items.rend());
    flight->dst_port_id = request.src_port_id;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Unreachable) throw;
    FlowEvent ev = make_event(FlowEventKind::Unreachable, reply, now_);
    ev.port_id = request.src_port_id;
    emit(std::move(ev));
    return id;
  }
  flight->packet = std::move(reply);
  launch(std::move(flight));
  return id;
}

void Fabric::launch(std::shared_ptr<InFlight> flight) {
  schedule_at(now_, [this, flight]() mutable { arrive(std::move(flight)); });
}

double Fabric::hop_latency(const mapper::InjectionItem& item) const {
  const Host* h = topology_->find_host(item.location);
  return h ? h->link_latency_ms : 0.5;
}

void Fabric::arrive(std::shared_ptr<InFlight> flight) {
  const std::string& item_id = flight->path[flight->hop];
  const mapper::InjectionItem* item = item_map_->find(item_id);
  Packet& packet = flight->packet;
  if (!item) {
    FlowEvent ev = make_event(FlowEventKind::Unreachable, packet, now_);
    ev.item_id = item_id;
    emit(std::move(ev));
    return;
  }
  faultengine::PacketOutcome out = faultengine::outcome::Deliver{};
  if (interceptor_ && !packet.duplicate) out = interceptor_->intercept(*item, packet, now_);

  const double latency = hop_latency(*item);
  SimTime next = now_ + latency;
  std::shared_ptr<InFlight> copy;
  SimTime copy_at = 0;

  if (std::holds_alternative<faultengine::outcome::Drop>(out)) {
    FlowEvent ev = make_event(FlowEventKind::Dropped, packet, now_);
    ev.item_id = item_id;
    emit(std::move(ev));
    return;
  }
  if (auto* d = std::get_if<faultengine::outcome::Delay>(&out)) {
    FlowEvent ev = make_event(FlowEventKind::Delayed, packet, now_);
    ev.item_id = item_id;
    ev.extra_ms = d->extra_ms;
    emit(std::move(ev));
    next += d->extra_ms;
  } else if (auto* c = std::get_if<faultengine::outcome::DeliverCorrupted>(&out)) {
    packet.payload = std::move(c->payload);
    packet.corrupted = true;
    FlowEvent ev = make_event(FlowEventKind::Corrupted, packet, now_);
    ev.item_id = item_id;
    emit(std::move(ev));
  } else if (auto* dup = std::get_if<faultengine::outcome::DeliverAndDuplicate>(&out)) {
    FlowEvent ev = make_event(FlowEventKind::Duplicated, packet, now_);
    ev.item_id = item_id;
    emit(std::move(ev));
    copy = std::make_shared<InFlight>(*flight);
    copy->packet.duplicate = true;
    copy_at = next + dup->copy_delay_ms;
  }

  flight->hop += 1;
  auto proceed = [this](std::shared_ptr<InFlight> f, SimTime at) {
    if (f->hop == f->path.size()) {
      schedule_at(at, [this, f]() { deliver(f); });
    } else {
      schedule_at(at, [this, f]() mutable { arrive(std::move(f)); });
    }
  };
  proceed(flight, next);
  if (copy) {
    copy->hop = flight->hop;
    proceed(copy, copy_at);
  }
}

void Fabric::deliver(const std::shared_ptr<InFlight>& flight) {
  const Packet& packet = flight->packet;
  if (!topology_->find_port(flight->dst_port_id)) {
    FlowEvent ev = make_event(FlowEventKind::Unreachable, packet, now_);
    ev.port_id = flight->dst_port_id;
    emit(std::move(ev));
    return;
  }
  FlowEvent ev = make_event(FlowEventKind::Delivered, packet, now_);
  ev.first_byte_t = now_;
  ev.last_byte_t = now_ + packet.stream_ms;
  ev.port_id = flight->dst_port_id;
  emit(std::move(ev));
}

void Fabric::subscribe(const std::string& flow_id, FlowListener listener) {
  listeners_[flow_id] = std::move(listener);
}

void Fabric::unsubscribe(const std::string& flow_id) { listeners_.erase(flow_id); }

std::uint64_t Fabric::observe(FlowListener listener) {
  std::uint64_t h = next_observer_++;
  observers_[h] = std::move(listener);
  return h;
}

void Fabric::unobserve(std::uint64_t handle) { observers_.erase(handle); }

TimerId Fabric::enqueue(SimTime t, int lane, std::function<void()> fn) {
  if (t < now_) t = now_;
  TimerId id = next_seq_++;
  queue_.emplace(QueueKey{t, lane, id}, std::move(fn));
  timer_times_[id] = {t, lane};
  return id;
}

TimerId Fabric::schedule_at(SimTime t, std::function<void()> fn) { return enqueue(t, 1, std::move(fn)); }

TimerId Fabric::schedule_control_at(SimTime t, std::function<void()> fn) { return enqueue(t, 0, std::move(fn)); }

void Fabric::cancel(TimerId id) {
  auto it = timer_times_.find(id);
  if (it == timer_times_.end()) return;
  queue_.erase(QueueKey{it->second.first, it->second.second, id});
  timer_times_.erase(it);
}

std::vector<FlowEvent> Fabric::step(SimTime until) {
  if (until < now_) throw std::invalid_argument("step target lies in the past");
  std::vector<FlowEvent> out;
  auto* outer = step_sink_;
  step_sink_ = &out;
  try {
    while (!queue_.empty() && std::get<0>(queue_.begin()->first) <= until) {
      auto node = queue_.extract(queue_.begin());
      timer_times_.erase(std::get<2>(node.key()));
      now_ = std::get<0>(node.key());
      node.mapped()();
    }
  } catch (...) {
    step_sink_ = outer;
    throw;
  }
  step_sink_ = outer;
  now_ = until;
  return out;
}

std::optional<SimTime> Fabric::next_event_time() const {
  if (queue_.empty()) return std::nullopt;
  return std::get<0>(queue_.begin()->first);
}

ResourceSnapshot Fabric::snapshot_resource(ResourceKind kind, const std::string& id) const {
  return topology_->snapshot(kind, id, now_);
}

ResourceSnapshot Fabric::delete_resource(ResourceKind kind, const std::string& id) {
  auto closure = topology_->closure(kind, id);
  if (interceptor_) {
    for (const auto& rec : closure) {
      if (const Port* p = std::get_if<Port>(&rec)) {
        std::string item = item_id_for(*p);
        if (interceptor_->has_active(item))
          throw Error(ErrorCode::Busy, "item " + item + " has an active injection");
      }
    }
  }
  auto next = std::make_shared<Topology>(*topology_);
  ResourceSnapshot snap = next->remove(kind, id, now_);
  {
    std::lock_guard lock(publish_mutex_);
    topology_ = std::move(next);
  }
  republish();
  return snap;
}

void Fabric::restore_resource(const ResourceSnapshot& snapshot) {
  auto next = std::make_shared<Topology>(*topology_);
  next->restore(snapshot);
  {
    std::lock_guard lock(publish_mutex_);
    topology_ = std::move(next);
  }
  republish();
}

std::string Fabric::balancer_dispatch(const std::string& balancer_id) {
  auto it = balancers_.find(balancer_id);
  if (it == balancers_.end()) throw Error(ErrorCode::NotFound, "unknown balancer " + balancer_id);
  BalancerState& st = it->second;
  const std::size_t n = st.backends.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t i = (st.cursor + k) % n;
    if (st.backends[i].healthy) {
      st.cursor = (i + 1) % n;
      return st.backends[i].port_id;
    }
  }
  throw Error(ErrorCode::NoBackendAvailable, "balancer " + balancer_id + " has no healthy backend");
}

const BalancerState& Fabric::balancer_state(const std::string& balancer_id) const {
  auto it = balancers_.find(balancer_id);
  if (it == balancers_.end()) throw Error(ErrorCode::NotFound, "unknown balancer " + balancer_id);
  return it->second;
}

void Fabric::start_health_monitor(const Balancer& b) {
  BalancerState st;
  st.id = b.id;
  for (const auto& pid : b.backend_port_ids) {
    const Port* p = topology_->find_port(pid);
    st.backends.push_back({pid, p ? p->address : std::string{}, true, 0});
  }
  balancers_[b.id] = std::move(st);
  const std::string flow = "probe:" + b.id;
  subscribe(flow, [this, id = b.id](const FlowEvent& e) { on_probe_event(id, e); });
  schedule_at(now_, [this, id = b.id]() { probe_round(id); });
}

void Fabric::probe_round(const std::string& balancer_id) {
  auto bit = topology_->balancers().find(balancer_id);
  if (bit == topology_->balancers().end()) return;
  const Balancer& b = bit->second;
  BalancerState& st = balancers_[balancer_id];
  auto& pending = pending_probes_[balancer_id];
  for (std::size_t i = 0; i < st.backends.size(); ++i) {
    Packet p;
    p.flow_id = "probe:" + b.id;
    p.tenant_id = b.tenant_id;
    p.src_port_id = b.port_id;
    p.dst_address = st.backends[i].address;
    p.protocol = b.protocol;
    p.service_port = b.service_port;
    p.kind = PacketKind::Request;
    p.payload.assign(16, 0x50);
    p.request_id = ++st.probes_sent;
    const std::uint64_t rid = *p.request_id;
    TimerId timeout = schedule_after(b.health.timeout_ms, [this, balancer_id, rid, i, max = b.health.max_retries]() {
      auto& pend = pending_probes_[balancer_id];
      if (pend.erase(rid) == 0) return;
      BackendHealth& be = balancers_[balancer_id].backends[i];
      be.consecutive_failures += 1;
      if (be.healthy && be.consecutive_failures >= max) {
        be.healthy = false;
        balancers_[balancer_id].transitions.push_back({now_, be.port_id, false});
      }
    });
    pending[rid] = {i, timeout};
    send(std::move(p));
  }
  schedule_after(b.health.period_ms, [this, balancer_id]() { probe_round(balancer_id); });
}

void Fabric::on_probe_event(const std::string& balancer_id, const FlowEvent& e) {
  if (e.kind != FlowEventKind::Delivered || e.duplicate || e.corrupted || !e.request_id) return;
  if (e.packet_kind == PacketKind::Request) {
    // Auto-responder at the backend.
    auto bit = topology_->balancers().find(balancer_id);
    if (bit == topology_->balancers().end()) return;
    Packet request;
    request.flow_id = e.flow_id;
    request.tenant_id = e.tenant_id;
    request.src_port_id = bit->second.port_id;
    const BalancerState& st = balancers_[balancer_id];
    auto pit = pending_probes_[balancer_id].find(*e.request_id);
    if (pit == pending_probes_[balancer_id].end()) return;
    request.dst_address = st.backends[pit->second.backend_index].address;
    request.request_id = e.request_id;
    Packet reply;
    reply.kind = PacketKind::Response;
    reply.protocol = bit->second.protocol;
    reply.payload.assign(16, 0x4f);
    send_reply(request, std::move(reply));
    return;
  }
  if (e.packet_kind == PacketKind::Response) {
    auto& pend = pending_probes_[balancer_id];
    auto pit = pend.find(*e.request_id);
    if (pit == pend.end()) return;
    cancel(pit->second.timeout);
    BackendHealth& be = balancers_[balancer_id].backends[pit->second.backend_index];
    pend.erase(pit);
    be.consecutive_failures = 0;
    if (!be.healthy) {
      be.healthy = true;
      balancers_[balancer_id].transitions.push_back({now_, be.port_id, true});
    }
  }
}

}  // namespace faultfabric::fabric
