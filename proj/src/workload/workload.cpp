#include "faultfabric/workload/workload.hpp"

#include <algorithm>

#include "faultfabric/common/error.hpp"

namespace faultfabric::workload {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::ValidationError, "workload: " + msg); }

Attach attach_from_json(const json& j) {
  Attach a;
  if (j.contains("clients")) {
    for (const auto& c : j.at("clients")) a.client_port_ids.push_back(c.get<std::string>());
  } else if (j.contains("client")) {
    a.client_port_ids.push_back(j.at("client").get<std::string>());
  }
  if (j.contains("server")) a.server_port_id = j.at("server").get<std::string>();
  if (j.contains("balancer")) a.balancer_id = j.at("balancer").get<std::string>();
  if (j.contains("server_address")) a.server_address = j.at("server_address").get<std::string>();
  return a;
}

json attach_to_json(const Attach& a) {
  json j{{"clients", a.client_port_ids}};
  if (a.server_port_id) j["server"] = *a.server_port_id;
  if (a.balancer_id) j["balancer"] = *a.balancer_id;
  if (a.server_address) j["server_address"] = *a.server_address;
  return j;
}

std::vector<std::uint8_t> make_payload(int n, std::uint64_t salt) {
  std::vector<std::uint8_t> p(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<std::uint8_t>((salt * 31 + i) & 0xff);
  return p;
}

FlowEvent transaction(FlowEventKind kind, SimTime t, const std::string& flow, const std::string& tenant,
                      std::uint64_t packet_id, std::optional<std::uint64_t> request_id, SimTime sent_at,
                      PacketKind pk) {
  FlowEvent e;
  e.kind = kind;
  e.t = t;
  e.flow_id = flow;
  e.tenant_id = tenant;
  e.packet_id = packet_id;
  e.request_id = request_id;
  e.sent_at = sent_at;
  e.packet_kind = pk;
  return e;
}

}  // namespace

double WorkloadConfig::duration_ms() const {
  return std::visit([](const auto& k) { return k.duration_ms; }, kind);
}

std::string_view kind_name(const WorkloadConfig& c) {
  return std::visit(overloaded{[](const Bandwidth&) { return std::string_view("bandwidth"); },
                               [](const RequestResponse&) { return std::string_view("request_response"); },
                               [](const Custom&) { return std::string_view("custom"); }},
                    c.kind);
}

void validate(const WorkloadConfig& c) {
  std::visit(overloaded{
                 [](const Bandwidth& b) {
                   if (!(b.pkts_per_s > 0)) invalid("pkts_per_s must be > 0");
                   if (b.payload_bytes <= 0) invalid("payload_bytes must be > 0");
                   if (!(b.duration_ms > 0)) invalid("duration_ms must be > 0");
                 },
                 [](const RequestResponse& r) {
                   if (r.concurrent_users <= 0) invalid("concurrent_users must be > 0");
                   if (!(r.reqs_per_min > 0)) invalid("reqs_per_min must be > 0");
                   if (r.think_time_ms < 0) invalid("think_time_ms must be >= 0");
                   if (r.request_payload_bytes <= 0) invalid("request_payload_bytes must be > 0");
                   if (r.response_payload_bytes <= 0) invalid("response_payload_bytes must be > 0");
                   if (!(r.timeout_ms > 0)) invalid("timeout_ms must be > 0");
                   if (!(r.duration_ms > 0)) invalid("duration_ms must be > 0");
                   if (!(r.link_rate_bytes_per_s > 0)) invalid("link_rate_bytes_per_s must be > 0");
                 },
                 [](const Custom& c) {
                   if (c.name.empty()) invalid("custom workload needs a name");
                   if (!(c.duration_ms > 0)) invalid("duration_ms must be > 0");
                 },
             },
             c.kind);
  if (!std::holds_alternative<Custom>(c.kind)) {
    if (c.attach.client_port_ids.empty()) invalid("attach.clients is empty");
    if (!c.attach.server_port_id && !c.attach.balancer_id && !c.attach.server_address)
      invalid("attach needs a server, balancer or server_address");
  }
}

WorkloadConfig workload_config_from_json(const json& j) {
  WorkloadConfig c;
  try {
    if (!j.is_object()) invalid("expected an object");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bandwidth") {
      Bandwidth b;
      b.protocol = protocol_from_string(j.value("protocol", std::string("udp")));
      b.pkts_per_s = j.value("pkts_per_s", b.pkts_per_s);
      b.payload_bytes = j.value("payload_bytes", b.payload_bytes);
      b.duration_ms = j.value("duration_ms", b.duration_ms);
      b.service_port = j.value("service_port", b.service_port);
      c.kind = b;
    } else if (kind == "request_response") {
      RequestResponse r;
      r.concurrent_users = j.value("concurrent_users", r.concurrent_users);
      r.reqs_per_min = j.value("reqs_per_min", r.reqs_per_min);
      r.think_time_ms = j.value("think_time_ms", r.think_time_ms);
      r.request_payload_bytes = j.value("request_payload_bytes", r.request_payload_bytes);
      r.response_payload_bytes = j.value("response_payload_bytes", r.response_payload_bytes);
      r.timeout_ms = j.value("timeout_ms", r.timeout_ms);
      r.duration_ms = j.value("duration_ms", r.duration_ms);
      r.link_rate_bytes_per_s = j.value("link_rate_bytes_per_s", r.link_rate_bytes_per_s);
      r.protocol = protocol_from_string(j.value("protocol", std::string("tcp")));
      r.service_port = j.value("service_port", r.service_port);
      c.kind = r;
    } else if (kind == "custom") {
      Custom cu;
      cu.name = j.at("name").get<std::string>();
      cu.params = j.value("params", json::object());
      cu.duration_ms = j.value("duration_ms", cu.duration_ms);
      c.kind = cu;
    } else {
      invalid("unknown kind '" + kind + "'");
    }
    if (j.contains("attach")) c.attach = attach_from_json(j.at("attach"));
  } catch (const json::exception& e) {
    invalid(e.what());
  }
  validate(c);
  return c;
}

json to_json(const WorkloadConfig& c) {
  json j = std::visit(
      overloaded{
          [](const Bandwidth& b) -> json {
            return {{"kind", "bandwidth"},         {"protocol", to_string(b.protocol)},
                    {"pkts_per_s", b.pkts_per_s},  {"payload_bytes", b.payload_bytes},
                    {"duration_ms", b.duration_ms}, {"service_port", b.service_port}};
          },
          [](const RequestResponse& r) -> json {
            return {{"kind", "request_response"},
                    {"concurrent_users", r.concurrent_users},
                    {"reqs_per_min", r.reqs_per_min},
                    {"think_time_ms", r.think_time_ms},
                    {"request_payload_bytes", r.request_payload_bytes},
                    {"response_payload_bytes", r.response_payload_bytes},
                    {"timeout_ms", r.timeout_ms},
                    {"duration_ms", r.duration_ms},
                    {"link_rate_bytes_per_s", r.link_rate_bytes_per_s},
                    {"protocol", to_string(r.protocol)},
                    {"service_port", r.service_port}};
          },
          [](const Custom& cu) -> json {
            return {{"kind", "custom"}, {"name", cu.name}, {"params", cu.params}, {"duration_ms", cu.duration_ms}};
          },
      },
      c.kind);
  j["attach"] = attach_to_json(c.attach);
  return j;
}

void HookRegistry::add(const std::string& name, WorkloadHooks hooks) { hooks_[name] = std::move(hooks); }

const WorkloadHooks* HookRegistry::find(const std::string& name) const {
  auto it = hooks_.find(name);
  return it == hooks_.end() ? nullptr : &it->second;
}

Workload::Workload(fabric::Fabric& fabric, std::string tenant_id, WorkloadConfig config, std::string id)
    : fabric_(fabric), tenant_id_(std::move(tenant_id)), config_(std::move(config)), id_(std::move(id)) {
  start_ = fabric_.now();
}

Workload::~Workload() { *alive_ = false; }

namespace {

class BandwidthWorkload final : public Workload {
 public:
  BandwidthWorkload(fabric::Fabric& f, std::string tenant, WorkloadConfig c, std::string id, std::string dst)
      : Workload(f, std::move(tenant), std::move(c), std::move(id)), dst_(std::move(dst)) {
    const auto& b = std::get<Bandwidth>(config_.kind);
    interval_ = 1000.0 / b.pkts_per_s;
    total_ = static_cast<std::uint64_t>(std::llround(b.duration_ms * b.pkts_per_s / 1000.0));
    for (std::size_t i = 0; i < config_.attach.client_port_ids.size(); ++i) {
      const std::string flow = id_ + "/bw/" + std::to_string(i);
      flows_.push_back(flow);
      fabric_.subscribe(flow, [this](const FlowEvent& e) { on_event(e); });
      sent_.push_back(0);
      if (total_ > 0) arm(i);
    }
  }

  ~BandwidthWorkload() override {
    for (const auto& f : flows_) fabric_.unsubscribe(f);
  }

  void stop() override { stopped_ = true; }
  bool finished() const override {
    if (outstanding_ != 0) return false;
    if (stopped_) return true;
    return std::all_of(sent_.begin(), sent_.end(), [&](std::uint64_t s) { return s >= total_; });
  }

 private:
  void arm(std::size_t client) {
    const SimTime at = start_ + static_cast<double>(sent_[client]) * interval_;
    std::weak_ptr<bool> alive = alive_;
    fabric_.schedule_at(at, [this, alive, client] {
      if (alive.expired()) return;
      emit_one(client);
    });
  }

  void emit_one(std::size_t client) {
    if (stopped_) return;
    const auto& b = std::get<Bandwidth>(config_.kind);
    Packet p;
    p.flow_id = flows_[client];
    p.tenant_id = tenant_id_;
    p.src_port_id = config_.attach.client_port_ids[client];
    p.dst_address = dst_;
    p.protocol = b.protocol;
    p.service_port = b.service_port;
    p.kind = PacketKind::Datagram;
    p.payload = make_payload(b.payload_bytes, sent_[client]);
    ++sent_[client];
    fabric_.send(std::move(p));
    if (sent_[client] < total_) arm(client);
  }

  void on_event(const FlowEvent& e) {
    switch (e.kind) {
      case FlowEventKind::Sent:
        if (!e.duplicate) {
          ++outstanding_;
          report(e);
        }
        break;
      case FlowEventKind::Delivered: {
        if (e.duplicate) {
          FlowEvent d = e;
          d.kind = FlowEventKind::Duplicated;
          report(std::move(d));
          break;
        }
        --outstanding_;
        FlowEvent d = e;
        if (e.corrupted) d.kind = FlowEventKind::Rejected;
        report(std::move(d));
        break;
      }
      case FlowEventKind::Dropped:
      case FlowEventKind::Unreachable:
        if (!e.duplicate) {
          --outstanding_;
          report(e);
        }
        break;
      default:
        break;
    }
  }

  std::string dst_;
  double interval_ = 10;
  std::uint64_t total_ = 0;
  std::vector<std::string> flows_;
  std::vector<std::uint64_t> sent_;
  std::int64_t outstanding_ = 0;
  bool stopped_ = false;
};

class RequestResponseWorkload final : public Workload {
 public:
  RequestResponseWorkload(fabric::Fabric& f, std::string tenant, WorkloadConfig c, std::string id,
                          std::optional<std::string> dst)
      : Workload(f, std::move(tenant), std::move(c), std::move(id)), dst_(std::move(dst)) {
    const auto& r = std::get<RequestResponse>(config_.kind);
    interval_ = static_cast<double>(r.concurrent_users) * 60000.0 / r.reqs_per_min;
    for (int u = 0; u < r.concurrent_users; ++u) {
      User user;
      user.flow = id_ + "/rr/" + std::to_string(u);
      user.client = config_.attach.client_port_ids[static_cast<std::size_t>(u) % config_.attach.client_port_ids.size()];
      users_.push_back(user);
      fabric_.subscribe(user.flow, [this, u](const FlowEvent& e) { on_event(static_cast<std::size_t>(u), e); });
      schedule_issue(static_cast<std::size_t>(u), start_ + interval_ * u / r.concurrent_users);
    }
  }

  ~RequestResponseWorkload() override {
    for (const auto& u : users_) fabric_.unsubscribe(u.flow);
  }

  void stop() override { stopped_ = true; }
  bool finished() const override {
    if (!pending_.empty() || completing_ != 0) return false;
    if (stopped_) return true;
    return std::all_of(users_.begin(), users_.end(), [](const User& u) { return u.done; });
  }

 private:
  struct User {
    std::string flow;
    std::string client;
    SimTime last_issue = -1e300;
    bool done = false;
  };
  struct Pending {
    std::size_t user;
    std::uint64_t packet_id;
    SimTime sent_at;
    fabric::TimerId timeout;
  };
  struct Issued {
    std::string client;
    std::string dst;
  };

  void schedule_issue(std::size_t u, SimTime at) {
    std::weak_ptr<bool> alive = alive_;
    fabric_.schedule_at(at, [this, alive, u] {
      if (alive.expired()) return;
      issue(u);
    });
  }

  void issue(std::size_t u) {
    User& user = users_[u];
    if (stopped_ || fabric_.now() >= end_time()) {
      user.done = true;
      return;
    }
    const auto& r = std::get<RequestResponse>(config_.kind);
    user.last_issue = fabric_.now();
    const std::uint64_t rid = ++next_rid_;

    std::optional<std::string> dst = dst_;
    if (config_.attach.balancer_id) {
      try {
        const std::string backend = fabric_.balancer_dispatch(*config_.attach.balancer_id);
        for (const auto& be : fabric_.balancer_state(*config_.attach.balancer_id).backends) {
          if (be.port_id == backend) dst = be.address;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoBackendAvailable) throw;
      }
    }
    if (!dst) {
      // No backend to talk to: the transaction fails on the spot.
      const SimTime now = fabric_.now();
      report(transaction(FlowEventKind::Sent, now, user.flow, tenant_id_, 0, rid, now, PacketKind::Request));
      report(transaction(FlowEventKind::Unreachable, now, user.flow, tenant_id_, 0, rid, now, PacketKind::Request));
      next_after(u, now, true);
      return;
    }

    Packet p;
    p.flow_id = user.flow;
    p.tenant_id = tenant_id_;
    p.src_port_id = user.client;
    p.dst_address = *dst;
    p.protocol = r.protocol;
    p.service_port = r.service_port;
    p.kind = PacketKind::Request;
    p.payload = make_payload(r.request_payload_bytes, rid);
    p.request_id = rid;
    issued_[rid] = {user.client, *dst};

    std::weak_ptr<bool> alive = alive_;
    Pending pend{u, 0, fabric_.now(), 0};
    pend.timeout = fabric_.schedule_after(r.timeout_ms, [this, alive, rid] {
      if (alive.expired()) return;
      on_timeout(rid);
    });
    pending_[rid] = pend;
    const std::uint64_t packet_id = fabric_.send(std::move(p));
    if (auto it = pending_.find(rid); it != pending_.end()) it->second.packet_id = packet_id;
  }

  // Next request of a user whose transaction resolved at `completion`.
  void next_after(std::size_t u, SimTime completion, bool fast_failure) {
    const auto& r = std::get<RequestResponse>(config_.kind);
    const double think = fast_failure ? std::max(r.think_time_ms, 1.0) : r.think_time_ms;
    schedule_issue(u, std::max(users_[u].last_issue + interval_, completion + think));
  }

  void on_timeout(std::uint64_t rid) {
    auto it = pending_.find(rid);
    if (it == pending_.end()) return;
    const Pending p = it->second;
    pending_.erase(it);
    report(transaction(FlowEventKind::TimedOut, fabric_.now(), users_[p.user].flow, tenant_id_, p.packet_id, rid,
                       p.sent_at, PacketKind::Request));
    fabric_.record(transaction(FlowEventKind::TimedOut, fabric_.now(), users_[p.user].flow, tenant_id_, p.packet_id,
                               rid, p.sent_at, PacketKind::Request));
    schedule_issue(p.user, std::max(users_[p.user].last_issue + interval_, fabric_.now()));
  }

  void serve(const FlowEvent& e) {
    const auto& r = std::get<RequestResponse>(config_.kind);
    auto it = issued_.find(*e.request_id);
    if (it == issued_.end()) return;
    Packet request;
    request.flow_id = e.flow_id;
    request.tenant_id = tenant_id_;
    request.src_port_id = it->second.client;
    request.dst_address = it->second.dst;
    request.request_id = e.request_id;
    Packet reply;
    reply.kind = PacketKind::Response;
    reply.protocol = r.protocol;
    reply.service_port = r.service_port;
    reply.payload = make_payload(r.response_payload_bytes, *e.request_id + 7);
    reply.stream_ms = static_cast<double>(r.response_payload_bytes) / r.link_rate_bytes_per_s * 1000.0;
    // No checksums in the fabric: the server answers, flagging the damage.
    reply.corrupted = e.corrupted;
    fabric_.send_reply(request, std::move(reply));
  }

  void on_event(std::size_t u, const FlowEvent& e) {
    if (!e.request_id) return;
    const std::uint64_t rid = *e.request_id;
    switch (e.kind) {
      case FlowEventKind::Sent:
        if (!e.duplicate && e.packet_kind == PacketKind::Request) report(e);
        break;
      case FlowEventKind::Delivered: {
        if (e.packet_kind == PacketKind::Request) {
          if (!e.duplicate) serve(e);
          break;
        }
        if (e.duplicate) {
          FlowEvent d = e;
          d.kind = FlowEventKind::Duplicated;
          report(std::move(d));
          break;
        }
        auto it = pending_.find(rid);
        if (it == pending_.end()) break;
        const Pending p = it->second;
        pending_.erase(it);
        fabric_.cancel(p.timeout);
        if (e.corrupted) {
          FlowEvent rej = transaction(FlowEventKind::Rejected, fabric_.now(), users_[u].flow, tenant_id_,
                                      p.packet_id, rid, p.sent_at, PacketKind::Request);
          report(rej);
          fabric_.record(rej);
          next_after(u, fabric_.now(), true);
          break;
        }
        const SimTime first = e.first_byte_t.value_or(e.t);
        const SimTime last = e.last_byte_t.value_or(first);
        ++completing_;
        std::weak_ptr<bool> alive = alive_;
        fabric_.schedule_at(last, [this, alive, u, p, rid, first, last] {
          if (alive.expired()) return;
          --completing_;
          FlowEvent done = transaction(FlowEventKind::Delivered, last, users_[u].flow, tenant_id_, p.packet_id, rid,
                                       p.sent_at, PacketKind::Request);
          done.first_byte_t = first;
          done.last_byte_t = last;
          report(std::move(done));
          next_after(u, last, false);
        });
        break;
      }
      case FlowEventKind::Unreachable: {
        if (e.duplicate) break;
        auto it = pending_.find(rid);
        if (it == pending_.end()) break;
        const Pending p = it->second;
        pending_.erase(it);
        fabric_.cancel(p.timeout);
        report(transaction(FlowEventKind::Unreachable, fabric_.now(), users_[u].flow, tenant_id_, p.packet_id, rid,
                           p.sent_at, PacketKind::Request));
        next_after(u, fabric_.now(), true);
        break;
      }
      default:
        break;
    }
  }

  std::optional<std::string> dst_;
  double interval_ = 1000;
  std::vector<User> users_;
  std::map<std::uint64_t, Pending> pending_;
  std::map<std::uint64_t, Issued> issued_;
  std::uint64_t next_rid_ = 0;
  std::int64_t completing_ = 0;
  bool stopped_ = false;
};

class CustomWorkload final : public Workload {
 public:
  CustomWorkload(fabric::Fabric& f, std::string tenant, WorkloadConfig c, std::string id, const WorkloadHooks& hooks)
      : Workload(f, std::move(tenant), std::move(c), std::move(id)), hooks_(hooks) {
    ctx_ = std::make_unique<WorkloadContext>(
        WorkloadContext{fabric_, tenant_id_, id_, config_, [this](FlowEvent e) { report(std::move(e)); }});
    if (hooks_.start) hooks_.start(*ctx_);
  }

  void stop() override {
    if (stopped_) return;
    stopped_ = true;
    if (hooks_.stop) hooks_.stop(*ctx_);
  }
  bool finished() const override { return stopped_; }

 private:
  WorkloadHooks hooks_;
  std::unique_ptr<WorkloadContext> ctx_;
  bool stopped_ = false;
};

const fabric::Port& check_port(const fabric::Topology& topo, const std::string& tenant, const std::string& id) {
  const fabric::Port* p = topo.find_port(id);
  if (!p) throw Error(ErrorCode::BadAttach, "attach port " + id + " does not exist");
  if (p->device_owner != fabric::DeviceOwner::ComputeNova)
    throw Error(ErrorCode::BadAttach, "attach port " + id + " is not a VM port");
  if (p->tenant_id != tenant) throw Error(ErrorCode::NotOwner, "port " + id + " belongs to another tenant");
  return *p;
}

}  // namespace

std::optional<std::string> check_attach(const fabric::Topology& topo, const std::string& tenant_id,
                                        const WorkloadConfig& config, const HookRegistry* hooks) {
  validate(config);
  if (!topo.tenants().count(tenant_id)) throw Error(ErrorCode::NotOwner, "unknown tenant " + tenant_id);

  if (const auto* c = std::get_if<Custom>(&config.kind)) {
    if (!hooks || !hooks->find(c->name))
      throw Error(ErrorCode::BadAttach, "no hooks registered for custom workload '" + c->name + "'");
  }
  for (const auto& id : config.attach.client_port_ids) check_port(topo, tenant_id, id);
  if (std::holds_alternative<Custom>(config.kind)) return std::nullopt;

  if (config.attach.client_port_ids.empty()) throw Error(ErrorCode::BadAttach, "workload needs a client port");
  std::optional<std::string> dst = config.attach.server_address;
  if (config.attach.server_port_id) {
    const fabric::Port& server = check_port(topo, tenant_id, *config.attach.server_port_id);
    if (!dst) dst = server.address;
  }
  if (config.attach.balancer_id) {
    auto it = topo.balancers().find(*config.attach.balancer_id);
    if (it == topo.balancers().end())
      throw Error(ErrorCode::BadAttach, "balancer " + *config.attach.balancer_id + " does not exist");
    if (it->second.tenant_id != tenant_id)
      throw Error(ErrorCode::NotOwner, "balancer " + *config.attach.balancer_id + " belongs to another tenant");
  }
  if (std::holds_alternative<Bandwidth>(config.kind) && !dst)
    throw Error(ErrorCode::BadAttach, "bandwidth workload needs a server port or address");
  if (std::holds_alternative<RequestResponse>(config.kind) && !dst && !config.attach.balancer_id)
    throw Error(ErrorCode::BadAttach, "request/response workload needs a server or a balancer");
  return dst;
}

std::unique_ptr<Workload> deploy_workload(fabric::Fabric& fabric, const std::string& tenant_id,
                                          const WorkloadConfig& config, const std::string& workload_id,
                                          const HookRegistry* hooks) {
  std::optional<std::string> dst = check_attach(fabric.topology(), tenant_id, config, hooks);
  if (const auto* c = std::get_if<Custom>(&config.kind)) {
    return std::make_unique<CustomWorkload>(fabric, tenant_id, config, workload_id, *hooks->find(c->name));
  }
  if (std::holds_alternative<Bandwidth>(config.kind)) {
    return std::make_unique<BandwidthWorkload>(fabric, tenant_id, config, workload_id, *dst);
  }
  return std::make_unique<RequestResponseWorkload>(fabric, tenant_id, config, workload_id,
                                                   config.attach.balancer_id ? std::nullopt : dst);
}

}  // namespace faultfabric::workload
