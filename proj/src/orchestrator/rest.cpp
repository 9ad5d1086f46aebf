#include "faultfabric/orchestrator/rest.hpp"

#include <chrono>
#include <functional>

#include <httplib.h>

namespace faultfabric::orchestrator {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
    case ErrorCode::UnknownResource:
    case ErrorCode::UnknownTenant:
    case ErrorCode::UnknownCampaign:
    case ErrorCode::UnknownInjection:
      return 404;
    case ErrorCode::NotOwner:
      return 403;
    case ErrorCode::Busy:
    case ErrorCode::ItemBusy:
    case ErrorCode::Conflict:
    case ErrorCode::StaleSnapshot:
    case ErrorCode::AlreadyInjected:
    case ErrorCode::NotInjected:
    case ErrorCode::CampaignAlreadyRunning:
    case ErrorCode::AlreadyFinished:
    case ErrorCode::NotTerminated:
      return 409;
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::InvalidSpec:
    case ErrorCode::PlanInvalid:
    case ErrorCode::BadAttach:
    case ErrorCode::EmptyWindow:
    case ErrorCode::OutOfWindow:
    case ErrorCode::EmptyPayload:
      return 400;
    default:
      return 500;
  }
}

// ---- pump -----------------------------------------------------------------

ClockPump::ClockPump(Orchestrator& orch, double slice_ms) : orch_(orch), slice_ms_(slice_ms) {
  thread_ = std::thread([this] { run(); });
}

ClockPump::~ClockPump() { stop(); }

void ClockPump::stop() {
  running_ = false;
  if (thread_.joinable()) thread_.join();
}

void ClockPump::run() {
  using clock = std::chrono::steady_clock;
  const bool wall = orch_.fabric().clock_mode() == fabric::ClockMode::WallAnchored;
  const auto t0 = clock::now();
  const SimTime base = orch_.now();
  while (running_) {
    if (wall) {
      const double elapsed = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      orch_.advance(base + elapsed);
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    } else if (orch_.busy()) {
      orch_.advance(orch_.now() + slice_ms_);
    } else {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }
}

// ---- server ---------------------------------------------------------------

namespace {

constexpr const char* kJson = "application/json";

const char* kInjectKinds[] = {"network", "subnet", "router", "floatingip", "port"};

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", kJson);
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& msg) {
  send_json(res, http_status(code), {{"error", to_string(code)}, {"message", msg}});
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("request body is not JSON: ") + e.what());
  }
}

// The tenant is taken on trust from the body, the query or a header.
std::optional<std::string> tenant_of(const httplib::Request& req, const json& body) {
  if (body.is_object() && body.contains("tenant") && body["tenant"].is_string())
    return body["tenant"].get<std::string>();
  if (req.has_param("tenant")) return req.get_param_value("tenant");
  if (req.has_header("X-Tenant")) return req.get_header_value("X-Tenant");
  return std::nullopt;
}

std::string require_tenant(const httplib::Request& req, const json& body) {
  auto t = tenant_of(req, body);
  if (!t || t->empty()) throw Error(ErrorCode::ValidationError, "tenant is required");
  return *t;
}

std::string require_string(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string())
    throw Error(ErrorCode::ValidationError, std::string("'") + key + "' must be a string");
  return body[key].get<std::string>();
}

double number_or(const json& body, const char* key, double dflt) {
  if (!body.contains(key)) return dflt;
  if (!body[key].is_number()) throw Error(ErrorCode::ValidationError, std::string("'") + key + "' must be a number");
  return body[key].get<double>();
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

httplib::Server::Handler guarded(Handler h) {
  return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::ValidationError, e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::Internal, e.what());
    }
  };
}

}  // namespace

struct RestServer::Impl {
  Orchestrator& orch;
  httplib::Server server;

  explicit Impl(Orchestrator& o) : orch(o) { install(); }

  void install() {
    server.Get("/topology", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_param("tenant")) throw Error(ErrorCode::ValidationError, "query parameter 'tenant' is required");
      send_json(res, 200, orch.topology(req.get_param_value("tenant")));
    }));

    server.Post("/inject/config", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = body_of(req);
      const std::string tenant = require_tenant(req, body);
      const ResourceKind kind = resource_kind_from_string(require_string(body, "kind"));
      const InjectionHandle h =
          orch.inject_config_fault(tenant, kind, require_string(body, "id"), number_or(body, "outage_ms", 0),
                                   number_or(body, "pre_ms", 0), number_or(body, "post_ms", 0));
      send_json(res, 201, to_json(h));
    }));

    for (const char* kind_name : kInjectKinds) {
      const ResourceKind kind = resource_kind_from_string(kind_name);
      server.Post(std::string("/inject/") + kind_name,
                  guarded([this, kind](const httplib::Request& req, httplib::Response& res) {
                    const json body = body_of(req);
                    const std::string tenant = require_tenant(req, body);
                    // The fault spec may be nested under "fault" or sit flat in the body.
                    const json& spec_doc = body.contains("fault") ? body["fault"] : body;
                    const faultengine::FaultSpec spec = faultengine::fault_spec_from_json(spec_doc);
                    const InjectionHandle h = orch.inject_resource(tenant, kind, require_string(body, "id"), spec);
                    send_json(res, 201, to_json(h));
                  }));
    }

    server.Get("/injections/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, to_json(orch.injection(req.path_params.at("id"))));
    }));

    server.Delete("/injections/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, to_json(orch.clear_injection(req.path_params.at("id"), tenant_of(req, json::object()))));
    }));

    server.Post("/campaigns", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = body_of(req);
      const std::string tenant = require_tenant(req, body);
      const std::string id = orch.start_tests(tenant, plan_from_json(body));
      send_json(res, 201, orch.status_tests(id));
    }));

    server.Get("/campaigns/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, orch.status_tests(req.path_params.at("id")));
    }));

    server.Delete("/campaigns/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string& id = req.path_params.at("id");
      orch.stop_tests(id);
      send_json(res, 200, orch.status_tests(id));
    }));

    server.Get("/campaigns/:id/report", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const ReportBundle b = orch.report(req.path_params.at("id"));
      const std::string file = req.has_param("file") ? req.get_param_value("file") : "report.json";
      res.status = 200;
      if (file == "report.json") {
        res.set_content(b.report_json, kJson);
      } else if (file == "series.csv") {
        res.set_content(b.series_csv, "text/csv");
      } else if (file == "events.log") {
        res.set_content(b.events_log, "application/x-ndjson");
      } else {
        throw Error(ErrorCode::NotFound, "no bundle file '" + file + "'");
      }
    }));
  }
};

RestServer::RestServer(Orchestrator& orch) : impl_(std::make_unique<Impl>(orch)) {}

RestServer::~RestServer() { stop(); }

int RestServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::Internal, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void RestServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port))
    throw Error(ErrorCode::Internal, "cannot listen on " + host + ":" + std::to_string(port));
}

void RestServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

const std::vector<std::pair<std::string, std::string>>& RestServer::routes() {
  static const std::vector<std::pair<std::string, std::string>> r = {
      {"GET", "/topology"},
      {"POST", "/inject/network"},
      {"POST", "/inject/subnet"},
      {"POST", "/inject/router"},
      {"POST", "/inject/floatingip"},
      {"POST", "/inject/port"},
      {"POST", "/inject/config"},
      {"GET", "/injections/:id"},
      {"DELETE", "/injections/:id"},
      {"POST", "/campaigns"},
      {"GET", "/campaigns/:id"},
      {"DELETE", "/campaigns/:id"},
      {"GET", "/campaigns/:id/report"},
  };
  return r;
}

}  // namespace faultfabric::orchestrator
