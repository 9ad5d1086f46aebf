#include "faultfabric/cli/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "faultfabric/common/error.hpp"
#include "faultfabric/orchestrator/orchestrator.hpp"
#include "faultfabric/orchestrator/rest.hpp"

namespace faultfabric::cli {

using nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& dflt) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : dflt;
}

std::uint64_t env_seed() { return std::stoull(env_or("FAULTFABRIC_SEED", "0")); }

// An API failure: printed as "error: <code>: <message>", exit 1.
struct ApiError {
  std::string code;
  std::string message;
};

// A usage failure detected after parsing, exit 2.
struct UsageError {
  std::string message;
};

class Api {
 public:
  explicit Api(const std::string& url) : client_(url) {
    client_.set_connection_timeout(5);
    client_.set_read_timeout(60);
  }

  std::string get(const std::string& path) { return check(client_.Get(path)); }
  std::string post(const std::string& path, const json& body) {
    return check(client_.Post(path, body.dump(), "application/json"));
  }
  std::string del(const std::string& path) { return check(client_.Delete(path)); }

 private:
  std::string check(const httplib::Result& res) {
    if (!res) throw ApiError{"Unreachable", "cannot reach server: " + httplib::to_string(res.error())};
    if (res->status >= 200 && res->status < 300) return res->body;
    try {
      const json j = json::parse(res->body);
      throw ApiError{j.value("error", "HTTP " + std::to_string(res->status)), j.value("message", res->body)};
    } catch (const json::exception&) {
      throw ApiError{"HTTP " + std::to_string(res->status), res->body};
    }
  }

  httplib::Client client_;
};

// Embedded server for --local.
struct LocalServer {
  std::unique_ptr<orchestrator::Orchestrator> orch;
  std::unique_ptr<orchestrator::RestServer> rest;
  std::unique_ptr<orchestrator::ClockPump> pump;
  std::string url;

  LocalServer(const std::string& topology_path, std::uint64_t seed) {
    orch = std::make_unique<orchestrator::Orchestrator>(fabric::Topology::from_file(topology_path),
                                                        orchestrator::Options{seed});
    rest = std::make_unique<orchestrator::RestServer>(*orch);
    const int port = rest->start("127.0.0.1", 0);
    pump = std::make_unique<orchestrator::ClockPump>(*orch);
    url = "http://127.0.0.1:" + std::to_string(port);
  }
  ~LocalServer() {
    pump.reset();
    rest.reset();
  }
};

// Polls until `done` says so, backing off from 10 ms to 500 ms. Gives up
// after `timeout_s` wall seconds (0 = never).
json poll(Api& api, const std::string& path, const std::function<bool(const json&)>& done, double timeout_s) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto delay = std::chrono::milliseconds(10);
  while (true) {
    json j = json::parse(api.get(path));
    if (done(j)) return j;
    if (timeout_s > 0 && std::chrono::duration<double>(clock::now() - start).count() > timeout_s)
      throw ApiError{"Timeout", "gave up waiting on " + path};
    std::this_thread::sleep_for(delay);
    delay = std::min(delay * 2, std::chrono::milliseconds(500));
  }
}

bool terminal_phase(const json& h) {
  const std::string p = h.value("phase", "");
  return p == "Completed" || p == "Aborted";
}

bool terminal_campaign(const json& c) {
  const std::string s = c.value("state", "");
  return s == "Finished" || s == "Stopped";
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw ApiError{"Internal", "cannot write " + p.string()};
}

std::filesystem::path fetch_bundle(Api& api, const std::string& id, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string base = "/campaigns/" + id + "/report?file=";
  for (const char* f : {"report.json", "series.csv", "events.log"}) write_file(dir / f, api.get(base + f));
  return dir;
}

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fault injection over a simulated data-center fabric", "faultfabric"};
  app.require_subcommand(1);

  std::string url = env_or("FAULTFABRIC_URL", "http://127.0.0.1:8080");
  std::string local;
  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--url", url, "Server address (FAULTFABRIC_URL)");
  app.add_option("--local", local, "Run against an embedded server over this topology file");
  app.add_option("--seed", seed, "Global seed for --local and serve (FAULTFABRIC_SEED)")
      ->each([&](const std::string&) { seed_given = true; });

  // serve
  auto* serve = app.add_subcommand("serve", "Run the REST service");
  std::string topology_path = env_or("FAULTFABRIC_TOPOLOGY", "");
  std::string host = "127.0.0.1";
  int port = 8080;
  bool realtime = false;
  serve->add_option("--topology", topology_path, "Topology document (FAULTFABRIC_TOPOLOGY)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Listen port");
  serve->add_flag("--realtime", realtime, "Anchor simulated time to the wall clock");

  // topology
  auto* topo = app.add_subcommand("topology", "Print a tenant's network graph");
  std::string tenant;
  topo->add_option("--tenant", tenant, "Tenant id")->required();

  // inject
  auto* inject = app.add_subcommand("inject", "Inject a traffic fault into a resource");
  std::string kind, resource;
  std::string fault = "loss", pattern = "persistent";
  double intensity = 1.0, pre = 0, inject_ms = 1000, post = 0;
  std::optional<double> amount, jitter, rate, burst, period, duty;
  std::optional<int> bytes, service_port;
  std::optional<std::string> protocol;
  std::uint64_t spec_seed = 0;
  bool wait = false;
  double timeout_s = 0;
  inject->add_option("kind", kind, "network | subnet | router | floatingip | port")->required();
  inject->add_option("id", resource, "Resource id")->required();
  inject->add_option("--tenant", tenant, "Tenant id")->required();
  inject->add_option("--fault", fault, "loss | delay | corruption | duplication | rate_limit");
  inject->add_option("--intensity", intensity, "Fraction of matching traffic affected");
  inject->add_option("--pattern", pattern, "random | persistent | bursty | degradation");
  inject->add_option("--pre", pre, "Pre-injection time, ms");
  inject->add_option("--inject", inject_ms, "Injection time, ms");
  inject->add_option("--post", post, "Post-injection time, ms");
  inject->add_option("--amount", amount, "Delay amount, ms");
  inject->add_option("--jitter", jitter, "Delay jitter, ms");
  inject->add_option("--bytes", bytes, "Bytes corrupted per packet");
  inject->add_option("--rate", rate, "Rate limit, packets/s");
  inject->add_option("--burst", burst, "Rate limit burst, packets");
  inject->add_option("--period", period, "Bursty period, ms");
  inject->add_option("--duty", duty, "Bursty duty fraction");
  inject->add_option("--protocol", protocol, "Only affect tcp or udp");
  inject->add_option("--service-port", service_port, "Only affect this service port");
  inject->add_option("--fault-seed", spec_seed, "Seed of this fault");
  inject->add_flag("--wait", wait, "Block until the injection completes");
  inject->add_option("--timeout", timeout_s, "Give up waiting after this many wall seconds");

  // config-fault
  auto* config = app.add_subcommand("config-fault", "Delete a resource and restore it after an outage");
  double outage = 0;
  config->add_option("kind", kind, "network | subnet | router | floatingip | port")->required();
  config->add_option("id", resource, "Resource id")->required();
  config->add_option("--tenant", tenant, "Tenant id")->required();
  config->add_option("--outage", outage, "Outage length, ms")->required();
  config->add_option("--pre", pre, "Delay before deletion, ms");
  config->add_option("--post", post, "Observation time after restore, ms");
  config->add_flag("--wait", wait, "Block until the resource is back");
  config->add_option("--timeout", timeout_s, "Give up waiting after this many wall seconds");

  // plan
  auto* plan = app.add_subcommand("plan", "Run and manage test campaigns");
  plan->require_subcommand(1);
  auto* plan_run = plan->add_subcommand("run", "Run a plan document, wait, and write its report bundle");
  std::string plan_file, out_dir;
  plan_run->add_option("file", plan_file, "Plan document")->required();
  plan_run->add_option("--tenant", tenant, "Tenant id (default: the plan's)");
  plan_run->add_option("--out", out_dir, "Bundle directory (default reports/<campaign id>)");
  plan_run->add_option("--timeout", timeout_s, "Give up waiting after this many wall seconds");
  auto* plan_status = plan->add_subcommand("status", "Show campaign progress");
  std::string campaign_id;
  plan_status->add_option("id", campaign_id, "Campaign id")->required();
  auto* plan_stop = plan->add_subcommand("stop", "Stop a campaign");
  plan_stop->add_option("id", campaign_id, "Campaign id")->required();

  // report
  auto* report = app.add_subcommand("report", "Download a campaign's report bundle");
  report->add_option("id", campaign_id, "Campaign id")->required();
  report->add_option("--out", out_dir, "Bundle directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  }
  if (!seed_given) seed = env_seed();

  try {
    if (*serve) {
      if (topology_path.empty()) throw UsageError{"serve needs --topology or FAULTFABRIC_TOPOLOGY"};
      orchestrator::Options opts{seed, realtime ? fabric::ClockMode::WallAnchored : fabric::ClockMode::Deterministic};
      orchestrator::Orchestrator orch(fabric::Topology::from_file(topology_path), opts);
      orchestrator::RestServer rest(orch);
      const int bound = rest.start(host, port);
      orchestrator::ClockPump pump(orch);
      err << "listening on http://" << host << ":" << bound << "\n";
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
      pump.stop();
      rest.stop();
      return kOk;
    }

    // Checked before any server is spawned or contacted.
    json plan_doc;
    if (*plan_run) {
      std::ifstream in(plan_file);
      if (!in) throw UsageError{"cannot open plan file " + plan_file};
      try {
        plan_doc = json::parse(in);
      } catch (const json::exception& e) {
        throw UsageError{"plan file " + plan_file + " is not JSON: " + e.what()};
      }
      if (tenant.empty()) tenant = plan_doc.is_object() ? plan_doc.value("tenant", std::string()) : "";
      if (tenant.empty()) throw UsageError{"plan run needs --tenant or a 'tenant' field in the plan"};
      plan_doc["tenant"] = tenant;
    }

    std::unique_ptr<LocalServer> embedded;
    if (!local.empty()) {
      embedded = std::make_unique<LocalServer>(local, seed);
      url = embedded->url;
    }
    Api api(url);

    if (*topo) {
      out << json::parse(api.get("/topology?tenant=" + httplib::detail::encode_query_param(tenant))).dump(2) << "\n";
    } else if (*inject) {
      json body = {{"tenant", tenant},
                   {"id", resource},
                   {"fault_type", fault},
                   {"intensity", intensity},
                   {"pattern", pattern},
                   {"seed", spec_seed},
                   {"timing", {{"pre_ms", pre}, {"inject_ms", inject_ms}, {"post_ms", post}}}};
      if (amount) body["amount_ms"] = *amount;
      if (jitter) body["jitter_ms"] = *jitter;
      if (bytes) body["bytes_affected"] = *bytes;
      if (rate) body["rate_pkts_per_s"] = *rate;
      if (burst) body["burst_pkts"] = *burst;
      if (period) body["period_ms"] = *period;
      if (duty) body["duty_fraction"] = *duty;
      if (protocol || service_port) {
        json f = {{"protocol", protocol.value_or("tcp")}};
        if (service_port) f["port"] = *service_port;
        body["protocol_filter"] = f;
      }
      const json h = json::parse(api.post("/inject/" + kind, body));
      out << h["id"].get<std::string>() << "\n";
      if (wait) {
        const json done = poll(api, "/injections/" + h["id"].get<std::string>(), terminal_phase, timeout_s);
        out << done["phase"].get<std::string>() << "\n";
        if (done["phase"] != "Completed") return kApiError;
      }
    } else if (*config) {
      json body = {{"tenant", tenant}, {"kind", kind}, {"id", resource}, {"outage_ms", outage},
                   {"pre_ms", pre},    {"post_ms", post}};
      const json h = json::parse(api.post("/inject/config", body));
      out << h["id"].get<std::string>() << "\n";
      if (wait) {
        const json done = poll(api, "/injections/" + h["id"].get<std::string>(), terminal_phase, timeout_s);
        out << done["phase"].get<std::string>() << "\n";
        if (done["phase"] != "Completed") return kApiError;
      }
    } else if (*plan_run) {
      const json c = json::parse(api.post("/campaigns", plan_doc));
      const std::string id = c["id"];
      out << id << "\n";
      const json final_state = poll(api, "/campaigns/" + id, terminal_campaign, timeout_s);
      const auto dir = fetch_bundle(api, id, out_dir.empty() ? std::filesystem::path("reports") / id : std::filesystem::path(out_dir));
      out << final_state["state"].get<std::string>() << " " << dir.string() << "\n";
      if (final_state["state"] != "Finished") return kApiError;
    } else if (*plan_status) {
      out << json::parse(api.get("/campaigns/" + campaign_id)).dump(2) << "\n";
    } else if (*plan_stop) {
      out << json::parse(api.del("/campaigns/" + campaign_id)).dump(2) << "\n";
    } else if (*report) {
      out << fetch_bundle(api, campaign_id, out_dir).string() << "\n";
    }
    return kOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.message << "\n";
    return kUsageError;
  } catch (const ApiError& e) {
    err << "error: " << e.code << ": " << e.message << "\n";
    return kApiError;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kApiError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kApiError;
  }
}

}  // namespace faultfabric::cli
