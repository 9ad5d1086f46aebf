#include <gtest/gtest.h>

#include <httplib.h>

#include "faultfabric/common/error.hpp"
#include "faultfabric/orchestrator/rest.hpp"

using namespace faultfabric;
using namespace faultfabric::orchestrator;
using nlohmann::json;

namespace {

class Rest : public ::testing::Test {
 protected:
  void SetUp() override { boot("web_3tier.json"); }

  void boot(const std::string& fixture) {
    server_.reset();
    orch_ = std::make_unique<Orchestrator>(fabric::Topology::from_file(std::string(FF_FIXTURES) + "/" + fixture),
                                           Options{7});
    server_ = std::make_unique<RestServer>(*orch_);
    port_ = server_->start("127.0.0.1", 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override {
    server_.reset();
    orch_.reset();
  }

  static json body(const httplib::Result& r) {
    EXPECT_TRUE(r) << "no response";
    return json::parse(r->body);
  }

  httplib::Result post(const std::string& path, const json& doc) {
    return client_->Post(path, doc.dump(), "application/json");
  }

  static json loss_fault(double pre, double inject, double post) {
    return {{"fault_type", "loss"},
            {"intensity", 1.0},
            {"pattern", "persistent"},
            {"timing", {{"pre_ms", pre}, {"inject_ms", inject}, {"post_ms", post}}}};
  }

  std::unique_ptr<Orchestrator> orch_;
  std::unique_ptr<RestServer> server_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

}  // namespace

TEST(HttpStatus, MapsErrorFamilies) {
  EXPECT_EQ(http_status(ErrorCode::UnknownTenant), 404);
  EXPECT_EQ(http_status(ErrorCode::UnknownResource), 404);
  EXPECT_EQ(http_status(ErrorCode::UnknownCampaign), 404);
  EXPECT_EQ(http_status(ErrorCode::UnknownInjection), 404);
  EXPECT_EQ(http_status(ErrorCode::NotOwner), 403);
  EXPECT_EQ(http_status(ErrorCode::ItemBusy), 409);
  EXPECT_EQ(http_status(ErrorCode::CampaignAlreadyRunning), 409);
  EXPECT_EQ(http_status(ErrorCode::NotTerminated), 409);
  EXPECT_EQ(http_status(ErrorCode::AlreadyFinished), 409);
  EXPECT_EQ(http_status(ErrorCode::InvalidSpec), 400);
  EXPECT_EQ(http_status(ErrorCode::PlanInvalid), 400);
  EXPECT_EQ(http_status(ErrorCode::ParseError), 400);
  EXPECT_EQ(http_status(ErrorCode::Internal), 500);
}

TEST_F(Rest, TopologyMatchesOrchestratorView) {
  auto r = client_->Get("/topology?tenant=web");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "application/json");
  EXPECT_EQ(r->body, orch_->topology("web").dump(2) + "\n");

  r = client_->Get("/topology");
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(body(r)["error"], "ValidationError");
  r = client_->Get("/topology?tenant=ghost");
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(body(r)["error"], "UnknownTenant");
}

TEST_F(Rest, InjectEveryResourceKind) {
  const std::vector<std::pair<std::string, std::string>> targets = {
      {"network", "net-db"}, {"subnet", "sub-remote"}, {"router", "r-edge"}, {"floatingip", "fip-web"},
      {"port", "port-app-2"}};
  for (const auto& [kind, id] : targets) {
    auto r = post("/inject/" + kind, {{"tenant", "web"}, {"id", id}, {"fault", loss_fault(0, 5000, 0)}});
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 201) << kind << ": " << r->body;
    const json h = json::parse(r->body);
    EXPECT_EQ(h["resource"]["id"], id);
    EXPECT_FALSE(h["items"].empty()) << kind;
  }
  orch_->run_until_idle();
  for (int i = 1; i <= 5; ++i) {
    auto r = client_->Get(("/injections/inj-" + std::to_string(i)).c_str());
    ASSERT_EQ(r->status, 200);
    EXPECT_EQ(body(r)["phase"], "Completed");
  }
}

TEST_F(Rest, FlatSpecEqualsNestedSpec) {
  json flat = loss_fault(1000, 2000, 0);
  flat["tenant"] = "web";
  flat["id"] = "port-db";
  auto r = post("/inject/port", flat);
  ASSERT_EQ(r->status, 201) << r->body;
  EXPECT_EQ(body(r)["fault"], faultengine::to_json(faultengine::fault_spec_from_json(loss_fault(1000, 2000, 0))));
}

TEST_F(Rest, InjectErrorsCarryCodeAndMessage) {
  auto r = client_->Post("/inject/port", "{not json", "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(body(r)["error"], "ParseError");

  r = post("/inject/port", {{"id", "port-db"}, {"fault", loss_fault(0, 1000, 0)}});
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(body(r)["error"], "ValidationError");

  json bad = loss_fault(0, 1000, 0);
  bad["intensity"] = 1.5;
  r = post("/inject/port", {{"tenant", "web"}, {"id", "port-db"}, {"fault", bad}});
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(body(r)["error"], "InvalidSpec");

  r = post("/inject/port", {{"tenant", "web"}, {"id", "port-none"}, {"fault", loss_fault(0, 1000, 0)}});
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(body(r)["error"], "UnknownResource");

  r = post("/inject/network", {{"tenant", "web"}, {"id", "ext-net"}, {"fault", loss_fault(0, 1000, 0)}});
  EXPECT_EQ(r->status, 403);
  EXPECT_EQ(body(r)["error"], "NotOwner");

  r = post("/inject/port", {{"tenant", "web"}, {"id", "port-db"}, {"fault", loss_fault(0, 1000, 0)}});
  ASSERT_EQ(r->status, 201);
  r = post("/inject/subnet", {{"tenant", "web"}, {"id", "sub-db"}, {"fault", loss_fault(0, 1000, 0)}});
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(body(r)["error"], "ItemBusy");
  EXPECT_FALSE(body(r)["message"].get<std::string>().empty());
}

TEST_F(Rest, TenantFromQueryOrHeader) {
  auto r = client_->Post("/inject/port?tenant=web", json{{"id", "port-db"}, {"fault", loss_fault(0, 1000, 0)}}.dump(),
                         "application/json");
  EXPECT_EQ(r->status, 201) << r->body;
  httplib::Headers headers = {{"X-Tenant", "web"}};
  r = client_->Post("/inject/port", headers, json{{"id", "port-web"}, {"fault", loss_fault(0, 1000, 0)}}.dump(),
                    "application/json");
  EXPECT_EQ(r->status, 201) << r->body;
}

TEST_F(Rest, ClearInjection) {
  auto r = post("/inject/router", {{"tenant", "web"}, {"id", "r-core"}, {"fault", loss_fault(0, 60000, 0)}});
  ASSERT_EQ(r->status, 201);
  const std::string id = body(r)["id"];
  orch_->advance(1000);

  r = client_->Delete(("/injections/" + id + "?tenant=admin").c_str());
  EXPECT_EQ(r->status, 403);
  r = client_->Delete(("/injections/" + id + "?tenant=web").c_str());
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(body(r)["phase"], "Aborted");
  r = client_->Delete(("/injections/" + id).c_str());
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(body(r)["error"], "AlreadyFinished");
  r = client_->Get("/injections/inj-99");
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(body(r)["error"], "UnknownInjection");
}

TEST_F(Rest, ConfigFaultRoundTrip) {
  auto r = post("/inject/config",
                {{"tenant", "web"}, {"kind", "router"}, {"id", "r-core"}, {"outage_ms", 5000}, {"pre_ms", 1000}});
  ASSERT_EQ(r->status, 201) << r->body;
  const std::string id = body(r)["id"];
  orch_->run_until_idle();
  r = client_->Get(("/injections/" + id).c_str());
  const json h = body(r);
  EXPECT_EQ(h["phase"], "Completed");
  EXPECT_EQ(h["outage_ms"], 5000);
  EXPECT_EQ(h["window_ms"][0], 1000);
  EXPECT_EQ(h["window_ms"][1], 6000);
  EXPECT_TRUE(orch_->fabric().topology().routers().count("r-core"));

  r = post("/inject/config", {{"tenant", "web"}, {"kind", "gizmo"}, {"id", "r-core"}, {"outage_ms", 5000}});
  EXPECT_EQ(r->status, 400);
}

TEST_F(Rest, CampaignLifecycleAndReport) {
  const json plan = {
      {"tenant", "web"},
      {"name", "rest"},
      {"cases",
       {{{"id", "c0"},
         {"target", {{"kind", "port"}, {"id", "port-db"}}},
         {"fault", loss_fault(1000, 2000, 1000)},
         {"workload",
          {{"kind", "bandwidth"},
           {"pkts_per_s", 50},
           {"duration_ms", 2000},
           {"attach", {{"clients", {"port-app-1"}}, {"server", "port-db"}}}}},
         {"repetitions", 2}}}}};
  auto r = post("/campaigns", plan);
  ASSERT_EQ(r->status, 201) << r->body;
  const std::string id = body(r)["id"];
  EXPECT_EQ(id, "campaign-1");

  r = post("/campaigns", plan);
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(body(r)["error"], "CampaignAlreadyRunning");

  r = client_->Get(("/campaigns/" + id + "/report").c_str());
  EXPECT_EQ(r->status, 409);
  EXPECT_EQ(body(r)["error"], "NotTerminated");

  orch_->run_until_idle();
  r = client_->Get(("/campaigns/" + id).c_str());
  EXPECT_EQ(body(r)["state"], "Finished");

  const ReportBundle b = orch_->report(id);
  r = client_->Get(("/campaigns/" + id + "/report").c_str());
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(r->body, b.report_json);
  r = client_->Get(("/campaigns/" + id + "/report?file=series.csv").c_str());
  EXPECT_EQ(r->body, b.series_csv);
  EXPECT_EQ(r->get_header_value("Content-Type"), "text/csv");
  r = client_->Get(("/campaigns/" + id + "/report?file=events.log").c_str());
  EXPECT_EQ(r->body, b.events_log);
  r = client_->Get(("/campaigns/" + id + "/report?file=passwd").c_str());
  EXPECT_EQ(r->status, 404);

  r = client_->Delete(("/campaigns/" + id).c_str());
  EXPECT_EQ(r->status, 409);
  r = client_->Get("/campaigns/campaign-9");
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(body(r)["error"], "UnknownCampaign");
}

TEST_F(Rest, StopCampaign) {
  const json plan = {{"tenant", "web"},
                     {"cases",
                      {{{"target", {{"kind", "network"}, {"id", "net-app"}}},
                        {"fault", loss_fault(0, 30000, 0)},
                        {"workload",
                         {{"kind", "bandwidth"},
                          {"pkts_per_s", 10},
                          {"duration_ms", 10000},
                          {"attach", {{"clients", {"port-web"}}, {"server", "port-app-1"}}}}},
                        {"repetitions", 4}}}}};
  auto r = post("/campaigns", plan);
  ASSERT_EQ(r->status, 201) << r->body;
  orch_->advance(25000);
  r = client_->Delete("/campaigns/campaign-1");
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(body(r)["state"], "Stopped");

  r = post("/campaigns", {{"tenant", "web"}, {"cases", {{{"workload", {{"kind", "nope"}}}}}}});
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(body(r)["error"], "PlanInvalid");
}

TEST_F(Rest, EveryListedRouteIsServed) {
  // A route without a handler gets httplib's empty 404; a handled one
  // always answers with a JSON body.
  for (const auto& [method, pattern] : RestServer::routes()) {
    std::string path = pattern;
    const auto colon = path.find(":id");
    if (colon != std::string::npos) path.replace(colon, 3, "x");
    httplib::Result r = method == "GET"    ? client_->Get(path)
                        : method == "POST" ? client_->Post(path, "{}", "application/json")
                                           : client_->Delete(path);
    ASSERT_TRUE(r) << method << " " << path;
    EXPECT_FALSE(r->body.empty()) << method << " " << path;
    EXPECT_TRUE(json::accept(r->body)) << method << " " << path;
  }
}

TEST_F(Rest, ClockPumpDrivesInjectionToCompletion) {
  ClockPump pump(*orch_);
  auto r = post("/inject/port", {{"tenant", "web"}, {"id", "port-db"}, {"fault", loss_fault(1000, 2000, 500)}});
  ASSERT_EQ(r->status, 201);
  for (int i = 0; i < 500; ++i) {
    if (body(client_->Get("/injections/inj-1"))["phase"] == "Completed") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  EXPECT_EQ(body(client_->Get("/injections/inj-1"))["phase"], "Completed");
  pump.stop();
  EXPECT_GE(orch_->now(), 3500);
}
