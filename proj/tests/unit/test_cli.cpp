#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>

#include "faultfabric/cli/cli.hpp"
#include "faultfabric/orchestrator/rest.hpp"

using namespace faultfabric;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "faultfabric");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string fixture(const std::string& name) { return std::string(FF_FIXTURES) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("ff_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

}  // namespace

TEST(Cli, TopologyMatchesGoldenFile) {
  const Outcome r = run({"--local", fixture("minimal_2vm.json"), "topology", "--tenant", "demo"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(std::string(FF_SOURCE_DIR) + "/tests/golden/topology_minimal_2vm.json"));
}

TEST(Cli, TopologyIsTheRestPayload) {
  orchestrator::Orchestrator orch(fabric::Topology::from_file(fixture("two_tenants.json")));
  orchestrator::RestServer server(orch);
  const int port = server.start();
  const std::string url = "http://127.0.0.1:" + std::to_string(port);

  httplib::Client client("127.0.0.1", port);
  auto rest = client.Get("/topology?tenant=alpha");
  ASSERT_TRUE(rest);
  const Outcome r = run({"--url", url, "topology", "--tenant", "alpha"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, rest->body);

  // Only alpha's ids, read straight from the fixture.
  std::ifstream in(fixture("two_tenants.json"));
  const json doc = json::parse(in);
  std::set<std::string> beta;
  for (const char* k : {"networks", "ports"})
    for (const auto& e : doc[k])
      if (e["tenant_id"] == "beta") beta.insert(e["id"]);
  for (const auto& id : beta) EXPECT_EQ(r.out.find("\"" + id + "\""), std::string::npos) << id;
}

TEST(Cli, EmptyTenantPrintsEmptyGraph) {
  std::ifstream in(fixture("two_tenants.json"));
  json doc = json::parse(in);
  doc["tenants"].push_back({{"id", "gamma"}, {"name", "Gamma"}});
  const fs::path dir = scratch("empty");
  std::ofstream(dir / "topo.json") << doc.dump();

  const Outcome r = run({"--local", (dir / "topo.json").string(), "topology", "--tenant", "gamma"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json g = json::parse(r.out);
  for (const char* k : {"networks", "subnets", "ports", "routers", "floating_ips", "balancers", "edges"}) {
    ASSERT_TRUE(g.contains(k)) << k;
    EXPECT_TRUE(g[k].empty()) << k;
  }
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"plan", "run", "missing.json"}).code, cli::kUsageError);
  EXPECT_EQ(run({}).code, cli::kUsageError);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsageError);
  EXPECT_EQ(run({"topology"}).code, cli::kUsageError);
  EXPECT_EQ(run({"inject", "router"}).code, cli::kUsageError);
  EXPECT_EQ(run({"--help"}).code, cli::kOk);

  Outcome r = run({"--local", fixture("minimal_2vm.json"), "topology", "--tenant", "ghost"});
  EXPECT_EQ(r.code, cli::kApiError);
  EXPECT_NE(r.err.find("UnknownTenant"), std::string::npos) << r.err;

  r = run({"--url", "http://127.0.0.1:1", "topology", "--tenant", "demo"});
  EXPECT_EQ(r.code, cli::kApiError);

  r = run({"--local", fixture("web_3tier.json"), "inject", "port", "port-db", "--tenant", "web", "--intensity", "2"});
  EXPECT_EQ(r.code, cli::kApiError);
  EXPECT_NE(r.err.find("InvalidSpec"), std::string::npos) << r.err;

  r = run({"--local", fixture("web_3tier.json"), "inject", "network", "ext-net", "--tenant", "web"});
  EXPECT_EQ(r.code, cli::kApiError);
  EXPECT_NE(r.err.find("NotOwner"), std::string::npos) << r.err;
}

TEST(Cli, InjectWaitReachesCompleted) {
  const Outcome r = run({"--local", fixture("web_3tier.json"), "inject", "router", "r-core", "--tenant", "web", "--fault",
                     "loss", "--pattern", "persistent", "--pre", "10000", "--inject", "20000", "--post", "5000",
                     "--wait", "--timeout", "30"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(r.out);
  ASSERT_EQ(l.size(), 2u) << r.out;
  EXPECT_EQ(l[0], "inj-1");
  EXPECT_EQ(l[1], "Completed");
}

TEST(Cli, ConfigFaultWait) {
  const Outcome r = run({"--local", fixture("web_3tier.json"), "config-fault", "floatingip", "fip-web", "--tenant", "web",
                     "--outage", "5000", "--pre", "1000", "--wait"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out), (std::vector<std::string>{"inj-1", "Completed"}));
}

TEST(Cli, PlanRunWritesBundle) {
  const fs::path out = scratch("plan");
  const Outcome r = run({"--local", fixture("web_3tier.json"), "plan", "run",
                     std::string(FF_SOURCE_DIR) + "/plans/web_3tier_loss.json", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(r.out).front(), "campaign-1");
  for (const char* f : {"report.json", "series.csv", "events.log"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  const json report = json::parse(slurp(out / "report.json"));
  EXPECT_EQ(report["state"], "Finished");
  EXPECT_EQ(report["cases"].size(), 3u);  // baseline + 2
  EXPECT_EQ(slurp(out / "series.csv").rfind("t_s,throughput,mean_latency_ms,mean_response_ms,error_rate,phase\n", 0),
            0u);
}

TEST(Cli, StatusStopAndReportAgainstServer) {
  orchestrator::Orchestrator orch(fabric::Topology::from_file(fixture("web_3tier.json")));
  orchestrator::RestServer server(orch);
  const std::string url = "http://127.0.0.1:" + std::to_string(server.start());

  std::ifstream in(std::string(FF_SOURCE_DIR) + "/plans/web_3tier_loss.json");
  json plan = json::parse(in);
  const std::string id = orch.start_tests("web", orchestrator::plan_from_json(plan));
  orch.advance(15000);

  Outcome r = run({"--url", url, "plan", "status", id});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["state"], "Running");

  r = run({"--url", url, "report", id, "--out", scratch("early").string()});
  EXPECT_EQ(r.code, cli::kApiError);
  EXPECT_NE(r.err.find("NotTerminated"), std::string::npos) << r.err;

  r = run({"--url", url, "plan", "stop", id});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["state"], "Stopped");

  const fs::path out = scratch("report");
  r = run({"--url", url, "report", id, "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto bundle = orch.report(id);
  EXPECT_EQ(slurp(out / "report.json"), bundle.report_json);
  EXPECT_EQ(slurp(out / "series.csv"), bundle.series_csv);
  EXPECT_EQ(slurp(out / "events.log"), bundle.events_log);

  r = run({"--url", url, "plan", "stop", id});
  EXPECT_EQ(r.code, cli::kApiError);
}
