#include <gtest/gtest.h>

#include "faultfabric/agents/agent.hpp"
#include "faultfabric/common/error.hpp"
#include "faultfabric/fabric/fabric.hpp"
#include "faultfabric/workload/metrics.hpp"
#include "faultfabric/workload/workload.hpp"

using namespace faultfabric;
using namespace faultfabric::workload;

namespace {

fabric::Topology load(const std::string& name) {
  return fabric::Topology::from_file(std::string(FF_FIXTURES) + "/" + name);
}

WorkloadConfig bandwidth(double pps, double duration_ms, std::string client = "port-client",
                         std::string server = "port-server") {
  WorkloadConfig c;
  Bandwidth b;
  b.pkts_per_s = pps;
  b.duration_ms = duration_ms;
  c.kind = b;
  c.attach.client_port_ids = {std::move(client)};
  c.attach.server_port_id = std::move(server);
  return c;
}

WorkloadConfig web(double duration_ms) {
  WorkloadConfig c;
  RequestResponse r;
  r.duration_ms = duration_ms;
  c.kind = r;
  c.attach.client_port_ids = {"port-client"};
  c.attach.balancer_id = "lb-sprout";
  return c;
}

std::size_t count(const std::vector<FlowEvent>& ev, FlowEventKind k) {
  return static_cast<std::size_t>(std::count_if(ev.begin(), ev.end(), [&](const FlowEvent& e) { return e.kind == k; }));
}

FlowEvent ev(FlowEventKind k, double t, double sent_at, std::optional<double> first = {},
             std::optional<double> last = {}) {
  FlowEvent e;
  e.kind = k;
  e.t = t;
  e.sent_at = sent_at;
  e.first_byte_t = first;
  e.last_byte_t = last;
  return e;
}

}  // namespace

TEST(Workload, BandwidthSendsExactCountLossless) {
  fabric::Fabric f(load("minimal_2vm.json"));
  auto w = deploy_workload(f, "demo", bandwidth(100, 10000));
  f.step(20000);
  EXPECT_TRUE(w->finished());
  EXPECT_EQ(count(w->transactions(), FlowEventKind::Sent), 1000u);
  EXPECT_EQ(count(w->transactions(), FlowEventKind::Delivered), 1000u);
}

TEST(Workload, RequestResponseOfferedRate) {
  fabric::Fabric f(load("ims_dual_segment.json"));
  auto w = deploy_workload(f, "ims", web(60000));
  f.step(80000);
  auto m = compute_metrics(w->transactions(), {0, 60000});
  EXPECT_NEAR(m.throughput, 4.0, 0.1);
  EXPECT_EQ(m.error_rate, 0.0);
  EXPECT_GT(m.response_mean_ms, m.latency_mean_ms);
}

TEST(Workload, AttachToOtherTenantIsNotOwner) {
  fabric::Fabric f(load("two_tenants.json"));
  try {
    deploy_workload(f, "alpha", bandwidth(10, 1000, "alpha-client", "beta-server"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotOwner);
  }
}

TEST(Workload, MissingPortIsBadAttach) {
  fabric::Fabric f(load("minimal_2vm.json"));
  try {
    deploy_workload(f, "demo", bandwidth(10, 1000, "port-client", "nope"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadAttach);
  }
}

TEST(Workload, ConfigJsonRoundTrip) {
  WorkloadConfig c = web(30000);
  auto j = to_json(c);
  EXPECT_EQ(to_json(workload_config_from_json(j)), j);
  j["reqs_per_min"] = 0;
  EXPECT_THROW(workload_config_from_json(j), Error);
}

TEST(Metrics, TenRequestsInTwoSeconds) {
  std::vector<FlowEvent> events;
  for (int i = 0; i < 10; ++i) {
    double t = i * 200.0;
    events.push_back(ev(FlowEventKind::Sent, t, t));
    events.push_back(ev(FlowEventKind::Delivered, t, t, t, t));
  }
  auto m = compute_metrics(events, {0, 2000});
  EXPECT_DOUBLE_EQ(m.throughput, 5.0);
  EXPECT_DOUBLE_EQ(m.latency_mean_ms, 0.0);
  EXPECT_EQ(m.series.size(), 2u);
}

TEST(Metrics, LatencyVersusResponseTime) {
  std::vector<FlowEvent> events{ev(FlowEventKind::Sent, 0, 0), ev(FlowEventKind::Delivered, 50, 0, 30, 50)};
  auto m = compute_metrics(events, {0, 1000});
  EXPECT_DOUBLE_EQ(m.latency_mean_ms, 30);
  EXPECT_DOUBLE_EQ(m.response_mean_ms, 50);
}

TEST(Metrics, ErrorRateAndEmptyWindow) {
  std::vector<FlowEvent> events{ev(FlowEventKind::Sent, 0, 0), ev(FlowEventKind::Sent, 1, 1),
                                ev(FlowEventKind::Delivered, 5, 0, 5, 5), ev(FlowEventKind::TimedOut, 10001, 1)};
  auto m = compute_metrics(events, {0, 20000});
  EXPECT_DOUBLE_EQ(m.error_rate, 0.5);
  EXPECT_THROW(compute_metrics(events, {5, 5}), Error);
  EXPECT_THROW(compute_metrics(events, {30000, 40000}), Error);
}

TEST(Metrics, DuplicatesNeverCountAsCompletions) {
  FlowEvent dup = ev(FlowEventKind::Delivered, 6, 0, 6, 6);
  dup.duplicate = true;
  std::vector<FlowEvent> events{ev(FlowEventKind::Sent, 0, 0), ev(FlowEventKind::Delivered, 5, 0, 5, 5), dup};
  auto m = compute_metrics(events, {0, 1000});
  EXPECT_EQ(m.completed, 1u);
  EXPECT_EQ(m.duplicates, 1u);
}

// Sent == Delivered + Dropped + TimedOut + Rejected + Unreachable under a
// lossy, corrupting, duplicating fabric.
TEST(Workload, ConservationUnderFaults) {
  for (auto kind : {"loss", "corruption", "duplication"}) {
    fabric::Fabric f(load("ims_dual_segment.json"));
    agents::AgentBus bus(f, 7);
    faultengine::FaultSpec spec = faultengine::fault_spec_from_json(
        {{"fault_type", kind}, {"intensity", 0.3}, {"pattern", "random"}, {"timing", {{"inject_ms", 60000}}}});
    auto reply = bus.send("net-0", agents::command::Inject{"i1", "qr:rif-cw2-b", spec, 0});
    ASSERT_TRUE(reply.ok) << reply.message;
    auto w = deploy_workload(f, "ims", web(60000));
    f.step(90000);
    ASSERT_TRUE(w->finished());
    const auto& t = w->transactions();
    EXPECT_EQ(count(t, FlowEventKind::Sent),
              count(t, FlowEventKind::Delivered) + count(t, FlowEventKind::Dropped) +
                  count(t, FlowEventKind::TimedOut) + count(t, FlowEventKind::Rejected) +
                  count(t, FlowEventKind::Unreachable))
        << kind;
  }
}
