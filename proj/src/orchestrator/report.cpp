#include "faultfabric/orchestrator/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "faultfabric/common/error.hpp"

namespace faultfabric::orchestrator {

using nlohmann::json;

std::string_view to_string(CaseState s) {
  switch (s) {
    case CaseState::Pending: return "Pending";
    case CaseState::Running: return "Running";
    case CaseState::Completed: return "Completed";
    case CaseState::Aborted: return "Aborted";
  }
  return "Pending";
}

namespace {

std::optional<workload::MetricsSummary> try_metrics(const std::vector<FlowEvent>& events, workload::Window w) {
  try {
    return workload::compute_metrics(events, w);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyWindow) throw;
    return std::nullopt;
  }
}

std::string num(double v) { return json(v).dump(); }

}  // namespace

void compute_case_metrics(CaseResult& r) {
  r.metrics.reset();
  r.repetitions.clear();
  const double duration = r.duration_ms();
  if (!(duration > 0)) return;

  std::vector<FlowEvent> shifted = r.transactions;
  for (auto& e : shifted) {
    e.t -= r.started_at;
    e.sent_at -= r.started_at;
    if (e.first_byte_t) *e.first_byte_t -= r.started_at;
    if (e.last_byte_t) *e.last_byte_t -= r.started_at;
  }
  r.metrics = try_metrics(shifted, {0, duration});

  const TestCase& c = r.test_case;
  const double rep = c.repetition_ms();
  for (int i = 0; i < c.repetitions; ++i) {
    RepetitionResult rr;
    rr.index = i;
    rr.start_ms = i * rep;
    if (rr.start_ms >= duration) break;
    rr.end_ms = (i + 1 == c.repetitions) ? duration : std::min(duration, (i + 1) * rep);
    if (r.fault_window) rr.fault_exposed = rr.start_ms < r.fault_window->second && r.fault_window->first < rr.end_ms;
    rr.metrics = try_metrics(shifted, {rr.start_ms, rr.end_ms});
    r.repetitions.push_back(std::move(rr));
  }
}

std::string phase_label(const CaseResult& r, std::int64_t t_s) {
  if (r.test_case.baseline) return "baseline";
  if (!r.fault_window) return "none";
  const double lo = static_cast<double>(t_s) * 1000.0;
  const double hi = lo + 1000.0;
  if (hi <= r.fault_window->first) return "pre";
  if (lo < r.fault_window->second) return "injection";
  return "post";
}

json metrics_row(const workload::MetricsSummary& m) {
  json j = workload::to_json(m);
  j.erase("series");
  j.erase("window");
  return j;
}

json report_to_json(const CampaignSummary& c, const std::vector<CaseResult>& cases) {
  json out_cases = json::array();
  json baseline = nullptr;
  std::int64_t offset = 0;
  for (const auto& r : cases) {
    json jc;
    jc["id"] = r.test_case.id;
    jc["baseline"] = r.test_case.baseline;
    jc["plan"] = to_json(r.test_case);
    jc["state"] = to_string(r.state);
    jc["start_ms"] = r.started_at;
    jc["end_ms"] = r.ended_at;
    jc["duration_ms"] = r.duration_ms();
    jc["series_offset_s"] = offset;
    jc["injection_id"] = r.injection_id ? json(*r.injection_id) : json(nullptr);
    jc["fault_window_ms"] =
        r.fault_window ? json::array({r.fault_window->first, r.fault_window->second}) : json(nullptr);
    jc["error"] = r.error;
    jc["metrics"] = r.metrics ? metrics_row(*r.metrics) : json(nullptr);
    json reps = json::array();
    for (const auto& rr : r.repetitions) {
      reps.push_back({{"index", rr.index},
                      {"start_ms", rr.start_ms},
                      {"end_ms", rr.end_ms},
                      {"fault_exposed", rr.fault_exposed},
                      {"metrics", rr.metrics ? metrics_row(*rr.metrics) : json(nullptr)}});
    }
    jc["repetitions"] = std::move(reps);
    json series = json::array();
    if (r.metrics) {
      for (const auto& p : r.metrics->series) {
        json jp = workload::to_json(p);
        jp["phase"] = phase_label(r, p.t_s);
        series.push_back(std::move(jp));
      }
      offset += static_cast<std::int64_t>(r.metrics->series.size());
    }
    jc["series"] = std::move(series);
    if (r.test_case.baseline) baseline = jc["metrics"];
    out_cases.push_back(std::move(jc));
  }
  return {{"campaign_id", c.id},   {"tenant_id", c.tenant_id},    {"name", c.name},
          {"state", c.state},      {"started_at_ms", c.started_at}, {"ended_at_ms", c.ended_at},
          {"baseline", baseline},  {"cases", std::move(out_cases)}};
}

ReportBundle build_bundle(const CampaignSummary& c, const std::vector<CaseResult>& cases) {
  ReportBundle b;
  b.report_json = report_to_json(c, cases).dump(2) + "\n";

  // One row per second of every case, cases back to back.
  b.series_csv = "t_s,throughput,mean_latency_ms,mean_response_ms,error_rate,phase\n";
  std::int64_t offset = 0;
  for (const auto& r : cases) {
    if (!r.metrics) continue;
    for (const auto& p : r.metrics->series) {
      b.series_csv += std::to_string(offset + p.t_s) + "," + num(p.throughput) + "," + num(p.mean_latency_ms) + "," +
                      num(p.mean_response_ms) + "," + num(p.error_rate) + "," + phase_label(r, p.t_s) + "\n";
    }
    offset += static_cast<std::int64_t>(r.metrics->series.size());
  }

  for (const auto& r : cases) {
    for (const auto& e : r.events) {
      json j = to_json(e);
      j["case"] = r.test_case.id;
      b.events_log += j.dump() + "\n";
    }
  }
  return b;
}

void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Internal, "cannot create " + dir.string() + ": " + ec.message());
  auto put = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw Error(ErrorCode::Internal, "cannot write " + (dir / name).string());
  };
  put("report.json", bundle.report_json);
  put("series.csv", bundle.series_csv);
  put("events.log", bundle.events_log);
}

}  // namespace faultfabric::orchestrator
