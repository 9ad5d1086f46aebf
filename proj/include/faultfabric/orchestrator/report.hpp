#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "faultfabric/common/flow_event.hpp"
#include "faultfabric/orchestrator/plan.hpp"
#include "faultfabric/workload/metrics.hpp"

namespace faultfabric::orchestrator {

enum class CaseState { Pending, Running, Completed, Aborted };

std::string_view to_string(CaseState s);

struct RepetitionResult {
  int index = 0;
  double start_ms = 0;  // relative to case start
  double end_ms = 0;
  bool fault_exposed = false;
  std::optional<workload::MetricsSummary> metrics;
};

struct CaseResult {
  TestCase test_case;
  CaseState state = CaseState::Pending;
  SimTime started_at = 0;
  SimTime ended_at = 0;
  std::optional<std::string> injection_id;
  // Actual fault window relative to case start, from the handle's phases.
  std::optional<std::pair<double, double>> fault_window;
  // Transaction stream of every repetition, time ordered.
  std::vector<FlowEvent> transactions;
  // Raw fabric events of the tenant while the case ran.
  std::vector<FlowEvent> events;
  std::optional<workload::MetricsSummary> metrics;
  std::vector<RepetitionResult> repetitions;
  std::string error;

  double duration_ms() const { return ended_at - started_at; }
};

// Per-case metrics over the case window, with times shifted so the case
// starts at 0. The series then has ceil(duration / 1 s) points. Fills
// `metrics` and `repetitions`; leaves them empty when nothing happened.
void compute_case_metrics(CaseResult& result);

// "pre" | "injection" | "post" | "baseline" for the second [t_s, t_s + 1).
std::string phase_label(const CaseResult& result, std::int64_t t_s);

// The three files of a report bundle, as bytes.
struct ReportBundle {
  std::string report_json;
  std::string series_csv;
  std::string events_log;
};

struct CampaignSummary {
  std::string id;
  std::string tenant_id;
  std::string name;
  std::string state;
  SimTime started_at = 0;
  SimTime ended_at = 0;
};

nlohmann::json metrics_row(const workload::MetricsSummary& m);
nlohmann::json report_to_json(const CampaignSummary& c, const std::vector<CaseResult>& cases);
ReportBundle build_bundle(const CampaignSummary& c, const std::vector<CaseResult>& cases);
// Creates `dir` and writes report.json, series.csv and events.log into it.
void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir);

}  // namespace faultfabric::orchestrator
