#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "faultfabric/common/flow_event.hpp"

namespace faultfabric::workload {

struct Window {
  SimTime start = 0;
  SimTime end = 0;
};

struct SeriesPoint {
  std::int64_t t_s = 0;
  double throughput = 0;
  double mean_latency_ms = 0;
  double mean_response_ms = 0;
  double error_rate = 0;
};

struct MetricsSummary {
  Window window;
  double throughput = 0;  // completions per second
  double latency_mean_ms = 0;
  double latency_stddev_ms = 0;
  double response_mean_ms = 0;
  double response_stddev_ms = 0;
  double error_rate = 0;
  std::uint64_t sent = 0;
  std::uint64_t completed = 0;
  std::uint64_t dropped = 0;
  std::uint64_t timed_out = 0;
  std::uint64_t rejected = 0;
  std::uint64_t unreachable = 0;
  std::uint64_t duplicates = 0;
  std::vector<SeriesPoint> series;

  std::uint64_t errors() const { return dropped + timed_out + rejected + unreachable; }
};

nlohmann::json to_json(const SeriesPoint& p);
nlohmann::json to_json(const MetricsSummary& m);

// Pure function of a time-ordered transaction stream. Events count where
// their timestamp falls in [window.start, window.end): completions and
// errors by resolution time, Sent by issue time. error_rate is errors over
// transactions resolved in the window. Throws EmptyWindow when the window
// has no length or holds no event.
MetricsSummary compute_metrics(std::span<const FlowEvent> events, Window window);

}  // namespace faultfabric::workload
