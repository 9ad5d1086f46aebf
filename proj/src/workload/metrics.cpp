#include "faultfabric/workload/metrics.hpp"

#include <cmath>

#include "faultfabric/common/error.hpp"

namespace faultfabric::workload {

namespace {

struct Acc {
  std::uint64_t n = 0;
  double sum = 0;
  double sumsq = 0;

  void add(double x) {
    ++n;
    sum += x;
    sumsq += x * x;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  // Sample standard deviation.
  double stddev() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = (sumsq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
    return var > 0 ? std::sqrt(var) : 0.0;
  }
};

struct Bucket {
  std::uint64_t completed = 0;
  std::uint64_t errors = 0;
  Acc latency;
  Acc response;
};

bool is_error(FlowEventKind k) {
  return k == FlowEventKind::Dropped || k == FlowEventKind::TimedOut || k == FlowEventKind::Rejected ||
         k == FlowEventKind::Unreachable;
}

}  // namespace

nlohmann::json to_json(const SeriesPoint& p) {
  return {{"t_s", p.t_s},
          {"throughput", p.throughput},
          {"mean_latency_ms", p.mean_latency_ms},
          {"mean_response_ms", p.mean_response_ms},
          {"error_rate", p.error_rate}};
}

nlohmann::json to_json(const MetricsSummary& m) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& p : m.series) series.push_back(to_json(p));
  return {{"window", {{"start_ms", m.window.start}, {"end_ms", m.window.end}}},
          {"throughput", m.throughput},
          {"latency_ms", {{"mean", m.latency_mean_ms}, {"stddev", m.latency_stddev_ms}}},
          {"response_time_ms", {{"mean", m.response_mean_ms}, {"stddev", m.response_stddev_ms}}},
          {"error_rate", m.error_rate},
          {"counts",
           {{"sent", m.sent},
            {"completed", m.completed},
            {"dropped", m.dropped},
            {"timed_out", m.timed_out},
            {"rejected", m.rejected},
            {"unreachable", m.unreachable},
            {"duplicates", m.duplicates}}},
          {"series", std::move(series)}};
}

MetricsSummary compute_metrics(std::span<const FlowEvent> events, Window window) {
  if (!(window.end > window.start)) throw Error(ErrorCode::EmptyWindow, "metrics window has no length");
  MetricsSummary m;
  m.window = window;

  const auto first_bucket = static_cast<std::int64_t>(std::floor(window.start / 1000.0));
  const auto last_bucket = static_cast<std::int64_t>(std::ceil(window.end / 1000.0)) - 1;
  std::vector<Bucket> buckets(static_cast<std::size_t>(last_bucket - first_bucket + 1));

  Acc latency, response;
  std::uint64_t seen = 0;
  for (const auto& e : events) {
    if (e.t < window.start || e.t >= window.end) continue;
    ++seen;
    Bucket& b = buckets[static_cast<std::size_t>(static_cast<std::int64_t>(std::floor(e.t / 1000.0)) - first_bucket)];
    switch (e.kind) {
      case FlowEventKind::Sent:
        ++m.sent;
        break;
      case FlowEventKind::Delivered: {
        if (e.duplicate) {
          ++m.duplicates;
          break;
        }
        ++m.completed;
        ++b.completed;
        const double first = e.first_byte_t.value_or(e.t);
        const double last = e.last_byte_t.value_or(first);
        latency.add(first - e.sent_at);
        response.add(last - e.sent_at);
        b.latency.add(first - e.sent_at);
        b.response.add(last - e.sent_at);
        break;
      }
      case FlowEventKind::Duplicated:
        ++m.duplicates;
        break;
      case FlowEventKind::Dropped:
        ++m.dropped;
        break;
      case FlowEventKind::TimedOut:
        ++m.timed_out;
        break;
      case FlowEventKind::Rejected:
        ++m.rejected;
        break;
      case FlowEventKind::Unreachable:
        ++m.unreachable;
        break;
      default:
        break;
    }
    if (is_error(e.kind)) ++b.errors;
  }
  if (seen == 0) throw Error(ErrorCode::EmptyWindow, "no events in metrics window");

  const double seconds = (window.end - window.start) / 1000.0;
  m.throughput = static_cast<double>(m.completed) / seconds;
  m.latency_mean_ms = latency.mean();
  m.latency_stddev_ms = latency.stddev();
  m.response_mean_ms = response.mean();
  m.response_stddev_ms = response.stddev();
  const std::uint64_t resolved = m.completed + m.errors();
  m.error_rate = resolved ? static_cast<double>(m.errors()) / static_cast<double>(resolved) : 0.0;

  for (std::size_t i = 0; i < buckets.size(); ++i) {
    const Bucket& b = buckets[i];
    const auto t_s = first_bucket + static_cast<std::int64_t>(i);
    // Edge buckets only partially overlap the window.
    const double lo = std::max(window.start, static_cast<double>(t_s) * 1000.0);
    const double hi = std::min(window.end, static_cast<double>(t_s + 1) * 1000.0);
    SeriesPoint p;
    p.t_s = t_s;
    p.throughput = static_cast<double>(b.completed) / ((hi - lo) / 1000.0);
    p.mean_latency_ms = b.latency.mean();
    p.mean_response_ms = b.response.mean();
    const std::uint64_t r = b.completed + b.errors;
    p.error_rate = r ? static_cast<double>(b.errors) / static_cast<double>(r) : 0.0;
    m.series.push_back(p);
  }
  return m;
}

}  // namespace faultfabric::workload
