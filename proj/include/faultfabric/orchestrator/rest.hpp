#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "faultfabric/common/error.hpp"
#include "faultfabric/orchestrator/orchestrator.hpp"

namespace faultfabric::orchestrator {

int http_status(ErrorCode code);

// Moves the fabric clock from a background thread. Deterministic mode steps
// as fast as possible while the orchestrator has pending work and idles
// otherwise; wall-anchored mode keeps simulated time equal to elapsed wall
// time since the pump started.
class ClockPump {
 public:
  explicit ClockPump(Orchestrator& orch, double slice_ms = 1000);
  ~ClockPump();
  void stop();

 private:
  void run();

  Orchestrator& orch_;
  double slice_ms_;
  std::atomic<bool> running_{true};
  std::thread thread_;
};

// HTTP front end. Bodies are JSON; errors come back as
// {"error": "<code>", "message": "..."} with a mapped status.
class RestServer {
 public:
  explicit RestServer(Orchestrator& orch);
  ~RestServer();

  // Binds and serves on a background thread; port 0 picks a free one.
  // Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

  // (method, path pattern) of every handler.
  static const std::vector<std::pair<std::string, std::string>>& routes();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace faultfabric::orchestrator
