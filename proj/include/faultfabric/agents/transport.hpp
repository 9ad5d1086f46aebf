#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>

#include <json.hpp>

#include "faultfabric/agents/agent.hpp"

namespace faultfabric::agents {

// Frame = 4-byte big-endian body length + UTF-8 JSON body.
std::string encode_frame(const nlohmann::json& body);
// Returns false on a clean end of stream before any byte of the frame.
// Throws ParseError on a truncated frame or malformed body.
bool read_frame(int fd, nlohmann::json& out);
void write_frame(int fd, const nlohmann::json& body);

constexpr std::uint32_t kMaxFrameBytes = 16u << 20;

// Serves one agent over TCP on 127.0.0.1. One connection at a time per
// accept; each connection may carry any number of request/reply frames.
class AgentServer {
 public:
  explicit AgentServer(Agent& agent, int port = 0);
  ~AgentServer();
  AgentServer(const AgentServer&) = delete;
  AgentServer& operator=(const AgentServer&) = delete;

  int port() const { return port_; }
  void stop();

 private:
  void serve();

  Agent& agent_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{true};
  std::thread thread_;
};

class AgentClient {
 public:
  AgentClient(const std::string& host, int port);
  ~AgentClient();
  AgentClient(const AgentClient&) = delete;
  AgentClient& operator=(const AgentClient&) = delete;

  AgentReply send(const AgentCommand& cmd);

 private:
  int fd_ = -1;
};

}  // namespace faultfabric::agents
