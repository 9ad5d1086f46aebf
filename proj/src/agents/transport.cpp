#include "faultfabric/agents/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace faultfabric::agents {

using nlohmann::json;

namespace {

// Reads exactly n bytes. Returns the count read before EOF.
std::size_t read_full(int fd, char* buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    ssize_t r = ::recv(fd, buf + got, n - got, 0);
    if (r == 0) break;
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::Internal, std::string("recv: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(r);
  }
  return got;
}

void write_full(int fd, const char* buf, std::size_t n) {
  std::size_t put = 0;
  while (put < n) {
    ssize_t w = ::send(fd, buf + put, n - put, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::Internal, std::string("send: ") + std::strerror(errno));
    }
    put += static_cast<std::size_t>(w);
  }
}

}  // namespace

std::string encode_frame(const json& body) {
  const std::string text = body.dump();
  const auto n = static_cast<std::uint32_t>(text.size());
  std::string out;
  out.reserve(4 + text.size());
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += text;
  return out;
}

bool read_frame(int fd, json& out) {
  unsigned char hdr[4];
  std::size_t got = read_full(fd, reinterpret_cast<char*>(hdr), 4);
  if (got == 0) return false;
  if (got < 4) throw Error(ErrorCode::ParseError, "truncated frame header");
  const std::uint32_t n = (std::uint32_t{hdr[0]} << 24) | (std::uint32_t{hdr[1]} << 16) |
                          (std::uint32_t{hdr[2]} << 8) | std::uint32_t{hdr[3]};
  if (n > kMaxFrameBytes) throw Error(ErrorCode::ParseError, "frame too large");
  std::string body(n, '\0');
  if (read_full(fd, body.data(), n) < n) throw Error(ErrorCode::ParseError, "truncated frame body");
  try {
    out = json::parse(body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("frame body is not JSON: ") + e.what());
  }
  return true;
}

void write_frame(int fd, const json& body) {
  const std::string frame = encode_frame(body);
  write_full(fd, frame.data(), frame.size());
}

AgentServer::AgentServer(Agent& agent, int port) : agent_(agent) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::Internal, "socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 8) < 0) {
    ::close(listen_fd_);
    throw Error(ErrorCode::Internal, std::string("agent server bind: ") + std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  thread_ = std::thread([this] { serve(); });
}

AgentServer::~AgentServer() { stop(); }

void AgentServer::stop() {
  if (!running_.exchange(false)) return;
  if (thread_.joinable()) thread_.join();
  ::close(listen_fd_);
}

void AgentServer::serve() {
  while (running_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 50) <= 0) continue;
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    try {
      while (running_) {
        pollfd cfd{fd, POLLIN, 0};
        if (::poll(&cfd, 1, 50) <= 0) continue;
        json req;
        if (!read_frame(fd, req)) break;
        AgentReply reply;
        try {
          reply = agent_.handle_command(command_from_json(req));
        } catch (const Error& e) {
          reply = AgentReply::failure(e.code(), e.what());
        }
        write_frame(fd, to_json(reply));
      }
    } catch (const Error&) {
      // Broken connection; wait for the next one.
    }
    ::close(fd);
  }
}

AgentClient::AgentClient(const std::string& host, int port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::Internal, "socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw Error(ErrorCode::ValidationError, "bad agent address " + host);
  }
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    ::close(fd_);
    throw Error(ErrorCode::Unreachable, "cannot connect to agent at " + host + ":" + std::to_string(port));
  }
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

AgentClient::~AgentClient() {
  if (fd_ >= 0) ::close(fd_);
}

AgentReply AgentClient::send(const AgentCommand& cmd) {
  write_frame(fd_, to_json(cmd));
  json reply;
  if (!read_frame(fd_, reply)) throw Error(ErrorCode::Unreachable, "agent closed the connection");
  return reply_from_json(reply);
}

}  // namespace faultfabric::agents
