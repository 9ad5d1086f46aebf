#include <gtest/gtest.h>

#include <sys/socket.h>
#include <unistd.h>

#include <random>

#include "faultfabric/agents/agent.hpp"
#include "faultfabric/agents/transport.hpp"

using namespace faultfabric;
using namespace faultfabric::agents;
using nlohmann::json;

namespace {

fabric::Topology load(const std::string& name) {
  return fabric::Topology::from_file(std::string(FF_FIXTURES) + "/" + name);
}

faultengine::FaultSpec persistent_loss(double inject_ms = 10000) {
  faultengine::FaultSpec s;
  s.fault_type = faultengine::Loss{};
  s.pattern = faultengine::Persistent{};
  s.timing = {0, inject_ms, 0};
  return s;
}

command::Inject inject(const std::string& item, faultengine::FaultSpec spec = persistent_loss()) {
  return command::Inject{"inj-1", item, std::move(spec), 0};
}

Packet datagram(std::size_t size = 16) {
  Packet p;
  p.payload.assign(size, 0x5a);
  return p;
}

class Agents : public ::testing::Test {
 protected:
  Agents() : topo_(load("ims_dual_segment.json")), map_(mapper::build_item_map(topo_)) {}

  fabric::Topology topo_;
  mapper::ItemMap map_;
};

}  // namespace

TEST(AgentCodec, CommandsRoundTrip) {
  faultengine::FaultSpec s = persistent_loss(500);
  s.fault_type = faultengine::Delay{250, 5};
  s.seed = 9;
  const std::vector<AgentCommand> cmds = {command::Inject{"inj-7", "tap:p", s, 1234.5}, command::Clear{"qr:x"},
                                          command::ClearAll{}, command::Status{}, command::Status{"fip:y"}};
  const char* names[] = {"inject", "clear", "clear_all", "status", "status"};
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    const json j = to_json(cmds[i]);
    EXPECT_EQ(j["command"], names[i]);
    EXPECT_EQ(to_json(command_from_json(json::parse(j.dump()))), j);
  }
  const auto back = std::get<command::Inject>(command_from_json(to_json(cmds[0])));
  EXPECT_EQ(back.spec, s);
  EXPECT_EQ(back.origin, 1234.5);
}

TEST(AgentCodec, RepliesRoundTrip) {
  AgentReply r;
  r.seq = 12;
  r.items.push_back({"tap:a", "inj-1", 10, 20, 5, 3});
  const AgentReply back = reply_from_json(json::parse(to_json(r).dump()));
  EXPECT_EQ(back.seq, 12u);
  EXPECT_TRUE(back.ok);
  ASSERT_EQ(back.items.size(), 1u);
  EXPECT_EQ(back.items[0].affected, 3u);
  EXPECT_EQ(back.items[0].window_end, 20);

  const AgentReply f = reply_from_json(to_json(AgentReply::failure(ErrorCode::WrongHost, "no")));
  EXPECT_FALSE(f.ok);
  EXPECT_EQ(f.error, ErrorCode::WrongHost);
}

TEST(AgentCodec, MalformedIsParseError) {
  for (const json& j : {json{{"command", "explode"}}, json{{"command", "inject"}}, json::object()}) {
    try {
      command_from_json(j);
      ADD_FAILURE() << j;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
    }
  }
}

TEST_F(Agents, InjectThenStatusListsItem) {
  Agent a("net-0", &map_, 1);
  ASSERT_TRUE(a.handle_command(inject("qr:rif-cw-a")).ok);
  const AgentReply st = a.handle_command(command::Status{});
  ASSERT_EQ(st.items.size(), 1u);
  EXPECT_EQ(st.items[0].item_id, "qr:rif-cw-a");
  EXPECT_EQ(st.items[0].injection_id, "inj-1");
}

TEST_F(Agents, CommandErrors) {
  Agent a("net-0", &map_, 1);
  EXPECT_EQ(a.handle_command(inject("tap:port-client")).error, ErrorCode::WrongHost);
  ASSERT_TRUE(a.handle_command(inject("qr:rif-cw-a")).ok);
  EXPECT_EQ(a.handle_command(inject("qr:rif-cw-a")).error, ErrorCode::AlreadyInjected);
  EXPECT_EQ(a.handle_command(command::Clear{"qr:rif-cw2-b"}).error, ErrorCode::NotInjected);
  EXPECT_EQ(a.handle_command(inject("qr:nope")).error, ErrorCode::NotFound);
  faultengine::FaultSpec bad = persistent_loss();
  bad.intensity = 3;
  EXPECT_EQ(a.handle_command(inject("qr:rif-cw2-b", bad)).error, ErrorCode::InvalidSpec);
}

TEST_F(Agents, ClearAllEmpties) {
  Agent a("net-0", &map_, 1);
  a.handle_command(inject("qr:rif-cw-a"));
  a.handle_command(command::Inject{"inj-2", "qr:rif-cw2-b", persistent_loss(), 0});
  EXPECT_EQ(a.handle_command(command::ClearAll{}).items.size(), 2u);
  EXPECT_TRUE(a.handle_command(command::Status{}).items.empty());
  EXPECT_FALSE(a.has_active("qr:rif-cw-a"));
}

TEST_F(Agents, InterceptIdleAndActive) {
  Agent a("net-0", &map_, 1);
  const Packet p = datagram();
  EXPECT_TRUE(faultengine::is_deliver(a.intercept("qr:rif-cw-a", p, 5)));
  a.handle_command(inject("qr:rif-cw-a"));
  EXPECT_TRUE(std::holds_alternative<faultengine::outcome::Drop>(a.intercept("qr:rif-cw-a", p, 5)));
  // Only the owning item's state is consulted.
  EXPECT_TRUE(faultengine::is_deliver(a.intercept("qr:rif-cw2-b", p, 5)));
}

TEST_F(Agents, CommandLogIsTotallyOrderedWithOneReplyPerCommand) {
  Agent a("net-0", &map_, 1);
  std::mt19937_64 rng(3);
  std::vector<json> sent;
  std::vector<AgentReply> replies;
  const std::vector<std::string> items = {"qr:rif-cw-a", "qr:rif-cw2-b", "qr:rif-svc-svc", "tap:port-client"};
  for (int i = 0; i < 300; ++i) {
    const std::string& item = items[rng() % items.size()];
    AgentCommand cmd;
    switch (rng() % 4) {
      case 0: cmd = inject(item); break;
      case 1: cmd = command::Clear{item}; break;
      case 2: cmd = command::ClearAll{}; break;
      default: cmd = command::Status{}; break;
    }
    sent.push_back(to_json(cmd));
    replies.push_back(a.handle_command(cmd));
    EXPECT_EQ(replies.back().seq, static_cast<std::uint64_t>(i + 1));
  }
  const auto log = a.command_log();
  ASSERT_EQ(log.size(), 300u);
  for (std::size_t i = 0; i < log.size(); ++i) {
    EXPECT_EQ(log[i].seq, i + 1);
    EXPECT_EQ(log[i].command, sent[i]);
    EXPECT_EQ(log[i].ok, replies[i].ok);
    EXPECT_EQ(log[i].error, replies[i].error);
  }
}

TEST_F(Agents, LocalityNeverTouchesOtherHosts) {
  Agent net("net-0", &map_, 1), cmp("cmp-0", &map_, 1);
  for (const auto& [id, item] : map_.items()) {
    const AgentReply r = net.handle_command(command::Inject{"i", id, persistent_loss(), 0});
    EXPECT_EQ(r.ok, item.location == "net-0") << id;
  }
  EXPECT_TRUE(cmp.handle_command(command::Status{}).items.empty());
}

TEST_F(Agents, InjectClearBeforeTrafficEqualsNoCommands) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Agent clean("net-0", &map_, trial), touched("net-0", &map_, trial);
    faultengine::FaultSpec s = persistent_loss();
    s.fault_type = faultengine::Corruption{3};
    s.pattern = faultengine::Random{};
    s.intensity = 0.5;
    touched.handle_command(inject("qr:rif-cw-a", s));
    touched.handle_command(command::Clear{"qr:rif-cw-a"});
    for (int i = 0; i < 200; ++i) {
      const Packet p = datagram(1 + rng() % 64);
      EXPECT_EQ(clean.intercept("qr:rif-cw-a", p, i), touched.intercept("qr:rif-cw-a", p, i));
    }
  }
}

TEST(ItemSeed, DependsOnAllThreeInputs) {
  const auto base = item_seed(1, 2, "tap:a");
  EXPECT_EQ(base, item_seed(1, 2, "tap:a"));
  EXPECT_NE(base, item_seed(3, 2, "tap:a"));
  EXPECT_NE(base, item_seed(1, 3, "tap:a"));
  EXPECT_NE(base, item_seed(1, 2, "tap:b"));
}

TEST(Frame, BigEndianLengthPrefix) {
  const std::string f = encode_frame(json{{"command", "status"}});
  const std::string body = R"({"command":"status"})";
  ASSERT_EQ(f.size(), 4 + body.size());
  EXPECT_EQ(f[0], 0);
  EXPECT_EQ(f[1], 0);
  EXPECT_EQ(f[2], 0);
  EXPECT_EQ(static_cast<unsigned char>(f[3]), body.size());
  EXPECT_EQ(f.substr(4), body);
}

TEST(Frame, ReadCleanEofTruncationAndGarbage) {
  auto pair = [] {
    int sv[2];
    EXPECT_EQ(::socketpair(AF_UNIX, SOCK_STREAM, 0, sv), 0);
    return std::pair{sv[0], sv[1]};
  };
  {
    auto [a, b] = pair();
    write_frame(a, json{{"x", 1}});
    ::close(a);
    json out;
    EXPECT_TRUE(read_frame(b, out));
    EXPECT_EQ(out["x"], 1);
    EXPECT_FALSE(read_frame(b, out));
    ::close(b);
  }
  {
    auto [a, b] = pair();
    const std::string partial = encode_frame(json{{"x", 1}}).substr(0, 6);
    ASSERT_EQ(::write(a, partial.data(), partial.size()), static_cast<ssize_t>(partial.size()));
    ::close(a);
    json out;
    try {
      read_frame(b, out);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
    }
    ::close(b);
  }
  {
    auto [a, b] = pair();
    const std::string garbage = std::string("\0\0\0\3", 4) + "{{{";
    ASSERT_EQ(::write(a, garbage.data(), garbage.size()), 7);
    ::close(a);
    json out;
    try {
      read_frame(b, out);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
    }
    ::close(b);
  }
}

TEST_F(Agents, SocketTransportMatchesInProcess) {
  Agent remote("net-0", &map_, 5), local("net-0", &map_, 5);
  AgentServer server(remote);
  AgentClient client("127.0.0.1", server.port());
  const std::vector<AgentCommand> script = {inject("qr:rif-cw-a"), command::Status{}, inject("qr:rif-cw-a"),
                                            inject("tap:port-client"), command::Clear{"qr:rif-cw-a"},
                                            command::Clear{"qr:rif-cw-a"}, command::ClearAll{}};
  for (const auto& cmd : script) {
    EXPECT_EQ(to_json(client.send(cmd)), to_json(local.handle_command(cmd)));
  }
  EXPECT_EQ(remote.command_log().size(), script.size());
}

TEST(AgentClient, ConnectFailureIsUnreachable) {
  try {
    AgentClient c("127.0.0.1", 1);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unreachable);
  }
}
