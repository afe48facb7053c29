#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <thread>

#include "json.hpp"

#include "forage/datagen.hpp"
#include "forage/error.hpp"
#include "forage/eval.hpp"
#include "forage/protocol.hpp"
#include "forage/rng.hpp"

using namespace forage;
using namespace std::chrono_literals;

namespace {

PolicyRequest sample_request() {
  return PolicyRequest{"ep-1", 2, "Who is the mentor of Kabo?", "<search>x</search>",
                       {Action::search(1, "Kabo"), Action::answer("Kabo"), Action::answer("Lemi")}};
}

std::string random_text(Rng& rng) {
  static const std::vector<std::string> alphabet = {"a", "b", "c", " ", "X", "\"", "\\", "\n", "\t", "{", "}",
                                                    "[", "]", ":", ",", "<", ">", "/", "\xc3\xa9", "0"};
  std::string s;
  for (std::uint64_t i = 0, n = rng.below(20); i < n; ++i) s += alphabet[rng.below(alphabet.size())];
  return s;
}

bool protocol_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() == ErrorCode::kProtocol;
  }
  return false;
}

// Accepts one connection on 127.0.0.1 and answers every request line with
// the last action index.
class LastActionServer {
 public:
  LastActionServer() {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    ::listen(fd_, 1);
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { serve(); });
  }
  ~LastActionServer() {
    thread_.join();
    ::close(fd_);
  }
  std::string address() const { return "127.0.0.1:" + std::to_string(port_); }
  int served() const { return served_; }

 private:
  void serve() {
    const int c = ::accept(fd_, nullptr, nullptr);
    std::string buf;
    char chunk[4096];
    for (;;) {
      const auto n = ::read(c, chunk, sizeof chunk);
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        const auto req = decode_request(buf.substr(0, nl));
        buf.erase(0, nl + 1);
        const std::string reply = encode_response({req.actions.size() - 1, -0.25}) + "\n";
        (void)!::write(c, reply.data(), reply.size());
        ++served_;
      }
    }
    ::close(c);
  }

  int fd_ = -1;
  int port_ = 0;
  int served_ = 0;
  std::thread thread_;
};

}  // namespace

TEST(Protocol, RequestRoundTripFuzz) {
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    PolicyRequest req{random_text(rng), rng.below(10), random_text(rng), random_text(rng), {}};
    for (std::uint64_t k = 0, n = rng.below(6); k < n; ++k) {
      req.actions.push_back(rng.below(2) ? Action::search(rng.below(8), random_text(rng)) : Action::answer(random_text(rng)));
    }
    const std::string line = encode_request(req);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    EXPECT_EQ(decode_request(line), req);
    PolicyResponse resp{rng.below(100), std::nullopt};
    if (rng.below(2)) resp.log_prob = -rng.uniform() * 5;
    EXPECT_EQ(decode_response(encode_response(resp)), resp);
  }
}

TEST(Protocol, InvalidUtf8IsReplaced) {
  PolicyRequest req = sample_request();
  req.trajectory_text = "bad \xc3 byte";
  const auto back = decode_request(encode_request(req));
  EXPECT_EQ(back.trajectory_text, "bad \xef\xbf\xbd byte");
}

TEST(Protocol, RequestShape) {
  const auto j = nlohmann::json::parse(encode_request(sample_request()));
  EXPECT_EQ(j.at("episode_id"), "ep-1");
  EXPECT_EQ(j.at("step"), 2);
  ASSERT_EQ(j.at("actions").size(), 3u);
  EXPECT_EQ(j.at("actions")[0].at("kind"), "search");
  EXPECT_EQ(j.at("actions")[0].at("payload").at("entity"), "Kabo");
  EXPECT_EQ(j.at("actions")[1].at("kind"), "answer");
  EXPECT_EQ(j.at("actions")[1].at("payload"), "Kabo");
}

TEST(Protocol, MalformedResponses) {
  EXPECT_TRUE(protocol_error([] { decode_response("not json"); }));
  EXPECT_TRUE(protocol_error([] { decode_response("{}"); }));
  EXPECT_TRUE(protocol_error([] { decode_response(R"({"action_index":-1})"); }));
  EXPECT_TRUE(protocol_error([] { decode_response(R"({"action_index":1.5})"); }));
  EXPECT_TRUE(protocol_error([] { decode_response(R"({"action_index":1,"log_prob":"x"})"); }));
  EXPECT_EQ(decode_response(R"({"action_index":2,"log_prob":-0.5})"), (PolicyResponse{2, -0.5}));
}

TEST(Protocol, EchoProcessPicksFirst) {
  auto ch = spawn_process_channel(R"(while read line; do echo '{"action_index":0}'; done)");
  const auto resp = external_policy_roundtrip(*ch, sample_request(), 5000ms);
  EXPECT_EQ(resp.action_index, 0u);
  EXPECT_FALSE(resp.log_prob.has_value());
}

TEST(Protocol, OutOfRangeIndex) {
  auto ch = spawn_process_channel(R"(while read line; do echo '{"action_index":3}'; done)");
  EXPECT_TRUE(protocol_error([&] { external_policy_roundtrip(*ch, sample_request(), 5000ms); }));
}

TEST(Protocol, TimeoutAndEof) {
  auto slow = spawn_process_channel("sleep 5");
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_TRUE(protocol_error([&] { external_policy_roundtrip(*slow, sample_request(), 200ms); }));
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 3s);
  auto gone = spawn_process_channel("exit 0");
  EXPECT_TRUE(protocol_error([&] { external_policy_roundtrip(*gone, sample_request(), 2000ms); }));
}

TEST(Protocol, TcpEpisodes) {
  GenConfig g;
  g.n_tasks = 4;
  const auto ds = generate_dataset(g);
  const Corpus corpus = Corpus::build(ds.documents);
  LastActionServer server;
  auto policy = std::make_shared<ExternalPolicy>(connect_tcp_channel(server.address()), 5000ms);
  const auto report = run_policy_eval(external_policy(policy), ds.tasks, corpus, EnvConfig{});
  EXPECT_EQ(report.failed, 0u);
  EXPECT_EQ(report.rows.size(), 4u);
  policy.reset();
  EXPECT_GT(server.served(), 0);
}

TEST(Protocol, FailedEpisodesAreCountedNotScored) {
  GenConfig g;
  g.n_tasks = 3;
  const auto ds = generate_dataset(g);
  const Corpus corpus = Corpus::build(ds.documents);
  auto policy = std::make_shared<ExternalPolicy>(
      spawn_process_channel(R"(while read line; do echo '{"action_index":999}'; done)"), 5000ms);
  const auto report = run_policy_eval(external_policy(policy), ds.tasks, corpus, EnvConfig{});
  EXPECT_EQ(report.failed, 3u);
  for (const auto& r : report.rows) {
    EXPECT_TRUE(r.failed);
    EXPECT_FALSE(r.error.empty());
  }
  EXPECT_EQ(report.em, 0.0);
}

TEST(Protocol, BadAddress) {
  EXPECT_THROW(connect_tcp_channel("nohostport"), Error);
  EXPECT_THROW(connect_tcp_channel("127.0.0.1:1"), Error);
}
