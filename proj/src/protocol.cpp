#include "forage/protocol.hpp"

#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "forage/error.hpp"
#include "json.hpp"

namespace forage {

using nlohmann::json;

namespace {

json action_to_json(const Action& a) {
  if (a.kind == ActionKind::Search) {
    return json{{"kind", "search"},
                {"payload", {{"template_id", a.template_id}, {"entity", a.entity}, {"query", a.query()}}}};
  }
  return json{{"kind", "answer"}, {"payload", a.entity}};
}

Action action_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "search") {
    const auto& p = j.at("payload");
    return Action::search(p.at("template_id").get<std::size_t>(), p.at("entity").get<std::string>());
  }
  if (kind == "answer") return Action::answer(j.at("payload").get<std::string>());
  fail(ErrorCode::kProtocol, "unknown action kind '" + kind + "'");
}

// Buffered line reader over a file descriptor with a poll() deadline.
class FdLineReader {
 public:
  explicit FdLineReader(int fd) : fd_(fd) {}

  std::string read_line(std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    while (true) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) fail(ErrorCode::kProtocol, "policy response timed out");
      pollfd pfd{fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (rc < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kProtocol, std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) fail(ErrorCode::kProtocol, "policy response timed out");
      char chunk[4096];
      const ssize_t n = ::read(fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kProtocol, std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) fail(ErrorCode::kProtocol, "policy closed the stream");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buffer_;
};

void write_all(int fd, const std::string& data, bool socket) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = socket ? ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                             : ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::kProtocol, std::string("write to policy failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

class ProcessChannel : public LineChannel {
 public:
  explicit ProcessChannel(const std::string& command) {
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0 || ::pipe(from_child) != 0) {
      fail(ErrorCode::kIo, std::string("pipe failed: ") + std::strerror(errno));
    }
    pid_ = ::fork();
    if (pid_ < 0) fail(ErrorCode::kIo, std::string("fork failed: ") + std::strerror(errno));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_ = to_child[1];
    out_ = from_child[0];
    reader_ = std::make_unique<FdLineReader>(out_);
  }

  ~ProcessChannel() override {
    ::close(in_);
    ::close(out_);
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }

  void write_line(const std::string& line) override { write_all(in_, line + "\n", false); }
  std::string read_line(std::chrono::milliseconds timeout) override { return reader_->read_line(timeout); }

 private:
  pid_t pid_ = -1;
  int in_ = -1;
  int out_ = -1;
  std::unique_ptr<FdLineReader> reader_;
};

class TcpChannel : public LineChannel {
 public:
  explicit TcpChannel(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos) fail(ErrorCode::kInvalidArgument, "expected host:port, got '" + address + "'");
    const std::string host = address.substr(0, colon);
    const std::string port = address.substr(colon + 1);
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
      fail(ErrorCode::kProtocol, "cannot resolve " + address + ": " + ::gai_strerror(rc));
    }
    for (addrinfo* p = res; p; p = p->ai_next) {
      fd_ = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
      if (fd_ < 0) continue;
      if (::connect(fd_, p->ai_addr, p->ai_addrlen) == 0) break;
      ::close(fd_);
      fd_ = -1;
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) fail(ErrorCode::kProtocol, "cannot connect to " + address);
    reader_ = std::make_unique<FdLineReader>(fd_);
  }

  ~TcpChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void write_line(const std::string& line) override { write_all(fd_, line + "\n", true); }
  std::string read_line(std::chrono::milliseconds timeout) override { return reader_->read_line(timeout); }

 private:
  int fd_ = -1;
  std::unique_ptr<FdLineReader> reader_;
};

}  // namespace

std::string encode_request(const PolicyRequest& req) {
  json actions = json::array();
  for (const auto& a : req.actions) actions.push_back(action_to_json(a));
  json j{{"episode_id", req.episode_id},
         {"step", req.step},
         {"question", req.question},
         {"trajectory_text", req.trajectory_text},
         {"actions", actions}};
  // invalid UTF-8 in retrieved text becomes U+FFFD rather than an exception
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

PolicyRequest decode_request(std::string_view line) {
  try {
    const json j = json::parse(line);
    PolicyRequest req;
    req.episode_id = j.at("episode_id").get<std::string>();
    req.step = j.at("step").get<std::size_t>();
    req.question = j.at("question").get<std::string>();
    req.trajectory_text = j.at("trajectory_text").get<std::string>();
    for (const auto& a : j.at("actions")) req.actions.push_back(action_from_json(a));
    return req;
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocol, std::string("malformed request: ") + e.what());
  }
}

std::string encode_response(const PolicyResponse& resp) {
  json j{{"action_index", resp.action_index}};
  if (resp.log_prob) j["log_prob"] = *resp.log_prob;
  return j.dump();
}

PolicyResponse decode_response(std::string_view line) {
  try {
    const json j = json::parse(line);
    if (!j.is_object() || !j.contains("action_index")) {
      fail(ErrorCode::kProtocol, "malformed response: missing action_index");
    }
    const auto& idx = j.at("action_index");
    if (!idx.is_number_integer() || idx.get<long long>() < 0) {
      fail(ErrorCode::kProtocol, "malformed response: action_index must be a non-negative integer");
    }
    PolicyResponse resp;
    resp.action_index = idx.get<std::size_t>();
    if (j.contains("log_prob") && !j.at("log_prob").is_null()) {
      if (!j.at("log_prob").is_number()) fail(ErrorCode::kProtocol, "malformed response: log_prob must be a number");
      resp.log_prob = j.at("log_prob").get<double>();
    }
    return resp;
  } catch (const json::exception& e) {
    fail(ErrorCode::kProtocol, std::string("malformed response: ") + e.what());
  }
}

std::unique_ptr<LineChannel> spawn_process_channel(const std::string& command) {
  return std::make_unique<ProcessChannel>(command);
}

std::unique_ptr<LineChannel> connect_tcp_channel(const std::string& address) {
  return std::make_unique<TcpChannel>(address);
}

PolicyResponse external_policy_roundtrip(LineChannel& channel, const PolicyRequest& req,
                                         std::chrono::milliseconds timeout) {
  channel.write_line(encode_request(req));
  PolicyResponse resp = decode_response(channel.read_line(timeout));
  if (resp.action_index >= req.actions.size()) {
    fail(ErrorCode::kProtocol, "action_index " + std::to_string(resp.action_index) + " out of range for " +
                                   std::to_string(req.actions.size()) + " actions");
  }
  return resp;
}

ExternalPolicy::ExternalPolicy(std::unique_ptr<LineChannel> channel, std::chrono::milliseconds timeout)
    : channel_(std::move(channel)), timeout_(timeout) {
  require(channel_ != nullptr, ErrorCode::kInvalidArgument, "external policy needs a channel");
}

Decision ExternalPolicy::choose(const EnvState& state, const std::vector<Action>& actions, const EnvConfig& cfg) {
  PolicyRequest req{episode_id_.empty() ? state.task_id : episode_id_, state.step, state.question,
                    serialize_partial(state.blocks, cfg.format), actions};
  const PolicyResponse resp = external_policy_roundtrip(*channel_, req, timeout_);
  return Decision{resp.action_index, resp.log_prob.value_or(0.0), 0.0};
}

}  // namespace forage
