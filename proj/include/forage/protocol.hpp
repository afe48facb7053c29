#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forage/env.hpp"

namespace forage {

// Newline-delimited JSON wire protocol for policies living in another
// process.
//   request:  {episode_id, step, question, trajectory_text, actions:[{kind, payload}]}
//   response: {action_index, log_prob?}
// Search payloads are {template_id, entity, query}; answer payloads are the
// entity string.
struct PolicyRequest {
  std::string episode_id;
  std::size_t step = 0;
  std::string question;
  std::string trajectory_text;
  std::vector<Action> actions;

  bool operator==(const PolicyRequest&) const = default;
};

struct PolicyResponse {
  std::size_t action_index = 0;
  std::optional<double> log_prob;

  bool operator==(const PolicyResponse&) const = default;
};

inline constexpr std::chrono::milliseconds kDefaultPolicyTimeout{30000};

std::string encode_request(const PolicyRequest& req);
PolicyRequest decode_request(std::string_view line);
std::string encode_response(const PolicyResponse& resp);
PolicyResponse decode_response(std::string_view line);

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  // Throws a protocol Error on timeout or end of stream.
  virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

// Child process started with /bin/sh -c; requests go to its stdin and
// responses come back on its stdout.
std::unique_ptr<LineChannel> spawn_process_channel(const std::string& command);

// One TCP connection to "host:port".
std::unique_ptr<LineChannel> connect_tcp_channel(const std::string& address);

// Sends one request and validates the reply against the offered actions.
PolicyResponse external_policy_roundtrip(LineChannel& channel, const PolicyRequest& req,
                                         std::chrono::milliseconds timeout = kDefaultPolicyTimeout);

class ExternalPolicy {
 public:
  ExternalPolicy(std::unique_ptr<LineChannel> channel,
                 std::chrono::milliseconds timeout = kDefaultPolicyTimeout);

  void begin_episode(std::string episode_id) { episode_id_ = std::move(episode_id); }
  Decision choose(const EnvState& state, const std::vector<Action>& actions, const EnvConfig& cfg);

 private:
  std::unique_ptr<LineChannel> channel_;
  std::chrono::milliseconds timeout_;
  std::string episode_id_;
};

}  // namespace forage
