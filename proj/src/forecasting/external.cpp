#include "forecasting/external.hpp"

#include <algorithm>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <poll.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>
#include <wordexp.h>

#include <json.hpp>

#include "common/error.hpp"

extern char** environ;

namespace pmf {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kMaxLine = 64u << 20;

std::vector<double> numbers(const json& j, const char* field) {
  if (!j.is_array()) fail(Errc::ProtocolError, std::string("field '") + field + "' is not an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) fail(Errc::ProtocolError, std::string("field '") + field + "' holds a non-number");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

std::vector<std::string> split_command(const std::string& command_line) {
  wordexp_t we{};
  int rc = ::wordexp(command_line.c_str(), &we, WRDE_NOCMD);
  if (rc != 0) {
    if (rc == WRDE_NOSPACE) ::wordfree(&we);
    fail(Errc::LaunchFailed, "forecaster launch failed: cannot parse command line '" + command_line + "'");
  }
  std::vector<std::string> argv(we.we_wordv, we.we_wordv + we.we_wordc);
  ::wordfree(&we);
  if (argv.empty()) fail(Errc::LaunchFailed, "forecaster launch failed: empty command line");
  return argv;
}

ExternalForecaster::ExternalForecaster(std::vector<std::string> argv, ExternalOptions opts)
    : argv_(std::move(argv)), opts_(std::move(opts)) {
  if (argv_.empty()) fail(Errc::LaunchFailed, "forecaster launch failed: empty command line");
  launch();
  try {
    handshake();
  } catch (const Error& e) {
    kill_child();
    fail(Errc::LaunchFailed, std::string("forecaster launch failed: ") + e.what());
  }
}

ExternalForecaster::~ExternalForecaster() {
  try {
    shutdown();
  } catch (...) {
    kill_child();
  }
}

std::string ExternalForecaster::name() const {
  return opts_.display_name.empty() ? child_name_ : opts_.display_name;
}

void ExternalForecaster::launch() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    fail(Errc::LaunchFailed, std::string("forecaster launch failed: socketpair: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);

  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);

  pid_t pid = -1;
  int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(fds[1]);
  if (rc != 0) {
    ::close(fds[0]);
    fail(Errc::LaunchFailed, "forecaster launch failed: " + argv_[0] + ": " + std::strerror(rc));
  }
  pid_ = pid;
  fd_ = fds[0];
  buffer_.clear();
}

void ExternalForecaster::handshake() {
  send_line(json{{"type", "hello"}, {"protocol_version", kProtocolVersion}}.dump());
  json reply;
  try {
    reply = json::parse(read_line());
  } catch (const json::exception& e) {
    fail(Errc::ProtocolError, std::string("handshake reply is not JSON: ") + e.what());
  }
  if (!reply.is_object() || reply.value("type", "") != "hello") {
    fail(Errc::ProtocolError, "handshake reply is not a hello message");
  }
  if (!reply.contains("protocol_version") || reply["protocol_version"] != kProtocolVersion) {
    fail(Errc::ProtocolError, "unsupported protocol version");
  }
  child_name_ = reply.value("name", argv_.front());
  capabilities_.clear();
  if (reply.contains("capabilities") && reply["capabilities"].is_array()) {
    for (const auto& c : reply["capabilities"]) {
      if (c.is_string()) capabilities_.push_back(c.get<std::string>());
    }
  }
  if (std::find(capabilities_.begin(), capabilities_.end(), "forecast") == capabilities_.end()) {
    fail(Errc::ProtocolError, "child does not advertise the 'forecast' capability");
  }
}

void ExternalForecaster::send_line(const std::string& line) {
  std::string data = line;
  data.push_back('\n');
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      child_gone("write");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::string ExternalForecaster::read_line() {
  const auto deadline = Clock::now() + opts_.timeout;
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      return line;
    }
    if (buffer_.size() > kMaxLine) fail(Errc::ProtocolError, "message exceeds size limit");

    auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (remaining.count() <= 0) {
      kill_child();
      fail(Errc::Timeout, "no reply from forecaster within " + std::to_string(opts_.timeout.count()) + " ms");
    }
    pollfd pfd{fd_, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      fail(Errc::Internal, std::string("poll: ") + std::strerror(errno));
    }
    if (rc == 0) continue;
    char chunk[65536];
    ssize_t n = ::read(fd_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      child_gone("read");
    }
    if (n == 0) child_gone("read");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void ExternalForecaster::child_gone(const std::string& during) {
  std::string detail;
  if (pid_ > 0) {
    int status = 0;
    // Give a dying child a moment to be reaped so the exit status is reported.
    for (int i = 0; i < 50; ++i) {
      pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r == pid_) {
        if (WIFEXITED(status)) detail = " (exit status " + std::to_string(WEXITSTATUS(status)) + ")";
        else if (WIFSIGNALED(status)) detail = " (signal " + std::to_string(WTERMSIG(status)) + ")";
        pid_ = -1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  kill_child();
  fail(Errc::ChildExited, "forecaster child exited during " + during + detail);
}

void ExternalForecaster::kill_child() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    int status = 0;
    while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
    }
    pid_ = -1;
  }
  buffer_.clear();
}

int ExternalForecaster::shutdown() {
  if (pid_ <= 0) {
    kill_child();
    return -1;
  }
  try {
    send_line(json{{"type", "bye"}}.dump());
  } catch (const Error&) {
    return -1;
  }
  ::shutdown(fd_, SHUT_WR);
  const auto deadline = Clock::now() + opts_.shutdown_grace;
  while (Clock::now() < deadline) {
    int status = 0;
    pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      pid_ = -1;
      ::close(fd_);
      fd_ = -1;
      return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  kill_child();
  return -1;
}

Forecast ExternalForecaster::forecast(const ForecastRequest& req) {
  req.validate();
  if (pid_ <= 0) {
    launch();
    try {
      handshake();
    } catch (const Error& e) {
      kill_child();
      fail(Errc::ChildExited, std::string("forecaster restart failed: ") + e.what());
    }
  }

  const std::string id = "req-" + std::to_string(next_id_++);
  json msg{{"type", "forecast"},
           {"id", id},
           {"series", req.series},
           {"horizon", req.horizon},
           {"quantile_levels", req.quantile_levels},
           {"freq", req.freq}};
  send_line(msg.dump());

  json reply;
  try {
    reply = json::parse(read_line());
  } catch (const json::exception& e) {
    fail(Errc::ProtocolError, std::string("reply is not JSON: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("type") || !reply["type"].is_string()) {
    fail(Errc::ProtocolError, "reply lacks a message type");
  }
  const std::string type = reply["type"];
  if (type == "error") {
    std::string message = reply.value("message", std::string("unspecified error"));
    if (reply.contains("id") && !reply["id"].is_null() && reply["id"] != id) {
      fail(Errc::ProtocolError, "error reply for unknown id");
    }
    fail(Errc::RemoteError, "forecaster error: " + message);
  }
  if (type != "forecast_result") fail(Errc::ProtocolError, "unexpected message type '" + type + "'");
  if (!reply.contains("id") || !reply["id"].is_string() || reply["id"] != id) {
    fail(Errc::ProtocolError, "response id does not match request id " + id);
  }
  if (!reply.contains("point")) fail(Errc::ProtocolError, "response has no point track");

  Forecast f;
  f.point = numbers(reply["point"], "point");
  if (reply.contains("quantiles") && !reply["quantiles"].is_null()) {
    const auto& q = reply["quantiles"];
    if (!q.is_object()) fail(Errc::ProtocolError, "field 'quantiles' is not an object");
    for (const auto& [level_text, track] : q.items()) {
      double level = 0;
      try {
        std::size_t used = 0;
        level = std::stod(level_text, &used);
        if (used != level_text.size()) throw std::invalid_argument(level_text);
      } catch (const std::exception&) {
        fail(Errc::ProtocolError, "quantile key '" + level_text + "' is not a number");
      }
      f.quantiles[level] = numbers(track, "quantiles");
    }
  }
  const auto h = static_cast<std::size_t>(req.horizon);
  if (f.point.size() != h) fail(Errc::ProtocolError, "point track length differs from horizon");
  try {
    f.validate(req.horizon, "response");
  } catch (const Error& e) {
    std::string what = e.what();
    if (what.find("quantile crossing") != std::string::npos) fail(Errc::ProtocolError, "quantile crossing");
    fail(Errc::ProtocolError, what);
  }
  return f;
}

Forecast external_forecast(ExternalForecaster& client, const ForecastRequest& req) {
  return client.forecast(req);
}

ForecasterFactory external_factory(const std::string& command_line, ExternalOptions opts) {
  auto argv = split_command(command_line);
  return [argv, opts]() -> std::unique_ptr<Forecaster> {
    return std::make_unique<ExternalForecaster>(argv, opts);
  };
}

}  // namespace pmf
