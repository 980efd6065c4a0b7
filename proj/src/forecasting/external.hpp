#pragma once

#include <chrono>
#include <string>
#include <sys/types.h>
#include <vector>

#include "forecasting/forecaster.hpp"

namespace pmf {

inline constexpr int kProtocolVersion = 1;

struct ExternalOptions {
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds shutdown_grace{2000};
  /// Report name; the child's handshake name is used when empty.
  std::string display_name;
};

/// Splits a command line with shell word rules (no command substitution).
std::vector<std::string> split_command(const std::string& command_line);

/// Forecaster living in a child process, spoken to with line-delimited JSON
/// over its stdin/stdout. One request is in flight at a time. A child that
/// dies or times out is restarted on the next request.
class ExternalForecaster final : public Forecaster {
 public:
  /// Launches and handshakes; throws Errc::LaunchFailed if either fails.
  ExternalForecaster(std::vector<std::string> argv, ExternalOptions opts = {});
  ~ExternalForecaster() override;

  ExternalForecaster(const ExternalForecaster&) = delete;
  ExternalForecaster& operator=(const ExternalForecaster&) = delete;

  std::string name() const override;
  const std::string& child_name() const noexcept { return child_name_; }
  const std::vector<std::string>& capabilities() const noexcept { return capabilities_; }

  /// Errors: ProtocolError, Timeout, ChildExited, RemoteError (child "error" reply).
  Forecast forecast(const ForecastRequest& req) override;

  /// Sends "bye" and waits for the child; kills it after the grace period.
  /// Returns the exit status (-1 if killed or already gone).
  int shutdown();

 private:
  void launch();
  void handshake();
  void send_line(const std::string& line);
  std::string read_line();
  [[noreturn]] void child_gone(const std::string& during);
  void kill_child();

  std::vector<std::string> argv_;
  ExternalOptions opts_;
  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  std::string child_name_;
  std::vector<std::string> capabilities_;
  unsigned long next_id_ = 1;
};

/// One request/response exchange on an already handshaken client.
Forecast external_forecast(ExternalForecaster& client, const ForecastRequest& req);

/// Factory spawning one child per backtest worker.
ForecasterFactory external_factory(const std::string& command_line, ExternalOptions opts = {});

}  // namespace pmf
