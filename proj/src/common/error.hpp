#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pmf {

/// Failure categories surfaced by every module. The C API maps these
/// one-to-one onto `pmf_status` codes, so the order is part of the ABI.
enum class Errc {
  InvalidArgument = 1,
  Io,
  MissingColumn,
  BadTimestamp,
  BadActivity,
  EmptyLog,
  EventOutsideSpan,
  TooShort,
  NoMedianAvailable,
  ProtocolError,
  Timeout,
  ChildExited,
  LaunchFailed,
  RemoteError,
  NoCells,
  MissingPrediction,
  EmptySublog,
  Config,
  Format,
  Internal,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace pmf
