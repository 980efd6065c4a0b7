#include "common/error.hpp"

namespace pmf {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::BadTimestamp: return "BadTimestamp";
    case Errc::BadActivity: return "BadActivity";
    case Errc::EmptyLog: return "EmptyLog";
    case Errc::EventOutsideSpan: return "EventOutsideSpan";
    case Errc::TooShort: return "TooShort";
    case Errc::NoMedianAvailable: return "NoMedianAvailable";
    case Errc::ProtocolError: return "ProtocolError";
    case Errc::Timeout: return "Timeout";
    case Errc::ChildExited: return "ChildExited";
    case Errc::LaunchFailed: return "LaunchFailed";
    case Errc::RemoteError: return "RemoteError";
    case Errc::NoCells: return "NoCells";
    case Errc::MissingPrediction: return "MissingPrediction";
    case Errc::EmptySublog: return "EmptySublog";
    case Errc::Config: return "Config";
    case Errc::Format: return "Format";
    case Errc::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace pmf
