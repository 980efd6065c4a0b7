#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace pmf {

using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;
using Duration = std::chrono::microseconds;

inline constexpr Duration kDay = std::chrono::hours(24);

enum class TimezonePolicy { AssumeUtc, RejectNaive };

/// Parses `text` with a strftime-style `format` (handed to strptime), then
/// accepts an optional fractional-seconds part and an optional UTC offset
/// ("Z", "+HH:MM", "+HHMM", "+HH"). Naive stamps are UTC under AssumeUtc and
/// rejected under RejectNaive. Returns nullopt on any mismatch.
std::optional<Timestamp> parse_timestamp(std::string_view text, const std::string& format,
                                         TimezonePolicy policy);

/// "YYYY-MM-DDTHH:MM:SS" with ".ffffff" appended only when sub-second.
std::string format_timestamp(Timestamp ts);

/// "YYYY-MM-DD" of the UTC day containing ts.
std::string format_date(Timestamp ts);

Timestamp floor_to_day(Timestamp ts);

/// "1d", "12h", "30m", "45s", or a bare number of seconds.
std::optional<Duration> parse_duration(std::string_view text);

std::string format_duration(Duration d);

}  // namespace pmf
