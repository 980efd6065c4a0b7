#include "common/time_util.hpp"

#include <charconv>
#include <cctype>
#include <ctime>

namespace pmf {

namespace {

bool read_digits(std::string_view s, std::size_t& pos, std::size_t count, int& value) {
  if (pos + count > s.size()) return false;
  value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    char c = s[pos + i];
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    value = value * 10 + (c - '0');
  }
  pos += count;
  return true;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text, const std::string& format,
                                         TimezonePolicy policy) {
  using namespace std::chrono;
  std::string buf(text);
  while (!buf.empty() && std::isspace(static_cast<unsigned char>(buf.back()))) buf.pop_back();
  std::size_t lead = 0;
  while (lead < buf.size() && std::isspace(static_cast<unsigned char>(buf[lead]))) ++lead;
  buf.erase(0, lead);
  if (buf.empty()) return std::nullopt;

  std::tm tm{};
  const char* end = ::strptime(buf.c_str(), format.c_str(), &tm);
  if (end == nullptr) return std::nullopt;

  std::string_view rest(end);
  std::size_t pos = 0;
  long long micros = 0;
  if (pos < rest.size() && rest[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < rest.size() && std::isdigit(static_cast<unsigned char>(rest[pos]))) {
      if (digits < 6) micros = micros * 10 + (rest[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    for (std::size_t d = digits; d < 6; ++d) micros *= 10;
  }

  bool has_offset = false;
  long offset_seconds = 0;
  if (pos < rest.size()) {
    char c = rest[pos];
    if (c == 'Z' || c == 'z') {
      has_offset = true;
      ++pos;
    } else if (c == '+' || c == '-') {
      int sign = c == '-' ? -1 : 1;
      ++pos;
      int hh = 0;
      int mm = 0;
      if (!read_digits(rest, pos, 2, hh)) return std::nullopt;
      if (pos < rest.size() && rest[pos] == ':') ++pos;
      if (pos < rest.size()) {
        if (!read_digits(rest, pos, 2, mm)) return std::nullopt;
      }
      if (hh > 23 || mm > 59) return std::nullopt;
      has_offset = true;
      offset_seconds = sign * (hh * 3600L + mm * 60L);
    }
  }
  if (pos != rest.size()) return std::nullopt;

  // %z consumed by strptime lands in tm_gmtoff.
  if (tm.tm_gmtoff != 0) {
    has_offset = true;
    offset_seconds += tm.tm_gmtoff;
  } else if (format.find("%z") != std::string::npos) {
    has_offset = true;
  }
  if (!has_offset && policy == TimezonePolicy::RejectNaive) return std::nullopt;

  if (tm.tm_mon < 0 || tm.tm_mon > 11 || tm.tm_mday < 1 || tm.tm_mday > 31) return std::nullopt;
  year_month_day ymd{year{tm.tm_year + 1900}, month{static_cast<unsigned>(tm.tm_mon + 1)},
                     day{static_cast<unsigned>(tm.tm_mday)}};
  if (!ymd.ok()) return std::nullopt;
  auto secs = sys_days{ymd}.time_since_epoch() + hours{tm.tm_hour} + minutes{tm.tm_min} +
              seconds{tm.tm_sec} - seconds{offset_seconds};
  return Timestamp{duration_cast<microseconds>(secs) + microseconds{micros}};
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  auto day_start = floor<days>(ts);
  year_month_day ymd{day_start};
  hh_mm_ss<microseconds> hms{ts - day_start};
  char buf[48];
  int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02lld",
                        static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                        static_cast<unsigned>(ymd.day()), static_cast<int>(hms.hours().count()),
                        static_cast<int>(hms.minutes().count()),
                        static_cast<long long>(hms.seconds().count()));
  std::string out(buf, static_cast<std::size_t>(n));
  if (auto us = hms.subseconds().count(); us != 0) {
    std::snprintf(buf, sizeof buf, ".%06lld", static_cast<long long>(us));
    out += buf;
  }
  return out;
}

std::string format_date(Timestamp ts) {
  using namespace std::chrono;
  year_month_day ymd{floor<days>(ts)};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Timestamp floor_to_day(Timestamp ts) {
  return std::chrono::floor<std::chrono::days>(ts);
}

std::optional<Duration> parse_duration(std::string_view text) {
  if (text.empty()) return std::nullopt;
  long long unit_seconds = 1;
  std::string_view number = text;
  switch (text.back()) {
    case 'd': unit_seconds = 86400; number.remove_suffix(1); break;
    case 'h': unit_seconds = 3600; number.remove_suffix(1); break;
    case 'm': unit_seconds = 60; number.remove_suffix(1); break;
    case 's': number.remove_suffix(1); break;
    default: break;
  }
  long long value = 0;
  auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
  if (ec != std::errc{} || ptr != number.data() + number.size() || value <= 0) {
    return std::nullopt;
  }
  return std::chrono::duration_cast<Duration>(std::chrono::seconds(value * unit_seconds));
}

std::string format_duration(Duration d) {
  auto s = std::chrono::duration_cast<std::chrono::seconds>(d).count();
  if (s % 86400 == 0) return std::to_string(s / 86400) + "d";
  if (s % 3600 == 0) return std::to_string(s / 3600) + "h";
  if (s % 60 == 0) return std::to_string(s / 60) + "m";
  return std::to_string(s) + "s";
}

}  // namespace pmf
