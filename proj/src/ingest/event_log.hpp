#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "common/time_util.hpp"

namespace pmf {

/// Synthetic source/sink labels used by DF keys. Activities may not use them.
inline constexpr std::string_view kStartLabel = "<START>";
inline constexpr std::string_view kEndLabel = "<END>";

struct Event {
  std::string case_id;
  std::string activity;
  Timestamp timestamp;

  friend bool operator==(const Event&, const Event&) = default;
};

struct IngestConfig {
  std::string case_column = "case_id";
  std::string activity_column = "activity";
  std::string timestamp_column = "timestamp";
  char delimiter = ',';
  std::string timestamp_format = "%Y-%m-%dT%H:%M:%S";
  TimezonePolicy timezone = TimezonePolicy::AssumeUtc;

  /// Throws Errc::InvalidArgument when the column names are not distinct.
  void validate() const;
};

/// Optional filters applied after parsing. All default to "keep everything";
/// benchmark-specific preprocessing is expressed here rather than hard-coded.
struct PreprocessOptions {
  std::size_t min_case_events = 0;
  bool drop_duplicate_events = false;
  std::optional<Timestamp> keep_from;   // events before are dropped
  std::optional<Timestamp> keep_until;  // events at or after are dropped
};

/// Events sorted by (case_id, timestamp, input order); immutable once built.
class EventLog {
 public:
  EventLog() = default;

  /// Applies the canonical stable sort and derives alphabet and span.
  explicit EventLog(std::vector<Event> events);

  const std::vector<Event>& events() const noexcept { return events_; }
  const std::vector<std::string>& alphabet() const noexcept { return alphabet_; }
  Timestamp first() const noexcept { return first_; }
  Timestamp last() const noexcept { return last_; }
  bool empty() const noexcept { return events_.empty(); }
  std::size_t size() const noexcept { return events_.size(); }

  /// Half-open [begin, end) event index ranges, one per case, in case order.
  struct CaseRange {
    std::size_t begin;
    std::size_t end;
  };
  const std::vector<CaseRange>& cases() const noexcept { return cases_; }

  friend bool operator==(const EventLog& a, const EventLog& b) { return a.events_ == b.events_; }

 private:
  std::vector<Event> events_;
  std::vector<std::string> alphabet_;
  std::vector<CaseRange> cases_;
  Timestamp first_{};
  Timestamp last_{};
};

EventLog parse_csv(std::istream& source, const IngestConfig& cfg = {});
EventLog read_log_file(const std::string& path, const IngestConfig& cfg = {});

/// Canonical CSV with header "case_id,activity,timestamp"; parses back with
/// a default IngestConfig.
void write_csv(std::ostream& out, const EventLog& log);

EventLog preprocess(const EventLog& log, const PreprocessOptions& opts);

struct DuplicateEvent {
  std::string case_id;
  std::string activity;
  Timestamp timestamp;
  std::size_t occurrences;
};

struct ValidationReport {
  std::size_t cases = 0;
  std::size_t events = 0;
  std::size_t activities = 0;
  /// Number of UTC calendar days touched, first to last event inclusive.
  std::size_t span_days = 0;
  std::vector<DuplicateEvent> duplicates;
};

ValidationReport validate(const EventLog& log);

}  // namespace pmf
