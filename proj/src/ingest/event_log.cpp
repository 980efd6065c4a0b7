#include "ingest/event_log.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <tuple>

#include "common/csv.hpp"
#include "common/error.hpp"

namespace pmf {

void IngestConfig::validate() const {
  if (case_column == activity_column || case_column == timestamp_column ||
      activity_column == timestamp_column) {
    fail(Errc::InvalidArgument, "ingest: case, activity and timestamp columns must be distinct");
  }
  if (delimiter == '"' || delimiter == '\n' || delimiter == '\r') {
    fail(Errc::InvalidArgument, "ingest: unusable delimiter");
  }
}

EventLog::EventLog(std::vector<Event> events) : events_(std::move(events)) {
  std::stable_sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
    return std::tie(a.case_id, a.timestamp) < std::tie(b.case_id, b.timestamp);
  });

  std::set<std::string> labels;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const Event& e = events_[i];
    labels.insert(e.activity);
    if (i == 0 || events_[i - 1].case_id != e.case_id) cases_.push_back({i, i + 1});
    else cases_.back().end = i + 1;
  }
  alphabet_.assign(labels.begin(), labels.end());

  if (!events_.empty()) {
    auto [lo, hi] = std::minmax_element(
        events_.begin(), events_.end(),
        [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    first_ = lo->timestamp;
    last_ = hi->timestamp;
  }
}

EventLog parse_csv(std::istream& source, const IngestConfig& cfg) {
  cfg.validate();
  csv::Reader reader(source, cfg.delimiter);
  auto header = reader.next();
  if (!header) fail(Errc::EmptyLog, "ingest: input has no header row");

  auto find = [&](const std::string& name) {
    auto it = std::find(header->begin(), header->end(), name);
    if (it == header->end()) fail(Errc::MissingColumn, "ingest: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header->begin());
  };
  const std::size_t case_col = find(cfg.case_column);
  const std::size_t act_col = find(cfg.activity_column);
  const std::size_t ts_col = find(cfg.timestamp_column);

  std::vector<Event> events;
  // Rows are reported by physical line number; the header is row 1.
  while (auto row = reader.next()) {
    const std::size_t row_number = reader.line();
    if (row->size() != header->size()) {
      fail(Errc::Format, "ingest: row " + std::to_string(row_number) + " has " +
                             std::to_string(row->size()) + " fields, header has " +
                             std::to_string(header->size()));
    }
    Event e;
    e.case_id = (*row)[case_col];
    e.activity = (*row)[act_col];
    if (e.activity.empty()) {
      fail(Errc::BadActivity, "ingest: empty activity at row " + std::to_string(row_number));
    }
    if (e.activity == kStartLabel || e.activity == kEndLabel) {
      fail(Errc::BadActivity, "ingest: reserved activity label '" + e.activity + "' at row " +
                                  std::to_string(row_number));
    }
    if (e.activity.find(">>") != std::string::npos || e.activity.front() == '>' || e.activity.back() == '>') {
      fail(Errc::BadActivity, "ingest: activity '" + e.activity + "' at row " + std::to_string(row_number) +
                                  " would make DF keys ambiguous (contains '>>' or starts/ends with '>')");
    }
    const std::string& ts_text = (*row)[ts_col];
    auto ts = parse_timestamp(ts_text, cfg.timestamp_format, cfg.timezone);
    if (!ts) {
      fail(Errc::BadTimestamp,
           "ingest: bad timestamp at row " + std::to_string(row_number) + ": \"" + ts_text + "\"");
    }
    e.timestamp = *ts;
    events.push_back(std::move(e));
  }
  if (events.empty()) fail(Errc::EmptyLog, "ingest: log has no data rows");
  return EventLog(std::move(events));
}

EventLog read_log_file(const std::string& path, const IngestConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open event log '" + path + "'");
  return parse_csv(in, cfg);
}

void write_csv(std::ostream& out, const EventLog& log) {
  csv::write_row(out, {"case_id", "activity", "timestamp"});
  for (const Event& e : log.events()) {
    csv::write_row(out, {e.case_id, e.activity, format_timestamp(e.timestamp)});
  }
}

EventLog preprocess(const EventLog& log, const PreprocessOptions& opts) {
  std::vector<Event> kept;
  kept.reserve(log.size());
  for (const auto& range : log.cases()) {
    std::vector<Event> case_events;
    for (std::size_t i = range.begin; i < range.end; ++i) {
      const Event& e = log.events()[i];
      if (opts.keep_from && e.timestamp < *opts.keep_from) continue;
      if (opts.keep_until && e.timestamp >= *opts.keep_until) continue;
      if (opts.drop_duplicate_events && !case_events.empty()) {
        bool dup = std::any_of(case_events.begin(), case_events.end(), [&](const Event& o) {
          return o.timestamp == e.timestamp && o.activity == e.activity;
        });
        if (dup) continue;
      }
      case_events.push_back(e);
    }
    if (case_events.size() < opts.min_case_events || case_events.empty()) continue;
    kept.insert(kept.end(), case_events.begin(), case_events.end());
  }
  if (kept.empty()) fail(Errc::EmptyLog, "preprocess: no events left after filtering");
  return EventLog(std::move(kept));
}

ValidationReport validate(const EventLog& log) {
  ValidationReport report;
  report.cases = log.cases().size();
  report.events = log.size();
  report.activities = log.alphabet().size();
  if (!log.empty()) {
    auto days = std::chrono::floor<std::chrono::days>(log.last()) -
                std::chrono::floor<std::chrono::days>(log.first());
    report.span_days = static_cast<std::size_t>(days.count()) + 1;
  }

  // Events are grouped by case and sorted by time, so duplicates sit within
  // one equal-timestamp run.
  const auto& ev = log.events();
  std::size_t i = 0;
  while (i < ev.size()) {
    std::size_t j = i + 1;
    while (j < ev.size() && ev[j].case_id == ev[i].case_id && ev[j].timestamp == ev[i].timestamp) {
      ++j;
    }
    if (j - i > 1) {
      std::vector<std::string> acts;
      for (std::size_t k = i; k < j; ++k) acts.push_back(ev[k].activity);
      std::sort(acts.begin(), acts.end());
      for (std::size_t a = 0; a < acts.size();) {
        std::size_t b = a + 1;
        while (b < acts.size() && acts[b] == acts[a]) ++b;
        if (b - a > 1) report.duplicates.push_back({ev[i].case_id, acts[a], ev[i].timestamp, b - a});
        a = b;
      }
    }
    i = j;
  }
  return report;
}

}  // namespace pmf
