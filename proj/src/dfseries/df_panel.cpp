#include "dfseries/df_panel.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <unordered_map>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/numfmt.hpp"

namespace pmf {

std::string DFKey::str() const { return from + ">>" + to; }

DFKey DFKey::parse(std::string_view text) {
  std::size_t pos = text.find(">>");
  for (std::string_view label : {kStartLabel, kEndLabel}) {
    const std::string prefix = std::string(label) + ">>";
    const std::string suffix = ">>" + std::string(label);
    if (text.substr(0, prefix.size()) == prefix) {
      pos = label.size();
      break;
    }
    if (text.size() >= suffix.size() && text.substr(text.size() - suffix.size()) == suffix) {
      pos = text.size() - suffix.size();
      break;
    }
  }
  if (pos == std::string_view::npos || pos == 0 || pos + 2 == text.size()) {
    fail(Errc::Format, "malformed DF key '" + std::string(text) + "'");
  }
  DFKey key{std::string(text.substr(0, pos)), std::string(text.substr(pos + 2))};
  key.check();
  return key;
}

void DFKey::check() const {
  if (from.empty() || to.empty()) fail(Errc::InvalidArgument, "DF key with empty label");
  if (from == kEndLabel) fail(Errc::InvalidArgument, "DF key cannot leave <END>");
  if (to == kStartLabel) fail(Errc::InvalidArgument, "DF key cannot enter <START>");
  if (from == kStartLabel && to == kEndLabel) {
    fail(Errc::InvalidArgument, "DF key <START>>><END> is forbidden");
  }
}

bool WindowSpec::covers(Timestamp ts) const {
  return ts >= origin && ts < origin + width * static_cast<std::int64_t>(count);
}

std::size_t WindowSpec::index_of(Timestamp ts) const {
  if (!covers(ts)) {
    fail(Errc::EventOutsideSpan, "event at " + format_timestamp(ts) + " lies outside the " +
                                     std::to_string(count) + " windows starting " +
                                     format_timestamp(origin));
  }
  return static_cast<std::size_t>((ts - origin) / width);
}

WindowSpec partition_windows(const EventLog& log, Duration width) {
  if (log.empty()) fail(Errc::EmptyLog, "partition_windows: empty log");
  if (width <= Duration::zero()) fail(Errc::InvalidArgument, "window width must be positive");
  WindowSpec spec;
  spec.width = width;
  spec.origin = floor_to_day(log.first());
  spec.count = static_cast<std::size_t>((log.last() - spec.origin) / width) + 1;
  return spec;
}

DFPanel::DFPanel(WindowSpec windows, std::vector<DFKey> vocabulary,
                 std::vector<std::int64_t> counts)
    : windows_(windows), vocabulary_(std::move(vocabulary)), counts_(std::move(counts)) {
  if (windows_.count == 0) fail(Errc::InvalidArgument, "panel needs at least one window");
  if (windows_.width <= Duration::zero()) fail(Errc::InvalidArgument, "window width must be positive");
  if (counts_.size() != windows_.count * vocabulary_.size()) {
    fail(Errc::InvalidArgument, "panel count matrix has wrong shape");
  }
  for (const auto& key : vocabulary_) key.check();
  for (std::size_t d = 0; d + 1 < vocabulary_.size(); ++d) {
    if (!(vocabulary_[d] < vocabulary_[d + 1])) {
      fail(Errc::InvalidArgument, "panel vocabulary must be strictly ordered");
    }
  }
  const std::size_t D = vocabulary_.size();
  std::vector<bool> seen(D, false);
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] < 0) fail(Errc::InvalidArgument, "panel counts must be non-negative");
    if (counts_[i] > 0) seen[i % D] = true;
  }
  for (std::size_t d = 0; d < D; ++d) {
    if (!seen[d]) {
      fail(Errc::InvalidArgument, "DF key " + vocabulary_[d].str() + " never occurs in the panel");
    }
  }
}

std::vector<double> DFPanel::series(std::size_t d) const {
  std::vector<double> out(windows_.count);
  for (std::size_t t = 0; t < windows_.count; ++t) out[t] = static_cast<double>(at(t, d));
  return out;
}

std::size_t DFPanel::find(const DFKey& key) const {
  auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), key);
  if (it == vocabulary_.end() || *it != key) return npos;
  return static_cast<std::size_t>(it - vocabulary_.begin());
}

const Split& DFPanel::split() const {
  if (!has_split()) fail(Errc::InvalidArgument, "panel has no train/validation/test split");
  return split_;
}

void DFPanel::set_split(Split split) {
  if (!(0 < split.train_end && split.train_end < split.val_end && split.val_end < windows_.count)) {
    fail(Errc::InvalidArgument, "split must satisfy 0 < train_end < val_end < T");
  }
  split_ = split;
}

DFPanel extract_df_counts(const EventLog& log, const WindowSpec& spec, EndpointMode endpoints,
                          WindowAssignment assignment) {
  const auto& alphabet = log.alphabet();
  const int start_id = static_cast<int>(alphabet.size());
  const int end_id = start_id + 1;
  std::unordered_map<std::string_view, int> ids;
  for (std::size_t i = 0; i < alphabet.size(); ++i) ids.emplace(alphabet[i], static_cast<int>(i));

  std::map<std::pair<int, int>, std::vector<std::int64_t>> sparse;
  auto bump = [&](int from, int to, std::size_t w) {
    auto& column = sparse[{from, to}];
    if (column.empty()) column.assign(spec.count, 0);
    ++column[w];
  };

  const auto& ev = log.events();
  for (const auto& range : log.cases()) {
    for (std::size_t i = range.begin; i < range.end; ++i) {
      const std::size_t w = spec.index_of(ev[i].timestamp);
      const int act = ids.at(ev[i].activity);
      if (i == range.begin) {
        if (endpoints == EndpointMode::CaseEndpoints) bump(start_id, act, w);
      } else {
        const std::size_t pw =
            assignment == WindowAssignment::SecondEvent ? w : spec.index_of(ev[i - 1].timestamp);
        bump(ids.at(ev[i - 1].activity), act, pw);
      }
      if (i + 1 == range.end && endpoints == EndpointMode::CaseEndpoints) bump(act, end_id, w);
    }
  }

  auto label = [&](int id) -> std::string {
    if (id == start_id) return std::string(kStartLabel);
    if (id == end_id) return std::string(kEndLabel);
    return alphabet[static_cast<std::size_t>(id)];
  };
  std::vector<std::pair<DFKey, const std::vector<std::int64_t>*>> columns;
  for (const auto& [ids_pair, column] : sparse) {
    columns.push_back({DFKey{label(ids_pair.first), label(ids_pair.second)}, &column});
  }
  std::sort(columns.begin(), columns.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  const std::size_t D = columns.size();
  std::vector<DFKey> vocabulary;
  std::vector<std::int64_t> counts(spec.count * D, 0);
  for (std::size_t d = 0; d < D; ++d) {
    vocabulary.push_back(columns[d].first);
    for (std::size_t t = 0; t < spec.count; ++t) counts[t * D + d] = (*columns[d].second)[t];
  }
  return DFPanel(spec, std::move(vocabulary), std::move(counts));
}

Split compute_split(std::size_t length) {
  if (length < 10) {
    fail(Errc::TooShort, "split needs at least 10 windows, got " + std::to_string(length));
  }
  Split s;
  s.train_end = length * 6 / 10;
  s.val_end = s.train_end + length * 2 / 10;
  return s;
}

DFPanel split_panel(DFPanel panel) {
  panel.set_split(compute_split(panel.length()));
  return panel;
}

namespace {

// Emits each case's per-window runs; `sink(window, trace)` decides what to keep.
template <typename Sink>
void for_each_clipped(const EventLog& log, const WindowSpec& spec, Sink&& sink) {
  const auto& ev = log.events();
  for (const auto& range : log.cases()) {
    std::size_t i = range.begin;
    while (i < range.end) {
      const std::size_t w = spec.index_of(ev[i].timestamp);
      std::size_t j = i + 1;
      while (j < range.end && spec.index_of(ev[j].timestamp) == w) ++j;
      ClippedTrace trace;
      trace.case_id = ev[i].case_id;
      trace.true_start = i == range.begin;
      trace.true_end = j == range.end;
      trace.activities.reserve(j - i);
      for (std::size_t k = i; k < j; ++k) trace.activities.push_back(ev[k].activity);
      sink(w, std::move(trace));
      i = j;
    }
  }
}

}  // namespace

SublogTraces sublog_traces(const EventLog& log, const WindowSpec& spec, std::size_t window) {
  if (window >= spec.count) {
    fail(Errc::InvalidArgument, "window index " + std::to_string(window) + " out of range");
  }
  SublogTraces out;
  out.window = window;
  for_each_clipped(log, spec, [&](std::size_t w, ClippedTrace trace) {
    if (w == window) out.traces.push_back(std::move(trace));
  });
  return out;
}

std::vector<SublogTraces> all_sublogs(const EventLog& log, const WindowSpec& spec) {
  std::vector<SublogTraces> out(spec.count);
  for (std::size_t w = 0; w < spec.count; ++w) out[w].window = w;
  for_each_clipped(log, spec,
                   [&](std::size_t w, ClippedTrace trace) { out[w].traces.push_back(std::move(trace)); });
  return out;
}

namespace {

bool day_aligned(const WindowSpec& spec) {
  return spec.width % kDay == Duration::zero() && floor_to_day(spec.origin) == spec.origin;
}

std::optional<Timestamp> parse_window_label(const std::string& text) {
  if (auto ts = parse_timestamp(text, "%Y-%m-%d", TimezonePolicy::AssumeUtc)) return ts;
  return parse_timestamp(text, "%Y-%m-%dT%H:%M:%S", TimezonePolicy::AssumeUtc);
}

}  // namespace

std::string window_label(const WindowSpec& spec, std::size_t w) {
  return day_aligned(spec) ? format_date(spec.start(w)) : format_timestamp(spec.start(w));
}

void write_panel_csv(std::ostream& out, const DFPanel& panel) {
  csv::Row header{"date"};
  for (const auto& key : panel.vocabulary()) header.push_back(key.str());
  csv::write_row(out, header);
  for (std::size_t t = 0; t < panel.length(); ++t) {
    csv::Row row{window_label(panel.windows(), t)};
    for (std::size_t d = 0; d < panel.series_count(); ++d) row.push_back(std::to_string(panel.at(t, d)));
    csv::write_row(out, row);
  }
}

DFPanel read_panel_csv(std::istream& in) {
  auto table = csv::read_table(in);
  if (table.header.empty() || table.header.front() != "date") {
    fail(Errc::Format, "panel csv: first column must be 'date'");
  }
  if (table.rows.empty()) fail(Errc::Format, "panel csv: no rows");

  std::vector<DFKey> vocabulary;
  for (std::size_t c = 1; c < table.header.size(); ++c) vocabulary.push_back(DFKey::parse(table.header[c]));

  std::vector<Timestamp> starts;
  for (const auto& row : table.rows) {
    auto ts = parse_window_label(row.front());
    if (!ts) fail(Errc::Format, "panel csv: bad date '" + row.front() + "'");
    starts.push_back(*ts);
  }
  WindowSpec spec;
  spec.origin = starts.front();
  spec.count = starts.size();
  spec.width = starts.size() > 1 ? starts[1] - starts[0] : kDay;
  if (spec.width <= Duration::zero()) fail(Errc::Format, "panel csv: dates must increase");
  for (std::size_t t = 0; t < starts.size(); ++t) {
    if (starts[t] != spec.start(t)) fail(Errc::Format, "panel csv: windows are not equally spaced");
  }

  const std::size_t D = vocabulary.size();
  std::vector<std::int64_t> counts(spec.count * D);
  for (std::size_t t = 0; t < spec.count; ++t) {
    for (std::size_t d = 0; d < D; ++d) {
      auto v = parse_int(table.rows[t][d + 1]);
      if (!v) fail(Errc::Format, "panel csv: non-integer count '" + table.rows[t][d + 1] + "'");
      counts[t * D + d] = *v;
    }
  }
  DFPanel panel(spec, std::move(vocabulary), std::move(counts));
  if (panel.length() >= 10) panel.set_split(compute_split(panel.length()));
  return panel;
}

DFPanel read_panel_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open panel '" + path + "'");
  return read_panel_csv(in);
}

void write_panel_file(const std::string& path, const DFPanel& panel) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::Io, "cannot write panel '" + path + "'");
  write_panel_csv(out, panel);
}

}  // namespace pmf
