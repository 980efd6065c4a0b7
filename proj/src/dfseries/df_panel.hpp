#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "common/time_util.hpp"
#include "ingest/event_log.hpp"

namespace pmf {

/// Directly-follows pair. `from` may be "<START>", `to` may be "<END>".
struct DFKey {
  std::string from;
  std::string to;

  friend auto operator<=>(const DFKey&, const DFKey&) = default;
  friend bool operator==(const DFKey&, const DFKey&) = default;

  /// "from>>to", the panel CSV column name.
  std::string str() const;
  /// Inverse of str(); splits at the first ">>". Enforces the key invariants.
  static DFKey parse(std::string_view text);
  /// Throws Errc::InvalidArgument if from is END, to is START, or both synthetic.
  void check() const;
};

/// T equal-width windows tiling [origin, origin + T*width).
struct WindowSpec {
  Timestamp origin{};
  Duration width = kDay;
  std::size_t count = 1;

  Timestamp start(std::size_t w) const { return origin + width * static_cast<std::int64_t>(w); }
  /// Window index containing ts; throws Errc::EventOutsideSpan when not covered.
  std::size_t index_of(Timestamp ts) const;
  bool covers(Timestamp ts) const;

  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

/// Windows start at UTC midnight of the first event's day; the last event
/// falls into window count-1.
WindowSpec partition_windows(const EventLog& log, Duration width = kDay);

enum class EndpointMode { CaseEndpoints, None };

/// Which event of a consecutive pair decides the window a DF is counted in.
enum class WindowAssignment { SecondEvent, FirstEvent };

struct Split {
  std::size_t train_end = 0;
  std::size_t val_end = 0;

  friend bool operator==(const Split&, const Split&) = default;
};

/// Window x DF-key count matrix.
class DFPanel {
 public:
  DFPanel() = default;
  /// `counts` is row-major, windows.count rows by vocabulary.size() columns.
  /// Validates shape, non-negativity, and that every key has positive mass.
  DFPanel(WindowSpec windows, std::vector<DFKey> vocabulary, std::vector<std::int64_t> counts);

  const WindowSpec& windows() const noexcept { return windows_; }
  const std::vector<DFKey>& vocabulary() const noexcept { return vocabulary_; }
  std::size_t length() const noexcept { return windows_.count; }
  std::size_t series_count() const noexcept { return vocabulary_.size(); }

  std::int64_t at(std::size_t t, std::size_t d) const { return counts_[t * vocabulary_.size() + d]; }
  std::vector<double> series(std::size_t d) const;
  const std::vector<std::int64_t>& counts() const noexcept { return counts_; }

  /// Index of key in the vocabulary or npos.
  std::size_t find(const DFKey& key) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  bool has_split() const noexcept { return split_.val_end != 0; }
  const Split& split() const;
  void set_split(Split split);

  friend bool operator==(const DFPanel&, const DFPanel&) = default;

 private:
  WindowSpec windows_;
  std::vector<DFKey> vocabulary_;
  std::vector<std::int64_t> counts_;
  Split split_;
};

DFPanel extract_df_counts(const EventLog& log, const WindowSpec& spec,
                          EndpointMode endpoints = EndpointMode::CaseEndpoints,
                          WindowAssignment assignment = WindowAssignment::SecondEvent);

/// 60/20/20 chronological split by floor arithmetic; needs T >= 10.
Split compute_split(std::size_t length);
DFPanel split_panel(DFPanel panel);

struct ClippedTrace {
  std::string case_id;
  std::vector<std::string> activities;
  bool true_start = false;
  bool true_end = false;

  friend bool operator==(const ClippedTrace&, const ClippedTrace&) = default;
};

struct SublogTraces {
  std::size_t window = 0;
  std::vector<ClippedTrace> traces;
};

SublogTraces sublog_traces(const EventLog& log, const WindowSpec& spec, std::size_t window);

/// All windows at once; element w equals sublog_traces(log, spec, w).
std::vector<SublogTraces> all_sublogs(const EventLog& log, const WindowSpec& spec);

/// Header "date,<from>>><to>,...", one row per window. Dates are "YYYY-MM-DD"
/// for whole-day windows starting at midnight, full timestamps otherwise.
void write_panel_csv(std::ostream& out, const DFPanel& panel);
/// The split is recomputed from the length when T >= 10.
DFPanel read_panel_csv(std::istream& in);

DFPanel read_panel_file(const std::string& path);
void write_panel_file(const std::string& path, const DFPanel& panel);

std::string window_label(const WindowSpec& spec, std::size_t w);

}  // namespace pmf
