#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace pmf::csv {

using Row = std::vector<std::string>;

/// RFC 4180 style reader: quoted fields may contain the delimiter, doubled
/// quotes and line breaks. CRLF and LF line endings are both accepted.
class Reader {
 public:
  Reader(std::istream& in, char delimiter = ',') : in_(in), delim_(delimiter) {}

  /// Next record, or nullopt at end of input. Blank lines are skipped.
  std::optional<Row> next();

  /// 1-based physical line where the last returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  char delim_;
  std::size_t line_ = 1;
  std::size_t record_line_ = 0;
  bool skipped_bom_ = false;
};

std::string escape(std::string_view field, char delimiter = ',');

void write_row(std::ostream& out, const Row& row, char delimiter = ',');

/// Reads the whole stream; first record is the header.
struct Table {
  Row header;
  std::vector<Row> rows;

  /// Index of a header column, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

Table read_table(std::istream& in, char delimiter = ',');

}  // namespace pmf::csv
