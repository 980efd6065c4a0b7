#include "common/csv.hpp"

#include "common/error.hpp"

namespace pmf::csv {

std::optional<Row> Reader::next() {
  if (!skipped_bom_) {
    skipped_bom_ = true;
    if (in_.peek() == 0xEF) {
      char bom[3];
      in_.read(bom, 3);
      if (!(static_cast<unsigned char>(bom[1]) == 0xBB &&
            static_cast<unsigned char>(bom[2]) == 0xBF)) {
        fail(Errc::Format, "csv: malformed byte order mark");
      }
    }
  }

  for (;;) {
    if (in_.peek() == std::char_traits<char>::eof()) return std::nullopt;

    Row row;
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    record_line_ = line_;

    for (;;) {
      int c = in_.get();
      if (c == std::char_traits<char>::eof()) {
        if (quoted) {
          fail(Errc::Format, "csv: unterminated quoted field starting at line " +
                                 std::to_string(record_line_));
        }
        row.push_back(std::move(field));
        break;
      }
      char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          if (ch == '\n') ++line_;
          field.push_back(ch);
        }
        continue;
      }
      if (ch == '"' && field.empty() && !field_was_quoted) {
        quoted = true;
        field_was_quoted = true;
      } else if (ch == delim_) {
        row.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
      } else if (ch == '\r') {
        if (in_.peek() == '\n') in_.get();
        ++line_;
        row.push_back(std::move(field));
        break;
      } else if (ch == '\n') {
        ++line_;
        row.push_back(std::move(field));
        break;
      } else {
        field.push_back(ch);
      }
    }

    if (row.size() == 1 && row.front().empty() && !field_was_quoted) continue;
    return row;
  }
}

std::string escape(std::string_view field, char delimiter) {
  bool needs_quotes = field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) !=
                      std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const Row& row, char delimiter) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out.put(delimiter);
    out << escape(row[i], delimiter);
  }
  out.put('\n');
}

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

Table read_table(std::istream& in, char delimiter) {
  Reader reader(in, delimiter);
  Table table;
  auto header = reader.next();
  if (!header) fail(Errc::Format, "csv: missing header row");
  table.header = std::move(*header);
  while (auto row = reader.next()) {
    if (row->size() != table.header.size()) {
      fail(Errc::Format, "csv: line " + std::to_string(reader.line()) + " has " +
                             std::to_string(row->size()) + " fields, expected " +
                             std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(*row));
  }
  return table;
}

}  // namespace pmf::csv
