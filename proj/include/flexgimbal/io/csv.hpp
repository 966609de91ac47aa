#pragma once

#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "flexgimbal/error.hpp"
#include "flexgimbal/units.hpp"

namespace flexgimbal::io {

struct CsvRow {
  std::size_t line = 0;  // 1-based line number in the file
  std::vector<std::string> fields;
};

struct CsvTable {
  std::vector<std::string> comments;  // '#' lines, without the marker
  std::vector<std::string> header;
  std::vector<CsvRow> rows;
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.emplace_back(flexgimbal::detail::trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

/// Comment lines ('#') and blank lines are allowed anywhere; the first other
/// line is the header. Every row must have as many fields as the header.
inline CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t line_no = 0, pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    auto line = flexgimbal::detail::trim(raw);
    if (!line.empty()) {
      if (line.front() == '#') {
        table.comments.emplace_back(flexgimbal::detail::trim(line.substr(1)));
      } else if (!have_header) {
        table.header = split_csv_line(line);
        have_header = true;
      } else {
        CsvRow row{line_no, split_csv_line(line)};
        if (row.fields.size() != table.header.size())
          throw ParseError("expected " + std::to_string(table.header.size()) + " fields, found " +
                               std::to_string(row.fields.size()),
                           line_no);
        table.rows.push_back(std::move(row));
      }
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (!have_header) throw ParseError("missing CSV header");
  return table;
}

inline double parse_field(const CsvRow& row, std::size_t column) {
  try {
    return parse_number(row.fields.at(column));
  } catch (const ParseError& e) {
    throw ParseError(e.what(), row.line);
  }
}

/// Value of "key=value" inside the comment lines, empty if absent.
inline std::string comment_value(const CsvTable& table, std::string_view key) {
  for (const auto& c : table.comments) {
    std::istringstream words(c);
    std::string word;
    while (words >> word) {
      auto eq = word.find('=');
      if (eq != std::string::npos && std::string_view(word).substr(0, eq) == key)
        return word.substr(eq + 1);
    }
  }
  return {};
}

inline std::size_t column_index(const CsvTable& table, std::string_view name) {
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (table.header[i] == name) return i;
  throw FormatError("missing column '" + std::string(name) + "'");
}

inline bool has_column(const CsvTable& table, std::string_view name) {
  for (const auto& h : table.header)
    if (h == name) return true;
  return false;
}

}  // namespace flexgimbal::io
