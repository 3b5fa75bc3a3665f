#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "dti/error.hpp"

namespace dti::csv {

struct Row {
  std::size_t line = 0;  // 1-based line where the row starts
  std::vector<std::string> cells;
};

/// RFC 4180 reader: quoted fields, doubled quotes, embedded separators and newlines,
/// CRLF or LF line ends. A UTF-8 BOM is skipped. Blank lines are ignored.
inline std::vector<Row> parse(std::string_view text, const std::string& source = "<csv>", char sep = ',') {
  std::vector<Row> rows;
  std::size_t pos = 0;
  if (text.substr(0, 3) == "\xEF\xBB\xBF") pos = 3;

  std::size_t line = 1;
  std::size_t col = 1;
  Row row;
  row.line = 1;
  std::string cell;
  bool in_quotes = false;
  bool cell_was_quoted = false;
  bool row_has_content = false;

  auto end_cell = [&] {
    row.cells.push_back(std::move(cell));
    cell.clear();
    cell_was_quoted = false;
  };
  auto end_row = [&] {
    end_cell();
    if (row_has_content) rows.push_back(std::move(row));
    row = Row{};
    row_has_content = false;
  };

  while (pos < text.size()) {
    const char c = text[pos];
    if (in_quotes) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          cell.push_back('"');
          pos += 2;
          col += 2;
          continue;
        }
        in_quotes = false;
        ++pos;
        ++col;
        continue;
      }
      cell.push_back(c);
      if (c == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++pos;
      continue;
    }

    if (c == '"') {
      if (!cell.empty() || cell_was_quoted)
        throw ParseError(source, line, col, "quote inside unquoted field");
      in_quotes = true;
      cell_was_quoted = true;
      row_has_content = true;
      ++pos;
      ++col;
    } else if (c == sep) {
      end_cell();
      row_has_content = true;
      ++pos;
      ++col;
    } else if (c == '\r' || c == '\n') {
      end_row();
      if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
      ++pos;
      ++line;
      col = 1;
      row.line = line;
    } else {
      if (cell_was_quoted) throw ParseError(source, line, col, "text after closing quote");
      cell.push_back(c);
      row_has_content = true;
      ++pos;
      ++col;
    }
  }
  if (in_quotes) throw ParseError(source, line, col, "unterminated quoted field");
  if (row_has_content || !cell.empty()) end_row();
  return rows;
}

inline std::string quote(std::string_view cell, char sep = ',') {
  const bool needs = cell.find_first_of(std::string{sep} + "\"\r\n") != std::string_view::npos ||
                     (!cell.empty() && (cell.front() == ' ' || cell.back() == ' '));
  if (!needs) return std::string(cell);
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

/// One LF-terminated record.
inline std::string format_row(const std::vector<std::string>& cells, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out.push_back(sep);
    out += quote(cells[i], sep);
  }
  out.push_back('\n');
  return out;
}

}  // namespace dti::csv
