/*
 * Copyright 2026 The dispaudit Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dispaudit/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dispaudit/errors.hpp"

namespace dispaudit {

CsvTable parse_csv(const std::string& text) {
  std::size_t pos = 0;
  // UTF-8 BOM
  if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    pos = 3;
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;  // row has content pending

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = true;
  };
  auto end_row = [&] {
    end_field();
    // A lone empty field is a blank line; skip it.
    if (!(row.size() == 1 && row[0].empty())) {
      rows.push_back(std::move(row));
    }
    row.clear();
    field_started = false;
  };

  while (pos < text.size()) {
    const char c = text[pos];
    if (in_quotes) {
      if (c == '"') {
        if (pos + 1 < text.size() && text[pos + 1] == '"') {
          field += '"';
          ++pos;
        } else {
          in_quotes = false;
        }
      } else {
        field += c;
      }
      ++pos;
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        ++pos;
        break;
      case ',':
        end_field();
        ++pos;
        break;
      case '\r':
        // Consumed with the newline that follows; a bare CR ends the row.
        if (pos + 1 < text.size() && text[pos + 1] == '\n') {
          ++pos;
        }
        end_row();
        ++pos;
        break;
      case '\n':
        end_row();
        ++pos;
        break;
      default:
        field += c;
        ++pos;
        break;
    }
  }
  if (in_quotes) {
    throw DataError("unterminated quoted CSV field");
  }
  if (field_started || !field.empty()) {
    end_row();
  }

  CsvTable table;
  if (!rows.empty()) {
    table.header = std::move(rows.front());
    table.rows.assign(std::make_move_iterator(rows.begin() + 1),
                      std::make_move_iterator(rows.end()));
  }
  return table;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw DataError("failed reading '" + path + "'");
  }
  return buf.str();
}

CsvTable read_csv_file(const std::string& path) {
  return parse_csv(read_text_file(path));
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
  }
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw DataError("cannot write '" + tmp.string() + "'");
    }
    out << content;
    if (!out.good()) {
      throw DataError("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    throw DataError("cannot replace '" + path + "': " + ec.message());
  }
}

std::string format_double(double x) {
  if (std::isnan(x)) {
    return "nan";
  }
  if (std::isinf(x)) {
    return x > 0 ? "inf" : "-inf";
  }
  if (x == 0.0) {
    return "0";  // merges -0 for cleanliness; -0 == 0 anyway
  }
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, x);
    if (std::strtod(buf, nullptr) == x) {
      return buf;
    }
  }
  // Unreachable: 17 significant digits always round-trip a double.
  return buf;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) {
    return field;
  }
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') {
      quoted += '"';
    }
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::optional<double> parse_double(const std::string& text) {
  if (text.empty()) {
    return std::nullopt;
  }
  const char* begin = text.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end != begin + text.size()) {
    return std::nullopt;
  }
  if (!std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) {
      buf_ += ',';
    }
    buf_ += csv_escape(fields[i]);
  }
  buf_ += '\n';
}

}  // namespace dispaudit
