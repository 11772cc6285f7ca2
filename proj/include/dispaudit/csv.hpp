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

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace dispaudit {

// Parsed CSV: header row plus data rows, fields unescaped. Rows may be
// ragged; consumers decide how to treat width mismatches.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC-4180-style parser: quoted fields, doubled-quote escapes, embedded
// commas/newlines, CRLF line ends, optional UTF-8 BOM. First row is the
// header. Throws DataError on an unterminated quote.
CsvTable parse_csv(const std::string& text);

// Reads the whole file; DataError if unreadable.
std::string read_text_file(const std::string& path);

CsvTable read_csv_file(const std::string& path);

// Writes via a temp file in the same directory plus rename, so rerun
// outputs are replaced atomically. DataError on I/O failure.
void write_text_atomic(const std::string& path, const std::string& content);

// Shortest decimal string that parses back to exactly x. Deterministic
// across runs; used for every number this tool writes to CSV.
std::string format_double(double x);

// Quotes a field only when it needs quoting (comma, quote, newline).
std::string csv_escape(const std::string& field);

// Strict double parser: rejects empty strings, trailing junk, NaN and Inf.
std::optional<double> parse_double(const std::string& text);

// Line-oriented CSV row assembly.
class CsvWriter {
 public:
  void row(const std::vector<std::string>& fields);
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

}  // namespace dispaudit
