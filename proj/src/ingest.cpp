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

#include "dispaudit/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "dispaudit/csv.hpp"
#include "dispaudit/errors.hpp"
#include "dispaudit/stable_sum.hpp"

namespace dispaudit {

namespace {

constexpr std::size_t kMaxReportedProblems = 20;

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) {
    return "";
  }
  const auto end = text.find_last_not_of(" \t\r\n");
  return text.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) {
      items.push_back(trim(text.substr(start)));
      return items;
    }
    items.push_back(trim(text.substr(start, comma - start)));
    start = comma + 1;
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") {
    return true;
  }
  if (value == "false") {
    return false;
  }
  throw ConfigError("config key '" + key + "' needs true or false, got '" +
                    value + "'");
}

void note_problem(IngestReport& report, const std::string& message) {
  if (report.problems.size() < kMaxReportedProblems) {
    report.problems.push_back(message);
  }
}

// Resolves a header column by name; DataError names the missing column.
std::size_t column_index(const CsvTable& table, const std::string& name,
                         const std::string& path) {
  const auto it =
      std::find(table.header.begin(), table.header.end(), name);
  if (it == table.header.end()) {
    throw DataError("file '" + path + "' is missing column '" + name + "'");
  }
  return static_cast<std::size_t>(it - table.header.begin());
}

}  // namespace

ColumnMap ColumnMap::hmda_default() {
  ColumnMap map;
  map.outcome_column = "action_taken";
  map.outcome_coding = {{"1", OutcomeCode::favorable},
                        {"2", OutcomeCode::favorable},
                        {"3", OutcomeCode::unfavorable}};
  map.skip_unmapped_outcome = true;
  map.geo_columns = {"census_tract"};
  map.true_class_column = "derived_race";
  map.label_skip = {"", "Race Not Available"};
  return map;
}

ColumnMap ColumnMap::from_config_text(const std::string& text) {
  ColumnMap map = hmda_default();
  // The first coding key in the config discards the inherited coding so a
  // config always spells out its own complete outcome vocabulary.
  bool coding_reset = false;
  auto reset_coding = [&map, &coding_reset]() {
    if (!coding_reset) {
      map.outcome_coding.clear();
      coding_reset = true;
    }
  };
  auto add_outcome_values = [&map](const std::string& raw_list,
                                   OutcomeCode code) {
    for (const std::string& raw : split_list(raw_list)) {
      if (!map.outcome_coding.emplace(raw, code).second) {
        throw ConfigError("outcome value '" + raw + "' mapped twice");
      }
    }
  };

  std::size_t line_start = 0;
  int line_number = 0;
  while (line_start <= text.size()) {
    const std::size_t line_end = text.find('\n', line_start);
    const std::string line =
        trim(text.substr(line_start,
                         line_end == std::string::npos
                             ? std::string::npos
                             : line_end - line_start));
    line_start = line_end == std::string::npos ? text.size() + 1
                                               : line_end + 1;
    ++line_number;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "outcome.column") {
      map.outcome_column = value;
    } else if (key == "outcome.favorable") {
      reset_coding();
      add_outcome_values(value, OutcomeCode::favorable);
    } else if (key == "outcome.unfavorable") {
      reset_coding();
      add_outcome_values(value, OutcomeCode::unfavorable);
    } else if (key == "outcome.skip") {
      reset_coding();
      add_outcome_values(value, OutcomeCode::skip);
    } else if (key == "outcome.numeric") {
      if (parse_bool(key, value)) {
        map.outcome_coding.clear();
        coding_reset = true;
      }
    } else if (key == "outcome.skip_unmapped") {
      map.skip_unmapped_outcome = parse_bool(key, value);
    } else if (key == "geo.columns") {
      map.geo_columns = split_list(value);
      if (map.geo_columns.empty() || map.geo_columns.front().empty()) {
        throw ConfigError("geo.columns needs at least one column name");
      }
    } else if (key == "label.column") {
      map.true_class_column = value;
    } else if (key == "label.skip") {
      map.label_skip.clear();
      for (const std::string& raw : split_list(value)) {
        map.label_skip.insert(raw);
      }
    } else if (key == "label.skip_unmapped") {
      map.skip_unmapped_label = parse_bool(key, value);
    } else if (key.rfind("class.", 0) == 0) {
      const std::string class_id = key.substr(6);
      if (class_id.empty()) {
        throw ConfigError("class mapping needs a class id after 'class.'");
      }
      for (const std::string& raw : split_list(value)) {
        for (const auto& [other_id, raws] : map.label_coding) {
          if (other_id != class_id && raws.count(raw) != 0) {
            throw ConfigError("class value '" + raw + "' mapped twice");
          }
        }
        map.label_coding[class_id].insert(raw);
      }
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  return map;
}

ColumnMap ColumnMap::from_config_file(const std::string& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const DataError& error) {
    throw ConfigError(std::string(error.what()));
  }
  return from_config_text(text);
}

LoadRecordsResult load_records(const std::string& path, const ColumnMap& map,
                               bool strict) {
  const CsvTable table = read_csv_file(path);
  const std::size_t outcome_idx =
      column_index(table, map.outcome_column, path);
  std::vector<std::size_t> geo_idx;
  geo_idx.reserve(map.geo_columns.size());
  for (const std::string& name : map.geo_columns) {
    geo_idx.push_back(column_index(table, name, path));
  }
  const bool labeled = !map.true_class_column.empty();
  const std::size_t label_idx =
      labeled ? column_index(table, map.true_class_column, path) : 0;

  LoadRecordsResult result;
  auto reject = [&result, strict](const std::string& message) {
    if (strict) {
      throw DataError(message);
    }
    ++result.report.rejected;
    note_problem(result.report, message);
  };

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::vector<std::string>& row = table.rows[i];
    const std::string where = "row " + std::to_string(i + 1) + ": ";
    ++result.report.total;
    if (row.size() != table.header.size()) {
      reject(where + "expected " + std::to_string(table.header.size()) +
             " fields, got " + std::to_string(row.size()));
      continue;
    }

    RawRecord record;
    const std::string& raw_outcome = row[outcome_idx];
    if (map.outcome_coding.empty()) {
      const std::optional<double> value = parse_double(raw_outcome);
      if (!value) {
        reject(where + "outcome '" + raw_outcome + "' is not a number");
        continue;
      }
      if (*value < 0.0 || *value > 1.0) {
        reject(where + "outcome " + format_double(*value) +
               " lies outside [0,1]");
        continue;
      }
      record.outcome = *value;
    } else {
      const auto it = map.outcome_coding.find(raw_outcome);
      if (it == map.outcome_coding.end()) {
        if (map.skip_unmapped_outcome) {
          ++result.report.skipped;
          note_problem(result.report,
                       where + "skipped unmapped outcome value '" +
                           raw_outcome + "'");
        } else {
          reject(where + "unmapped outcome value '" + raw_outcome + "'");
        }
        continue;
      }
      if (it->second == OutcomeCode::skip) {
        ++result.report.skipped;
        note_problem(result.report,
                     where + "skipped outcome value '" + raw_outcome + "'");
        continue;
      }
      record.outcome = it->second == OutcomeCode::favorable ? 1.0 : 0.0;
    }

    bool geo_ok = true;
    for (std::size_t g = 0; g < geo_idx.size(); ++g) {
      const std::string& part = row[geo_idx[g]];
      if (part.empty()) {
        reject(where + "empty geography value in column '" +
               map.geo_columns[g] + "'");
        geo_ok = false;
        break;
      }
      if (g > 0) {
        record.geo_key += '-';
      }
      record.geo_key += part;
    }
    if (!geo_ok) {
      continue;
    }

    if (labeled) {
      const std::string& raw_label = row[label_idx];
      if (map.label_skip.count(raw_label) != 0) {
        // Row loads without a label.
      } else if (map.label_coding.empty()) {
        record.true_class = raw_label;
      } else {
        bool matched = false;
        for (const auto& [class_id, raws] : map.label_coding) {
          if (raws.count(raw_label) != 0) {
            record.true_class = class_id;
            matched = true;
            break;
          }
        }
        if (!matched && !map.skip_unmapped_label) {
          reject(where + "unmapped class value '" + raw_label + "'");
          continue;
        }
      }
    }

    result.rows.push_back(std::move(record));
    ++result.report.loaded;
  }
  return result;
}

LoadCompositionResult load_composition(const std::string& path, bool strict) {
  const CsvTable table = read_csv_file(path);
  if (table.header.size() < 3) {
    throw DataError("composition file '" + path +
                    "' needs a key column and at least 2 class columns");
  }
  LoadCompositionResult result;
  result.table.key_column = table.header.front();
  try {
    result.table.universe = LabelUniverse(std::vector<std::string>(
        table.header.begin() + 1, table.header.end()));
  } catch (const ConfigError& error) {
    throw DataError("composition header: " + std::string(error.what()));
  }
  const std::size_t width = result.table.universe.size();

  auto reject = [&result, strict](const std::string& message) {
    if (strict) {
      throw DataError(message);
    }
    ++result.report.rejected;
    note_problem(result.report, message);
  };

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::vector<std::string>& row = table.rows[i];
    const std::string where = "row " + std::to_string(i + 1) + ": ";
    ++result.report.total;
    if (row.size() != width + 1) {
      reject(where + "expected " + std::to_string(width + 1) +
             " fields, got " + std::to_string(row.size()));
      continue;
    }
    const std::string& key = row.front();
    if (result.table.rows.count(key) != 0) {
      throw DataError("duplicate geography key '" + key + "' (" +
                      "row " + std::to_string(i + 1) + ")");
    }

    ProxyDistribution dist;
    dist.probs.reserve(width);
    bool ok = true;
    for (std::size_t c = 0; c < width; ++c) {
      const std::optional<double> value = parse_double(row[c + 1]);
      if (!value) {
        reject(where + "share '" + row[c + 1] + "' is not a number");
        ok = false;
        break;
      }
      if (*value < 0.0) {
        reject(where + "negative share " + format_double(*value));
        ok = false;
        break;
      }
      dist.probs.push_back(*value);
    }
    if (!ok) {
      continue;
    }
    const double sum = dist.sum();
    if (sum <= 0.0) {
      reject(where + "shares sum to 0");
      continue;
    }
    if (std::abs(sum - 1.0) > kSimplexRenormTol) {
      reject(where + "shares sum to " + format_double(sum) +
             ", beyond the renormalization tolerance " +
             format_double(kSimplexRenormTol));
      continue;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) {
      for (double& p : dist.probs) {
        p /= sum;
      }
      ++result.report.renormalized;
    }
    result.table.rows.emplace(key, std::move(dist));
    ++result.report.loaded;
  }

  if (result.table.rows.empty()) {
    throw DataError("composition file '" + path + "' has no usable rows");
  }
  return result;
}

LikelihoodTable load_likelihood(const std::string& path,
                                const std::string& feature,
                                const LabelUniverse& universe) {
  const CsvTable table = read_csv_file(path);
  if (table.header.size() != universe.size() + 1) {
    throw DataError("likelihood file '" + path + "' needs a value column and " +
                    std::to_string(universe.size()) + " class columns");
  }
  LikelihoodTable out;
  out.feature = feature;
  for (std::size_t c = 0; c < universe.size(); ++c) {
    const std::string& name = table.header[c + 1];
    if (name != universe.label(c)) {
      throw DataError("likelihood file '" + path + "': class column '" + name +
                      "' does not match expected class '" + universe.label(c) +
                      "'");
    }
    out.classes.push_back(name);
  }

  std::vector<StableSum> column_sums(universe.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const std::vector<std::string>& row = table.rows[i];
    const std::string where =
        "likelihood file '" + path + "', row " + std::to_string(i + 1) + ": ";
    if (row.size() != universe.size() + 1) {
      throw DataError(where + "expected " +
                      std::to_string(universe.size() + 1) + " fields, got " +
                      std::to_string(row.size()));
    }
    const std::string& value_key = row.front();
    if (out.values.count(value_key) != 0) {
      throw DataError(where + "duplicate feature value '" + value_key + "'");
    }
    std::vector<double> likelihoods;
    likelihoods.reserve(universe.size());
    for (std::size_t c = 0; c < universe.size(); ++c) {
      const std::optional<double> value = parse_double(row[c + 1]);
      if (!value) {
        throw DataError(where + "likelihood '" + row[c + 1] +
                        "' is not a number");
      }
      if (*value < 0.0) {
        throw DataError(where + "negative likelihood " +
                        format_double(*value));
      }
      likelihoods.push_back(*value);
      column_sums[c].add(*value);
    }
    out.values.emplace(value_key, std::move(likelihoods));
  }
  if (out.values.empty()) {
    throw DataError("likelihood file '" + path + "' has no rows");
  }
  out.normalized = true;
  for (StableSum& sum : column_sums) {
    if (std::abs(sum.value() - 1.0) > 1e-6) {
      out.normalized = false;
      break;
    }
  }
  return out;
}

}  // namespace dispaudit
