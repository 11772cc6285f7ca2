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

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dispaudit/proxy.hpp"

namespace dispaudit {

enum class OutcomeCode { favorable, unfavorable, skip };

// Maps raw decision-file columns onto (outcome, geo key, label). Loaded from
// a key=value config file or built from the mortgage-audit defaults.
struct ColumnMap {
  std::string outcome_column;
  // Raw outcome value -> coding. When empty, the outcome column is parsed
  // as a number that must already lie in [0,1].
  std::map<std::string, OutcomeCode> outcome_coding;
  // Raw values not covered by the coding: skipped when set, rejected when
  // not (rejection aborts in strict mode).
  bool skip_unmapped_outcome = false;

  // One or more columns concatenated with '-' into the opaque geo key.
  // Values are never parsed numerically; leading zeros matter.
  std::vector<std::string> geo_columns;

  // Optional ground-truth class column.
  std::string true_class_column;
  // Class id -> raw values that mean it. Empty means identity (the raw
  // value is the class id). Raw values in label_skip load the row with no
  // label; other unmapped raw values follow skip_unmapped_label.
  std::map<std::string, std::set<std::string>> label_coding;
  std::set<std::string> label_skip;
  bool skip_unmapped_label = false;

  // Mortgage-audit defaults: outcome "action_taken" coded {1,2 -> favorable,
  // 3 -> unfavorable, others skipped}, geo key "census_tract", labels from
  // "derived_race" verbatim with "" and "Race Not Available" unlabeled.
  static ColumnMap hmda_default();

  // key=value config, '#' comments. Starts from hmda_default and overrides
  // the keys present. Keys: outcome.column, outcome.favorable,
  // outcome.unfavorable, outcome.skip (comma lists of raw values),
  // outcome.numeric (true clears the coding), outcome.skip_unmapped,
  // geo.columns, label.column, label.skip, label.skip_unmapped, and
  // class.<id> = <comma list of raw values>. ConfigError on unknown keys,
  // duplicate raw outcome values, or unparsable booleans.
  static ColumnMap from_config_text(const std::string& text);
  static ColumnMap from_config_file(const std::string& path);
};

struct IngestReport {
  std::int64_t total = 0;     // data rows seen
  std::int64_t loaded = 0;
  std::int64_t skipped = 0;   // dropped by declared skip policy
  std::int64_t rejected = 0;  // malformed or unmapped without skip policy
  std::int64_t renormalized = 0;  // composition rows rescaled to sum 1
  // First rejection/skip reasons, each prefixed with its 1-based data row.
  std::vector<std::string> problems;
};

struct LoadRecordsResult {
  std::vector<RawRecord> rows;
  IngestReport report;
};

// Streams the decision CSV through the column map. Row order is preserved;
// loaded + skipped + rejected always equals total. Missing mapped column ->
// DataError naming it; unreadable file -> DataError. strict: the first
// rejection aborts with its reason.
LoadRecordsResult load_records(const std::string& path, const ColumnMap& map,
                               bool strict);

struct LoadCompositionResult {
  CompositionTable table;
  IngestReport report;
};

// Composition CSV: header `<geo>,<class1>,<class2>,...`; classes in header
// order become the universe. Rows renormalize or reject per the domain
// tolerance policy; duplicate keys are always an error; strict aborts on
// the first rejected row. The loaded table is never empty (DataError).
LoadCompositionResult load_composition(const std::string& path, bool strict);

// Likelihood CSV: header `<feature value column>,<class1>,...`, one row per
// feature value. Classes must match the given universe order (DataError).
// Sets the normalized flag when every class column sums to 1 within 1e-6.
LikelihoodTable load_likelihood(const std::string& path,
                                const std::string& feature,
                                const LabelUniverse& universe);

}  // namespace dispaudit
