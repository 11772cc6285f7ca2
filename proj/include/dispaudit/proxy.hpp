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
#include <string>
#include <string_view>
#include <vector>

#include "dispaudit/domain.hpp"

namespace dispaudit {

// One ingested decision row before proxy attachment.
struct RawRecord {
  double outcome = 0.0;
  std::string geo_key;
  std::optional<std::string> true_class;
};

// Per-geounit class proportions; every row is a valid simplex after load.
struct CompositionTable {
  std::string key_column;  // header name of the geo column, informational
  LabelUniverse universe;
  std::map<std::string, ProxyDistribution> rows;
};

// Returns the stored row unchanged; DataError naming the key when absent.
const ProxyDistribution& proxy_from_composition(const CompositionTable& table,
                                                std::string_view geo_key);

// P(feature value | class) by universe position. When the per-class columns
// do not each sum to 1 within 1e-6 the table is flagged unnormalized; only
// likelihood ratios matter downstream, so both kinds combine identically.
struct LikelihoodTable {
  std::string feature;
  std::vector<std::string> classes;  // must match the caller's universe order
  std::map<std::string, std::vector<double>> values;
  bool normalized = false;
};

// posterior(u) proportional to prior(u) * product over observed features of
// L_f(observed_f | u), renormalized. Tables whose feature is absent from
// `observed` are skipped (feature unobserved). Errors: an observed feature
// with no table, or a feature value missing from its table -> DataError;
// posterior mass zero -> DataError "contradictory evidence".
ProxyDistribution naive_bayes_posterior(
    const ProxyDistribution& prior, const std::vector<LikelihoodTable>& tables,
    const std::map<std::string, std::string>& observed);

struct AttachResult {
  Dataset dataset;
  std::int64_t dropped = 0;  // rows skipped under the drop policy
};

// Joins raw rows to composition rows by geo key, resolving label strings
// against the table's universe. Unknown key: DataError, or counted and
// dropped when drop_unmatched is set. Unknown label string: DataError.
AttachResult attach_proxy(const std::vector<RawRecord>& rows,
                          const CompositionTable& table, bool drop_unmatched);

// Replaces every record's proxy with the empirical class-frequency vector
// of its key group, making the proxy the exact plug-in P(A=u|Z). Requires
// true labels and keys on every record (DataError otherwise).
Dataset plugin_proxy(const Dataset& dataset);

}  // namespace dispaudit
