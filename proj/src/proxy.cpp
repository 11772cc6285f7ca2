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

#include "dispaudit/proxy.hpp"

#include <cstdint>

namespace dispaudit {

const ProxyDistribution& proxy_from_composition(const CompositionTable& table,
                                                std::string_view geo_key) {
  const auto it = table.rows.find(std::string(geo_key));
  if (it == table.rows.end()) {
    throw DataError("unknown geography key '" + std::string(geo_key) + "'");
  }
  return it->second;
}

ProxyDistribution naive_bayes_posterior(
    const ProxyDistribution& prior, const std::vector<LikelihoodTable>& tables,
    const std::map<std::string, std::string>& observed) {
  const std::size_t width = prior.probs.size();
  ProxyDistribution posterior = prior;

  // Every observed feature must be backed by a table.
  for (const auto& [feature, value] : observed) {
    (void)value;
    bool backed = false;
    for (const LikelihoodTable& table : tables) {
      if (table.feature == feature) {
        backed = true;
        break;
      }
    }
    if (!backed) {
      throw DataError("observed feature '" + feature +
                      "' has no likelihood table");
    }
  }

  for (const LikelihoodTable& table : tables) {
    const auto obs = observed.find(table.feature);
    if (obs == observed.end()) {
      continue;  // feature unobserved: no conditioning
    }
    const auto row = table.values.find(obs->second);
    if (row == table.values.end()) {
      throw DataError("feature '" + table.feature + "' has no likelihood for value '" +
                      obs->second + "'");
    }
    if (row->second.size() != width) {
      throw DataError("likelihood table '" + table.feature + "' has " +
                      std::to_string(row->second.size()) +
                      " classes, prior has " + std::to_string(width));
    }
    for (std::size_t u = 0; u < width; ++u) {
      posterior.probs[u] *= row->second[u];
    }
  }

  const double mass = posterior.sum();
  if (!(mass > 0.0)) {
    throw DataError(
        "contradictory evidence: posterior mass is zero for every class");
  }
  renormalize(posterior);
  return posterior;
}

AttachResult attach_proxy(const std::vector<RawRecord>& rows,
                          const CompositionTable& table, bool drop_unmatched) {
  AttachResult result;
  result.dataset.universe = table.universe;
  result.dataset.records.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RawRecord& row = rows[i];
    const auto it = table.rows.find(row.geo_key);
    if (it == table.rows.end()) {
      if (drop_unmatched) {
        ++result.dropped;
        continue;
      }
      throw DataError("unknown geography key '" + row.geo_key + "' (row " +
                      std::to_string(i + 1) +
                      "); use the drop policy to skip unmatched rows");
    }
    AuditRecord record;
    record.outcome = row.outcome;
    record.proxy = it->second;
    record.proxy_key = row.geo_key;
    if (row.true_class) {
      const auto idx = table.universe.find(*row.true_class);
      if (!idx) {
        throw DataError("unknown class label '" + *row.true_class + "' (row " +
                        std::to_string(i + 1) + ")");
      }
      record.true_class = *idx;
    }
    result.dataset.records.push_back(std::move(record));
  }
  return result;
}

Dataset plugin_proxy(const Dataset& dataset) {
  const std::size_t width = dataset.universe.size();
  struct KeyCounts {
    std::int64_t total = 0;
    std::vector<std::int64_t> per_class;
  };
  std::map<std::string, KeyCounts> keys;
  for (const AuditRecord& record : dataset.records) {
    if (!record.true_class) {
      throw DataError("plug-in proxies need true labels on every record");
    }
    if (!record.proxy_key) {
      throw DataError("plug-in proxies need proxy keys on every record");
    }
    KeyCounts& counts = keys[*record.proxy_key];
    if (counts.per_class.empty()) {
      counts.per_class.assign(width, 0);
    }
    ++counts.total;
    ++counts.per_class[*record.true_class];
  }

  std::map<std::string, ProxyDistribution> frequency;
  for (const auto& [key, counts] : keys) {
    ProxyDistribution row;
    row.probs.resize(width);
    for (std::size_t u = 0; u < width; ++u) {
      row.probs[u] =
          static_cast<double>(counts.per_class[u]) / counts.total;
    }
    frequency[key] = std::move(row);
  }

  Dataset out = dataset;
  for (AuditRecord& record : out.records) {
    record.proxy = frequency.at(*record.proxy_key);
  }
  return out;
}

}  // namespace dispaudit
