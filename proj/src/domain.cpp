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

#include "dispaudit/domain.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "dispaudit/stable_sum.hpp"

namespace dispaudit {

LabelUniverse::LabelUniverse(std::vector<std::string> labels)
    : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw ConfigError("label universe needs at least 2 classes, got " +
                      std::to_string(labels_.size()));
  }
  std::set<std::string> seen;
  for (const auto& label : labels_) {
    if (label.empty()) {
      throw ConfigError("class labels must be nonempty");
    }
    if (!seen.insert(label).second) {
      throw ConfigError("duplicate class label '" + label + "'");
    }
  }
}

std::optional<std::size_t> LabelUniverse::find(std::string_view id) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == id) {
      return i;
    }
  }
  return std::nullopt;
}

std::size_t LabelUniverse::require(std::string_view id) const {
  if (auto i = find(id)) {
    return *i;
  }
  throw ConfigError("unknown class label '" + std::string(id) + "'");
}

double ProxyDistribution::sum() const {
  StableSum total;
  for (double p : probs) {
    total.add(p);
  }
  return total.value();
}

void renormalize(ProxyDistribution& proxy) {
  for (double p : proxy.probs) {
    if (!(p >= 0.0)) {
      throw DataError("cannot renormalize a row with negative entries");
    }
  }
  const double total = proxy.sum();
  if (!(total > 0.0)) {
    throw DataError("cannot renormalize a row with no positive mass");
  }
  for (double& p : proxy.probs) {
    p /= total;
  }
}

ThresholdPolicy::ThresholdPolicy(double q_in) : q(q_in) {
  if (!(q >= 0.5) || !(q < 1.0)) {
    throw ConfigError("threshold q must lie in [0.5, 1), got " +
                      std::to_string(q_in));
  }
}

namespace {

bool finite_in_unit(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

}  // namespace

std::vector<Violation> validate(const Dataset& dataset) {
  std::vector<Violation> violations;
  if (dataset.universe.size() < 2) {
    violations.push_back(
        {std::nullopt, "label universe needs at least 2 classes"});
    return violations;
  }
  const std::size_t width = dataset.universe.size();
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const AuditRecord& record = dataset.records[i];
    if (!finite_in_unit(record.outcome)) {
      violations.push_back({i, "outcome outside [0,1]"});
    }
    if (record.proxy.probs.size() != width) {
      violations.push_back({i, "proxy length " +
                                   std::to_string(record.proxy.probs.size()) +
                                   " does not match universe size " +
                                   std::to_string(width)});
      continue;
    }
    bool entries_ok = true;
    for (std::size_t k = 0; k < width; ++k) {
      if (!finite_in_unit(record.proxy.probs[k])) {
        violations.push_back(
            {i, "proxy entry " + std::to_string(k) + " outside [0,1]"});
        entries_ok = false;
      }
    }
    if (entries_ok) {
      const double gap = record.proxy.sum() - 1.0;
      if (std::abs(gap) > kSimplexTol) {
        std::ostringstream msg;
        msg << "proxy sums to " << record.proxy.sum()
            << ", off by more than " << kSimplexTol;
        violations.push_back({i, msg.str()});
      }
    }
    if (record.true_class && *record.true_class >= width) {
      violations.push_back({i, "true_class index " +
                                   std::to_string(*record.true_class) +
                                   " outside universe"});
    }
  }
  return violations;
}

void require_valid(const Dataset& dataset) {
  const auto violations = validate(dataset);
  if (violations.empty()) {
    return;
  }
  std::ostringstream msg;
  msg << "invalid dataset (" << violations.size() << " violation"
      << (violations.size() == 1 ? "" : "s") << "):";
  const std::size_t shown = std::min<std::size_t>(violations.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) {
    msg << " [";
    if (violations[i].record) {
      msg << "record " << *violations[i].record;
    } else {
      msg << "dataset";
    }
    msg << ": " << violations[i].message << "]";
  }
  if (violations.size() > shown) {
    msg << " and " << violations.size() - shown << " more";
  }
  throw DataError(msg.str());
}

}  // namespace dispaudit
