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
#include <string_view>
#include <vector>

#include "dispaudit/errors.hpp"

namespace dispaudit {

// A probability row is accepted when its entries lie in [0,1] and sum to 1
// within kSimplexTol. Loaders renormalize rows whose sum is off by up to
// kSimplexRenormTol (census compositions round to two decimals, so a
// four-class row can be off by as much as 0.02) and reject anything worse.
inline constexpr double kSimplexTol = 1e-9;
inline constexpr double kSimplexRenormTol = 0.02;

// Ordered class labels. The order is fixed at construction and indexes
// every ProxyDistribution in the dataset.
class LabelUniverse {
 public:
  LabelUniverse() = default;

  // Labels must be nonempty, unique, and at least two. ConfigError otherwise.
  explicit LabelUniverse(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  const std::vector<std::string>& labels() const { return labels_; }

  std::optional<std::size_t> find(std::string_view id) const;

  // ConfigError naming the id when absent.
  std::size_t require(std::string_view id) const;

  bool operator==(const LabelUniverse&) const = default;

 private:
  std::vector<std::string> labels_;
};

// P(A = u | Z) over the universe labels, by position.
struct ProxyDistribution {
  std::vector<double> probs;

  double sum() const;
};

// Renormalizes in place to sum exactly as close to 1 as division allows.
// DataError when the mass is not strictly positive or an entry is negative.
void renormalize(ProxyDistribution& proxy);

// One decision unit: outcome in [0,1], class-membership probabilities,
// and optional ground truth / grouping key / covariate.
struct AuditRecord {
  double outcome = 0.0;
  ProxyDistribution proxy;
  std::optional<std::size_t> true_class;   // index into the universe
  std::optional<std::string> proxy_key;    // grouping key, e.g. census tract
  std::optional<double> covariate;         // e.g. income; simulation only
};

// Treated as the entire population by every estimator and bias formula:
// expectations are exact finite averages, so the asymptotic identities the
// bias module checks hold exactly rather than in the limit.
struct Dataset {
  LabelUniverse universe;
  std::vector<AuditRecord> records;
};

// Hard-assignment threshold. The assignment rule is strict (> q), so
// q ∈ [0.5, 1) guarantees at most one candidate class per record.
struct ThresholdPolicy {
  // ConfigError outside [0.5, 1).
  explicit ThresholdPolicy(double q);

  double q;
};

struct Violation {
  // Record index, or absent for dataset-level problems.
  std::optional<std::size_t> record;
  std::string message;
};

// Reports every invariant violation; empty means valid. Never throws.
std::vector<Violation> validate(const Dataset& dataset);

// DataError summarizing the first violations when the dataset is invalid.
void require_valid(const Dataset& dataset);

}  // namespace dispaudit
