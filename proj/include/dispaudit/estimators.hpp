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
#include <optional>
#include <string>
#include <string_view>

#include "dispaudit/domain.hpp"

namespace dispaudit {

// Hard class assignment; nullopt is the explicit unclassified (NA) state,
// never a sentinel label.
using Assignment = std::optional<std::size_t>;

// Returns the class index whose probability strictly exceeds q, NA when no
// class does. With q >= 0.5 at most one class can qualify.
Assignment threshold_assign(const ProxyDistribution& proxy,
                            const ThresholdPolicy& policy);

enum class EstimatorKind { true_label, thresholded, weighted };

std::string_view estimator_kind_name(EstimatorKind kind);

// Count conventions per kind:
//  - true_label: classified_count = labeled records per class;
//    unclassified_count = unlabeled records (0 under the precondition).
//  - thresholded: classified_count = records assigned per class;
//    unclassified_count = NA records; counts sum to the record count.
//  - weighted: classified_count = records with strictly positive proxy mass
//    for the class (one record can count toward several classes);
//    unclassified_count = records with zero mass on every class (impossible
//    for a valid simplex row).
struct EstimateReport {
  EstimatorKind kind = EstimatorKind::true_label;
  std::optional<double> q;  // thresholded only
  std::string advantaged;
  std::string disadvantaged;
  std::map<std::string, double> per_class_mean;
  double disparity = 0.0;
  std::map<std::string, std::int64_t> classified_count;
  std::int64_t unclassified_count = 0;
};

// Mean outcome per class over ground-truth labels. Preconditions: every
// record labeled, every class inhabited; EstimationError otherwise.
std::map<std::string, double> true_group_means(const Dataset& dataset);

// Mean-outcome gap between the advantaged and disadvantaged classes.
// ConfigError when adv == dis or a label is unknown.
double true_disparity(const Dataset& dataset, std::string_view adv,
                      std::string_view dis);

// Full report built from true_group_means.
EstimateReport true_label_estimate(const Dataset& dataset,
                                   std::string_view adv, std::string_view dis);

// Hard-imputation estimate: per-class means over records assigned by
// threshold_assign; NA records excluded. per_class_mean covers every class
// with at least one assignment. EstimationError "empty imputed group under
// q" when adv or dis receives no assignment.
EstimateReport thresholded_estimate(const Dataset& dataset,
                                    const ThresholdPolicy& policy,
                                    std::string_view adv,
                                    std::string_view dis);

// Soft estimate: outcome average weighted by the class's proxy probability,
// computed for the (adv, dis) pair; no record excluded. EstimationError when
// a group's total proxy mass is zero.
EstimateReport weighted_estimate(const Dataset& dataset, std::string_view adv,
                                 std::string_view dis);

}  // namespace dispaudit
