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

#include "dispaudit/estimators.hpp"

#include <sstream>
#include <vector>

#include "dispaudit/csv.hpp"
#include "dispaudit/stable_sum.hpp"

namespace dispaudit {

Assignment threshold_assign(const ProxyDistribution& proxy,
                            const ThresholdPolicy& policy) {
  // With q >= 0.5 and the entries summing to 1, at most one entry can
  // strictly exceed q, so the first hit is the only hit.
  for (std::size_t i = 0; i < proxy.probs.size(); ++i) {
    if (proxy.probs[i] > policy.q) {
      return i;
    }
  }
  return std::nullopt;
}

std::string_view estimator_kind_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::true_label:
      return "true_label";
    case EstimatorKind::thresholded:
      return "thresholded";
    case EstimatorKind::weighted:
      return "weighted";
  }
  return "unknown";
}

namespace {

void require_pair(const Dataset& dataset, std::string_view adv,
                  std::string_view dis) {
  dataset.universe.require(adv);
  dataset.universe.require(dis);
  if (adv == dis) {
    throw ConfigError("advantaged and disadvantaged class must differ, both '" +
                      std::string(adv) + "'");
  }
}

}  // namespace

std::map<std::string, double> true_group_means(const Dataset& dataset) {
  const std::size_t width = dataset.universe.size();
  std::vector<StableSum> sums(width);
  std::vector<std::int64_t> counts(width, 0);
  for (const AuditRecord& record : dataset.records) {
    if (!record.true_class) {
      throw EstimationError(
          "true labels required: dataset has unlabeled records");
    }
    sums[*record.true_class].add(record.outcome);
    ++counts[*record.true_class];
  }
  std::map<std::string, double> means;
  for (std::size_t u = 0; u < width; ++u) {
    if (counts[u] == 0) {
      throw EstimationError("class '" + dataset.universe.label(u) +
                            "' has no labeled records");
    }
    means[dataset.universe.label(u)] = sums[u].value() / counts[u];
  }
  return means;
}

double true_disparity(const Dataset& dataset, std::string_view adv,
                      std::string_view dis) {
  require_pair(dataset, adv, dis);
  const auto means = true_group_means(dataset);
  return means.at(std::string(adv)) - means.at(std::string(dis));
}

EstimateReport true_label_estimate(const Dataset& dataset,
                                   std::string_view adv,
                                   std::string_view dis) {
  require_pair(dataset, adv, dis);
  EstimateReport report;
  report.kind = EstimatorKind::true_label;
  report.advantaged = adv;
  report.disadvantaged = dis;
  report.per_class_mean = true_group_means(dataset);
  report.disparity = report.per_class_mean.at(report.advantaged) -
                     report.per_class_mean.at(report.disadvantaged);
  for (std::size_t u = 0; u < dataset.universe.size(); ++u) {
    report.classified_count[dataset.universe.label(u)] = 0;
  }
  for (const AuditRecord& record : dataset.records) {
    if (record.true_class) {
      ++report.classified_count[dataset.universe.label(*record.true_class)];
    } else {
      ++report.unclassified_count;
    }
  }
  return report;
}

EstimateReport thresholded_estimate(const Dataset& dataset,
                                    const ThresholdPolicy& policy,
                                    std::string_view adv,
                                    std::string_view dis) {
  require_pair(dataset, adv, dis);
  const std::size_t width = dataset.universe.size();
  std::vector<StableSum> sums(width);
  std::vector<std::int64_t> counts(width, 0);
  std::int64_t unclassified = 0;
  for (const AuditRecord& record : dataset.records) {
    const Assignment assigned = threshold_assign(record.proxy, policy);
    if (assigned) {
      sums[*assigned].add(record.outcome);
      ++counts[*assigned];
    } else {
      ++unclassified;
    }
  }

  EstimateReport report;
  report.kind = EstimatorKind::thresholded;
  report.q = policy.q;
  report.advantaged = adv;
  report.disadvantaged = dis;
  report.unclassified_count = unclassified;
  for (std::size_t u = 0; u < width; ++u) {
    const std::string& label = dataset.universe.label(u);
    report.classified_count[label] = counts[u];
    if (counts[u] > 0) {
      report.per_class_mean[label] = sums[u].value() / counts[u];
    }
  }
  for (std::string_view group : {adv, dis}) {
    if (report.classified_count.at(std::string(group)) == 0) {
      throw EstimationError("empty imputed group under q=" +
                            format_double(policy.q) + " for class '" +
                            std::string(group) + "'");
    }
  }
  report.disparity = report.per_class_mean.at(report.advantaged) -
                     report.per_class_mean.at(report.disadvantaged);
  return report;
}

EstimateReport weighted_estimate(const Dataset& dataset, std::string_view adv,
                                 std::string_view dis) {
  require_pair(dataset, adv, dis);
  const std::size_t width = dataset.universe.size();
  const std::size_t adv_idx = dataset.universe.require(adv);
  const std::size_t dis_idx = dataset.universe.require(dis);

  StableSum weight_sum[2];
  StableSum weighted_outcome[2];
  const std::size_t pair_idx[2] = {adv_idx, dis_idx};
  std::vector<std::int64_t> positive_mass(width, 0);
  std::int64_t zero_everywhere = 0;
  for (const AuditRecord& record : dataset.records) {
    for (int side = 0; side < 2; ++side) {
      const double w = record.proxy.probs.at(pair_idx[side]);
      weight_sum[side].add(w);
      weighted_outcome[side].add(w * record.outcome);
    }
    bool any_mass = false;
    for (std::size_t u = 0; u < width; ++u) {
      if (record.proxy.probs.at(u) > 0.0) {
        ++positive_mass[u];
        any_mass = true;
      }
    }
    if (!any_mass) {
      ++zero_everywhere;
    }
  }

  EstimateReport report;
  report.kind = EstimatorKind::weighted;
  report.advantaged = adv;
  report.disadvantaged = dis;
  report.unclassified_count = zero_everywhere;
  for (std::size_t u = 0; u < width; ++u) {
    report.classified_count[dataset.universe.label(u)] = positive_mass[u];
  }
  const std::string_view names[2] = {adv, dis};
  for (int side = 0; side < 2; ++side) {
    const double total = weight_sum[side].value();
    if (!(total > 0.0)) {
      throw EstimationError("zero total proxy mass for class '" +
                            std::string(names[side]) + "'");
    }
    report.per_class_mean[std::string(names[side])] =
        weighted_outcome[side].value() / total;
  }
  report.disparity = report.per_class_mean.at(report.advantaged) -
                     report.per_class_mean.at(report.disadvantaged);
  return report;
}

}  // namespace dispaudit
