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

#include "dispaudit/bias.hpp"

#include <cstdint>
#include <map>

#include "dispaudit/csv.hpp"
#include "dispaudit/stable_sum.hpp"

namespace dispaudit {

namespace {

std::string binary_counterpart(const Dataset& dataset, std::string_view u) {
  if (dataset.universe.size() != 2) {
    throw ConfigError("an explicit counterpart class is required with " +
                      std::to_string(dataset.universe.size()) + " classes");
  }
  const std::size_t u_idx = dataset.universe.require(u);
  return dataset.universe.label(1 - u_idx);
}

// One pass over the dataset gathering every count and compensated sum the
// pair decomposition needs. "above" means the group's proxy probability
// strictly exceeds q, which is exactly the hard-assignment event.
struct PairAggregates {
  std::int64_t n_records = 0;
  std::int64_t n_true_u = 0;    // A = u
  std::int64_t n_assigned = 0;  // above, any true class
  std::int64_t n_above_u = 0;   // above, A = u
  std::int64_t n_above_c = 0;   // above, A = counterpart
  std::int64_t n_below_u = 0;   // not above, A = u
  StableSum y_true_u;
  StableSum y_assigned;
  StableSum y_above_u;
  StableSum y_above_c;
  StableSum y_below_u;
};

PairAggregates collect_pair(const Dataset& dataset,
                            const ThresholdPolicy& policy, std::string_view u,
                            std::string_view counterpart) {
  const std::size_t u_idx = dataset.universe.require(u);
  const std::size_t c_idx = dataset.universe.require(counterpart);
  if (u_idx == c_idx) {
    throw ConfigError("group and counterpart class must differ, both '" +
                      std::string(u) + "'");
  }
  PairAggregates agg;
  for (const AuditRecord& record : dataset.records) {
    if (!record.true_class) {
      throw EstimationError(
          "true labels required: dataset has unlabeled records");
    }
    ++agg.n_records;
    const bool above = record.proxy.probs.at(u_idx) > policy.q;
    const bool is_u = *record.true_class == u_idx;
    const bool is_c = *record.true_class == c_idx;
    if (is_u) {
      ++agg.n_true_u;
      agg.y_true_u.add(record.outcome);
    }
    if (above) {
      ++agg.n_assigned;
      agg.y_assigned.add(record.outcome);
      if (is_u) {
        ++agg.n_above_u;
        agg.y_above_u.add(record.outcome);
      } else if (is_c) {
        ++agg.n_above_c;
        agg.y_above_c.add(record.outcome);
      }
    } else if (is_u) {
      ++agg.n_below_u;
      agg.y_below_u.add(record.outcome);
    }
  }
  return agg;
}

[[noreturn]] void throw_empty_event(std::string_view relation,
                                    double q, std::string_view event_class,
                                    std::string_view u) {
  throw EstimationError("empty conditioning event {P(A=" + std::string(u) +
                        "|Z) " + std::string(relation) + " " +
                        format_double(q) + ", A=" + std::string(event_class) +
                        "}");
}

DeltaTerms delta_from(const PairAggregates& agg, const ThresholdPolicy& policy,
                      std::string_view u, std::string_view counterpart) {
  if (agg.n_above_u == 0) {
    throw_empty_event(">", policy.q, u, u);
  }
  if (agg.n_above_c == 0) {
    throw_empty_event(">", policy.q, counterpart, u);
  }
  if (agg.n_below_u == 0) {
    throw_empty_event("<=", policy.q, u, u);
  }
  const double m_above_u = agg.y_above_u.value() / agg.n_above_u;
  const double m_above_c = agg.y_above_c.value() / agg.n_above_c;
  const double m_below_u = agg.y_below_u.value() / agg.n_below_u;
  return {m_above_c - m_above_u, m_below_u - m_above_u};
}

CTerms c_from(const PairAggregates& agg, const ThresholdPolicy& policy,
              std::string_view u) {
  if (agg.n_true_u == 0) {
    throw EstimationError("class '" + std::string(u) +
                          "' has no true members");
  }
  if (agg.n_assigned == 0) {
    throw EstimationError("empty imputed group under q=" +
                          format_double(policy.q) + " for class '" +
                          std::string(u) + "'");
  }
  // Exact small-integer ratios; each product rounds once.
  const double assigned_given_true =
      static_cast<double>(agg.n_above_u) / agg.n_true_u;
  const double missed_given_true =
      static_cast<double>(agg.n_true_u - agg.n_above_u) / agg.n_true_u;
  const double own_given_assigned =
      static_cast<double>(agg.n_above_u) / agg.n_assigned;
  const double counterpart_given_assigned =
      static_cast<double>(agg.n_above_c) / agg.n_assigned;
  CTerms c;
  c.c1 = assigned_given_true * counterpart_given_assigned;
  c.c2 = own_given_assigned * missed_given_true;
  c.c3 = missed_given_true * counterpart_given_assigned;
  return c;
}

}  // namespace

double conditional_covariance_mean(const Dataset& dataset,
                                   std::string_view u) {
  const std::size_t u_idx = dataset.universe.require(u);
  struct KeyAgg {
    std::int64_t n = 0;
    StableSum y;
    std::int64_t n_u = 0;
    StableSum y_u;  // sum of outcomes over A = u, i.e. sum of 1(A=u)*Y
  };
  std::map<std::string, KeyAgg> keys;
  for (const AuditRecord& record : dataset.records) {
    if (!record.true_class) {
      throw EstimationError(
          "true labels required: dataset has unlabeled records");
    }
    if (!record.proxy_key) {
      throw EstimationError(
          "proxy keys required: dataset has records without a key");
    }
    KeyAgg& agg = keys[*record.proxy_key];
    ++agg.n;
    agg.y.add(record.outcome);
    if (*record.true_class == u_idx) {
      ++agg.n_u;
      agg.y_u.add(record.outcome);
    }
  }
  if (keys.empty()) {
    throw EstimationError("proxy keys required: dataset is empty");
  }
  // E over keys, weighted by record mass; keys iterate in sorted order so
  // the compensated merge is deterministic.
  StableSum weighted;
  std::int64_t total = 0;
  for (const auto& [key, agg] : keys) {
    (void)key;
    const double mean_y = agg.y.value() / agg.n;
    const double mean_i = static_cast<double>(agg.n_u) / agg.n;
    const double mean_iy = agg.y_u.value() / agg.n;
    weighted.add(agg.n * (mean_iy - mean_i * mean_y));
    total += agg.n;
  }
  return weighted.value() / total;
}

double weighted_bias_theoretical(const Dataset& dataset, std::string_view u) {
  const std::size_t u_idx = dataset.universe.require(u);
  std::int64_t n_u = 0;
  for (const AuditRecord& record : dataset.records) {
    if (record.true_class && *record.true_class == u_idx) {
      ++n_u;
    }
  }
  if (n_u == 0) {
    throw EstimationError("class '" + std::string(u) +
                          "' has no labeled records");
  }
  const double p_u =
      static_cast<double>(n_u) / static_cast<double>(dataset.records.size());
  return -conditional_covariance_mean(dataset, u) / p_u;
}

DeltaTerms delta_terms(const Dataset& dataset, const ThresholdPolicy& policy,
                       std::string_view u, std::string_view counterpart) {
  const PairAggregates agg = collect_pair(dataset, policy, u, counterpart);
  return delta_from(agg, policy, u, counterpart);
}

DeltaTerms delta_terms(const Dataset& dataset, const ThresholdPolicy& policy,
                       std::string_view u) {
  return delta_terms(dataset, policy, u, binary_counterpart(dataset, u));
}

CTerms c_terms(const Dataset& dataset, const ThresholdPolicy& policy,
               std::string_view u, std::string_view counterpart) {
  const PairAggregates agg = collect_pair(dataset, policy, u, counterpart);
  return c_from(agg, policy, u);
}

CTerms c_terms(const Dataset& dataset, const ThresholdPolicy& policy,
               std::string_view u) {
  return c_terms(dataset, policy, u, binary_counterpart(dataset, u));
}

BiasDecomposition thresholded_bias_theoretical(const Dataset& dataset,
                                               const ThresholdPolicy& policy,
                                               std::string_view u,
                                               std::string_view counterpart) {
  const PairAggregates agg = collect_pair(dataset, policy, u, counterpart);
  const CTerms c = c_from(agg, policy, u);

  BiasDecomposition decomposition;
  decomposition.group = u;
  decomposition.counterpart = counterpart;
  decomposition.q = policy.q;
  decomposition.c1 = c.c1;
  decomposition.c2 = c.c2;
  decomposition.c3 = c.c3;

  // A delta whose weight is exactly zero cannot contribute; its weight's
  // numerator counts the very event that is empty, so zero weight is a
  // certificate, not a tolerance call.
  const double weight1 = c.c1 + c.c3;
  const double weight2 = c.c2 + c.c3;
  if (weight1 != 0.0 || weight2 != 0.0) {
    if (agg.n_above_u == 0) {
      throw_empty_event(">", policy.q, u, u);
    }
    const double m_above_u = agg.y_above_u.value() / agg.n_above_u;
    if (weight1 != 0.0) {
      if (agg.n_above_c == 0) {
        throw_empty_event(">", policy.q, counterpart, u);
      }
      decomposition.delta1 = agg.y_above_c.value() / agg.n_above_c - m_above_u;
    }
    if (weight2 != 0.0) {
      if (agg.n_below_u == 0) {
        throw_empty_event("<=", policy.q, u, u);
      }
      decomposition.delta2 = agg.y_below_u.value() / agg.n_below_u - m_above_u;
    }
  }

  decomposition.theoretical_bias =
      decomposition.delta1 * decomposition.c1 -
      decomposition.delta2 * decomposition.c2 +
      (decomposition.delta1 - decomposition.delta2) * decomposition.c3;
  const double imputed_mean = agg.y_assigned.value() / agg.n_assigned;
  const double true_mean = agg.y_true_u.value() / agg.n_true_u;
  decomposition.observed_bias = imputed_mean - true_mean;
  return decomposition;
}

BiasDecomposition thresholded_bias_theoretical(const Dataset& dataset,
                                               const ThresholdPolicy& policy,
                                               std::string_view u) {
  return thresholded_bias_theoretical(dataset, policy, u,
                                      binary_counterpart(dataset, u));
}

std::string_view bias_direction_name(BiasDirection direction) {
  switch (direction) {
    case BiasDirection::overestimate:
      return "overestimate";
    case BiasDirection::underestimate:
      return "underestimate";
    case BiasDirection::indeterminate:
      return "indeterminate";
  }
  return "unknown";
}

ConditionReport check_conditions(const Dataset& dataset,
                                 const ThresholdPolicy& policy,
                                 std::string_view adv, std::string_view dis) {
  const DeltaTerms adv_terms = delta_terms(dataset, policy, adv, dis);
  const DeltaTerms dis_terms = delta_terms(dataset, policy, dis, adv);

  ConditionReport report;
  report.advantaged = adv;
  report.disadvantaged = dis;
  report.q = policy.q;
  report.values = {adv_terms.delta1, -dis_terms.delta1, -adv_terms.delta2,
                   dis_terms.delta2};
  bool all_nonneg = true;
  bool all_nonpos = true;
  bool any_pos = false;
  bool any_neg = false;
  for (std::size_t i = 0; i < report.values.size(); ++i) {
    const double v = report.values[i];
    report.holds[i] = v >= 0.0;
    report.holds_primed[i] = v <= 0.0;
    all_nonneg = all_nonneg && v >= 0.0;
    all_nonpos = all_nonpos && v <= 0.0;
    any_pos = any_pos || v > 0.0;
    any_neg = any_neg || v < 0.0;
  }
  if (all_nonneg && any_pos) {
    report.predicted = BiasDirection::overestimate;
  } else if (all_nonpos && any_neg) {
    report.predicted = BiasDirection::underestimate;
  } else {
    report.predicted = BiasDirection::indeterminate;
  }
  return report;
}

COrderingReport check_c_orderings(const Dataset& dataset,
                                  const ThresholdPolicy& policy,
                                  std::string_view u,
                                  std::string_view counterpart,
                                  bool multiclass) {
  const PairAggregates agg = collect_pair(dataset, policy, u, counterpart);
  COrderingReport report;
  report.group = u;
  report.counterpart = counterpart;
  report.q = policy.q;
  report.multiclass = multiclass;
  report.c = c_from(agg, policy, u);
  report.posterior_own = static_cast<double>(agg.n_above_u) / agg.n_assigned;
  report.posterior_counterpart =
      static_cast<double>(agg.n_above_c) / agg.n_assigned;
  report.assigned_given_true =
      static_cast<double>(agg.n_above_u) / agg.n_true_u;
  report.prob_true = static_cast<double>(agg.n_true_u) / agg.n_records;
  report.prob_assigned = static_cast<double>(agg.n_assigned) / agg.n_records;
  report.other_mass_assigned =
      static_cast<double>(agg.n_assigned - agg.n_above_u - agg.n_above_c) /
      agg.n_records;
  report.posterior_condition =
      report.posterior_own > report.posterior_counterpart;
  report.prior_condition =
      multiclass
          ? report.prob_true + report.other_mass_assigned > report.prob_assigned
          : report.prob_true > report.prob_assigned;
  report.c2_gt_c3 = report.c.c2 > report.c.c3;
  report.c2_gt_c1 = report.c.c2 > report.c.c1;
  report.c1_gt_c3 = report.c.c1 > report.c.c3;
  report.identity_lhs = report.c.c2 - report.c.c1;
  report.identity_rhs = report.posterior_own - report.assigned_given_true;
  return report;
}

COrderingReport check_c_orderings(const Dataset& dataset,
                                  const ThresholdPolicy& policy,
                                  std::string_view u) {
  return check_c_orderings(dataset, policy, u,
                           binary_counterpart(dataset, u), false);
}

CovarianceQuadrants covariance_quadrants(const Dataset& dataset,
                                         std::string_view adv,
                                         std::string_view dis) {
  const std::size_t adv_idx = dataset.universe.require(adv);
  const std::size_t dis_idx = dataset.universe.require(dis);
  if (adv_idx == dis_idx) {
    throw ConfigError("advantaged and disadvantaged class must differ, both '" +
                      std::string(adv) + "'");
  }
  struct KeyAgg {
    std::int64_t n = 0;
    StableSum y;
    std::int64_t n_adv = 0;
    StableSum y_adv;
    std::int64_t n_dis = 0;
    StableSum y_dis;
  };
  std::map<std::string, KeyAgg> keys;
  for (const AuditRecord& record : dataset.records) {
    if (!record.true_class) {
      throw EstimationError(
          "true labels required: dataset has unlabeled records");
    }
    if (!record.proxy_key) {
      throw EstimationError(
          "proxy keys required: dataset has records without a key");
    }
    KeyAgg& agg = keys[*record.proxy_key];
    ++agg.n;
    agg.y.add(record.outcome);
    if (*record.true_class == adv_idx) {
      ++agg.n_adv;
      agg.y_adv.add(record.outcome);
    } else if (*record.true_class == dis_idx) {
      ++agg.n_dis;
      agg.y_dis.add(record.outcome);
    }
  }
  if (keys.empty()) {
    throw EstimationError("proxy keys required: dataset is empty");
  }

  std::int64_t total = 0;
  for (const auto& [key, agg] : keys) {
    (void)key;
    total += agg.n;
  }
  CovarianceQuadrants quadrants;
  quadrants.advantaged = adv;
  quadrants.disadvantaged = dis;
  StableSum pos_pos, pos_neg, neg_pos, neg_neg, boundary;
  for (const auto& [key, agg] : keys) {
    (void)key;
    const double mean_y = agg.y.value() / agg.n;
    const double cov_adv = agg.y_adv.value() / agg.n -
                           (static_cast<double>(agg.n_adv) / agg.n) * mean_y;
    const double cov_dis = agg.y_dis.value() / agg.n -
                           (static_cast<double>(agg.n_dis) / agg.n) * mean_y;
    const double mass = static_cast<double>(agg.n) / total;
    const double tol = CovarianceQuadrants::boundary_tol;
    if (std::abs(cov_adv) <= tol || std::abs(cov_dis) <= tol) {
      boundary.add(mass);
    } else if (cov_adv > 0.0 && cov_dis > 0.0) {
      pos_pos.add(mass);
    } else if (cov_adv > 0.0) {
      pos_neg.add(mass);
    } else if (cov_dis > 0.0) {
      neg_pos.add(mass);
    } else {
      neg_neg.add(mass);
    }
  }
  quadrants.pos_pos = pos_pos.value();
  quadrants.pos_neg = pos_neg.value();
  quadrants.neg_pos = neg_pos.value();
  quadrants.neg_neg = neg_neg.value();
  quadrants.boundary = boundary.value();
  return quadrants;
}

std::vector<BiasSeriesPoint> theoretical_vs_observed(
    const Dataset& dataset, const std::vector<ThresholdPolicy>& policies,
    std::string_view adv, std::string_view dis) {
  const double delta = true_disparity(dataset, adv, dis);
  std::vector<BiasSeriesPoint> series;
  series.reserve(policies.size());
  for (const ThresholdPolicy& policy : policies) {
    BiasSeriesPoint point;
    point.q = policy.q;
    point.observed =
        thresholded_estimate(dataset, policy, adv, dis).disparity - delta;
    point.theoretical =
        thresholded_bias_theoretical(dataset, policy, adv, dis)
            .theoretical_bias -
        thresholded_bias_theoretical(dataset, policy, dis, adv)
            .theoretical_bias;
    series.push_back(point);
  }
  return series;
}

}  // namespace dispaudit
