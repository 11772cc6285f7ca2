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

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "dispaudit/domain.hpp"
#include "dispaudit/estimators.hpp"

namespace dispaudit {

// All quantities in this module are plug-in values: the dataset is the
// population, probabilities are exact frequencies, expectations are exact
// averages. No smoothing, no sampling corrections.
//
// Binary-pair semantics: formulas are written for a group u and its
// designated counterpart uc. With exactly two classes they are exact
// identities; with more classes the same formulas apply to the designated
// pair, remaining classes entering only through unassigned/other mass, and
// exactness is no longer guaranteed. Overloads without an explicit
// counterpart require a two-class universe and use the other class.

// E over keys of the within-key covariance Cov(1(A=u), Y), weighted by key
// record mass. Requires true labels and proxy keys on every record.
double conditional_covariance_mean(const Dataset& dataset, std::string_view u);

// Soft-estimator bias predicted from within-key covariance:
// -conditional_covariance_mean / P(A=u). EstimationError when class u has
// no labeled records.
double weighted_bias_theoretical(const Dataset& dataset, std::string_view u);

struct DeltaTerms {
  // delta1: mean outcome of counterpart-class records above the threshold
  // minus own-class records above it (within-key-style discrepancy).
  // delta2: mean outcome of own-class records at or below the threshold
  // minus own-class records above it (across-threshold discrepancy).
  double delta1 = 0.0;
  double delta2 = 0.0;
};

// Plug-in conditional means over the four events {P(A=u|Z) > q or <= q} x
// {A = u or A = uc}. EstimationError naming the event when one is empty.
DeltaTerms delta_terms(const Dataset& dataset, const ThresholdPolicy& policy,
                       std::string_view u, std::string_view counterpart);
DeltaTerms delta_terms(const Dataset& dataset, const ThresholdPolicy& policy,
                       std::string_view u);

struct CTerms {
  // c1 = P(A_hat=u | A=u) * P(A=uc | A_hat=u)
  // c2 = P(A=u | A_hat=u) * P(A_hat!=u | A=u)
  // c3 = P(A_hat!=u | A=u) * P(A=uc | A_hat=u)
  // where A_hat != u covers both NA and assignment to any other class.
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

// Misclassification products weighting the delta terms. EstimationError when
// class u has no true members or no assigned records.
CTerms c_terms(const Dataset& dataset, const ThresholdPolicy& policy,
               std::string_view u, std::string_view counterpart);
CTerms c_terms(const Dataset& dataset, const ThresholdPolicy& policy,
               std::string_view u);

struct BiasDecomposition {
  std::string group;
  std::string counterpart;
  double q = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  // Always rebuilt from the stored fields:
  // delta1*c1 - delta2*c2 + (delta1 - delta2)*c3.
  double theoretical_bias = 0.0;
  // Hard-imputation group mean minus true group mean.
  double observed_bias = 0.0;
};

// Full decomposition for one group. A delta term whose weight (c1+c3 for
// delta1, c2+c3 for delta2) is exactly zero is stored as 0 even when its
// conditioning event is empty: zero weight certifies the term cannot
// contribute (the weight's numerator counts exactly that event). A
// positively weighted delta over an empty event is still an error.
BiasDecomposition thresholded_bias_theoretical(const Dataset& dataset,
                                               const ThresholdPolicy& policy,
                                               std::string_view u,
                                               std::string_view counterpart);
BiasDecomposition thresholded_bias_theoretical(const Dataset& dataset,
                                               const ThresholdPolicy& policy,
                                               std::string_view u);

enum class BiasDirection { overestimate, underestimate, indeterminate };

std::string_view bias_direction_name(BiasDirection direction);

// Sign conditions on the four delta terms of the (adv, dis) pair, stored in
// order: delta1(adv), -delta1(dis), -delta2(adv), delta2(dis). All values
// >= 0 with at least one > 0 predicts the hard estimator overestimates the
// disparity; all <= 0 with one < 0 predicts underestimation; anything else
// (including all exactly zero) is indeterminate.
struct ConditionReport {
  std::string advantaged;
  std::string disadvantaged;
  double q = 0.0;
  std::array<double, 4> values{};
  std::array<bool, 4> holds{};         // value >= 0
  std::array<bool, 4> holds_primed{};  // value <= 0
  BiasDirection predicted = BiasDirection::indeterminate;
};

ConditionReport check_conditions(const Dataset& dataset,
                                 const ThresholdPolicy& policy,
                                 std::string_view adv, std::string_view dis);

// Realized orderings of the c terms next to the population quantities that
// predict them, plus the exchange identity c2 - c1 =
// P(A=u|A_hat=u) - P(A_hat=u|A=u) (exact for two classes only).
struct COrderingReport {
  std::string group;
  std::string counterpart;
  double q = 0.0;
  bool multiclass = false;
  CTerms c;
  double posterior_own = 0.0;          // P(A=u  | A_hat=u)
  double posterior_counterpart = 0.0;  // P(A=uc | A_hat=u)
  double assigned_given_true = 0.0;    // P(A_hat=u | A=u)
  double prob_true = 0.0;              // P(A=u)
  double prob_assigned = 0.0;          // P(A_hat=u)
  double other_mass_assigned = 0.0;    // P(A in other classes, A_hat=u)
  bool posterior_condition = false;    // posterior_own > posterior_counterpart
  // Binary form: prob_true > prob_assigned. Multiclass form:
  // prob_true + other_mass_assigned > prob_assigned.
  bool prior_condition = false;
  bool c2_gt_c3 = false;
  bool c2_gt_c1 = false;
  bool c1_gt_c3 = false;
  double identity_lhs = 0.0;  // c2 - c1
  double identity_rhs = 0.0;  // posterior_own - assigned_given_true
};

// multiclass selects which form of the prior condition is evaluated; the
// remaining fields are computed the same way regardless.
COrderingReport check_c_orderings(const Dataset& dataset,
                                  const ThresholdPolicy& policy,
                                  std::string_view u,
                                  std::string_view counterpart,
                                  bool multiclass);
COrderingReport check_c_orderings(const Dataset& dataset,
                                  const ThresholdPolicy& policy,
                                  std::string_view u);

// Record mass by sign pair of the within-key covariances
// (Cov(1(A=adv),Y|Z), Cov(1(A=dis),Y|Z)). Keys where either covariance has
// magnitude <= boundary_tol land in the separate boundary bucket, so all
// five masses sum to 1.
struct CovarianceQuadrants {
  std::string advantaged;
  std::string disadvantaged;
  double pos_pos = 0.0;
  double pos_neg = 0.0;
  double neg_pos = 0.0;
  double neg_neg = 0.0;
  double boundary = 0.0;
  static constexpr double boundary_tol = 1e-12;
};

CovarianceQuadrants covariance_quadrants(const Dataset& dataset,
                                         std::string_view adv,
                                         std::string_view dis);

struct BiasSeriesPoint {
  double q = 0.0;
  double observed = 0.0;     // hard-imputation disparity minus true disparity
  double theoretical = 0.0;  // decomposition bias(adv) - bias(dis)
};

// Side-by-side observed vs decomposed disparity bias across thresholds.
// Errors propagate; callers wanting partial series iterate per q.
std::vector<BiasSeriesPoint> theoretical_vs_observed(
    const Dataset& dataset, const std::vector<ThresholdPolicy>& policies,
    std::string_view adv, std::string_view dis);

}  // namespace dispaudit
