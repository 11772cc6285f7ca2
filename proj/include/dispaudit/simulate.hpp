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
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dispaudit/domain.hpp"

namespace dispaudit {

// Determinism contract for every generator in this module (documented here
// and in the README; tests pin it):
//  - engine: std::mt19937_64, whose output sequence the C++ standard fixes;
//  - uniform [0,1): (engine() >> 11) * 0x1.0p-53;
//  - standard normal: Box-Muller cosine branch from two fresh uniforms (the
//    sine half is discarded so draws never carry hidden state);
//  - Bernoulli(p): uniform() < p.
// std::normal_distribution is avoided on purpose: its algorithm is
// implementation-defined, which would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double normal(double mean, double stddev);
  bool bernoulli(double p);

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer over the golden-gamma stream: mix(base + (rep+1) *
// 0x9e3779b97f4a7c15). Replication seeds depend only on (base, rep), never
// on the grid value, so sweeps reuse common random numbers across the grid.
std::uint64_t splitmix64(std::uint64_t state);
std::uint64_t replication_seed(std::uint64_t base_seed, int rep);

// One simulated neighborhood: exact class counts, class-conditional income
// normals, and the shared proxy row (adv_fraction, 1 - adv_fraction).
struct NeighborhoodSpec {
  std::string key;
  std::int64_t population = 0;
  double adv_fraction = 0.0;  // P(A = first universe class | this key)
  std::vector<double> income_mean_by_class;  // by universe position
  double income_variance = 0.25;
};

// How an outcome probability is produced for a record.
struct OutcomePolicy {
  enum class Kind { logistic_income, table_rate, logistic_decile };

  Kind kind = Kind::logistic_income;
  double lambda = 1.0;  // logistic_income slope; must be > 0
  double center = 2.0;  // logistic center (income or decile scale)
  // table_rate: (key, class index) -> P(Y = 1)
  std::map<std::pair<std::string, std::size_t>, double> rates;

  static OutcomePolicy logistic_income(double lambda, double center);
  static OutcomePolicy logistic_decile(double center);
};

double logistic(double x);

// Two-class population over the given neighborhoods: class counts are exact
// (population * fraction must land on an integer; ConfigError otherwise),
// incomes are normal draws stored as the covariate, outcomes follow the
// policy. Derandomized: income := its mean and outcome := its probability,
// consuming no randomness. Record order is fixed: neighborhoods in spec
// order, advantaged block then disadvantaged block.
Dataset generate_neighborhoods(const std::vector<NeighborhoodSpec>& specs,
                               const LabelUniverse& universe,
                               const OutcomePolicy& policy, std::uint64_t seed,
                               bool derandomized);

enum class ToyPopulation { toy1, toy2 };

// The two 200-record worked examples: two tracts ("high", "low") with
// compositions (0.7, 0.3) / (0.3, 0.7) over classes {a, b}. toy1: outcome 1
// in the high tract and 0 in the low tract for everyone. toy2: favorable
// counts 49/70 (high a), 24/30 (high b), 6/30 (low a), 21/70 (low b).
Dataset toy_population(ToyPopulation which);

struct ExperimentParams {
  double d = 0.0;        // income shift between classes; in [-0.5, 0.5]
  double lambda = 1.0;   // outcome steepness; > 0
  bool derandomized = false;
};

// Three neighborhoods z1/z2/z3 with populations 3000/4000/5000, advantaged
// fractions 0.2/0.5/0.8, incomes Normal(base + class shift, 0.25) around
// bases (1, 2, 3), shifts +d (class a) and -d (class b), outcomes
// logistic_income(lambda, 2). d = 0 is the shared-income configuration
// where outcomes are class-independent given the neighborhood.
Dataset experiment_population(const ExperimentParams& params,
                              std::uint64_t seed);

enum class SweepKind { intra, inter };

struct SweepConfig {
  SweepKind kind = SweepKind::inter;  // intra varies d, inter varies lambda
  std::vector<double> grid;
  int reps = 30;
  double q = 0.75;
  std::uint64_t seed = 0;
  bool derandomized = false;
};

struct SweepRow {
  int rep = 0;
  std::uint64_t seed = 0;
  double delta_true = 0.0;
  double delta_thresholded = 0.0;
  double delta_weighted = 0.0;
  double delta1_adv = 0.0;
  double delta1_dis = 0.0;
  double delta2_adv = 0.0;
  double delta2_dis = 0.0;
};

struct SweepResult {
  double grid_value = 0.0;
  std::vector<SweepRow> rows;  // one per replication, in rep order
};

// Runs reps populations per grid value and evaluates the true, hard, and
// weighted disparities plus both groups' delta terms at the configured q.
// Deterministic given the config; rows ordered by (grid index, rep).
std::vector<SweepResult> sweep(const SweepConfig& config);

struct SemisyntheticResult {
  Dataset dataset;
  int distinct_deciles = 0;  // < 10 signals collapsed income deciles
};

// Buckets incomes into deciles (thresholds at sorted ranks floor(k*N/10),
// ties share a bucket), draws outcomes Bernoulli(logistic(decile - 5.5))
// (derandomized: the probability itself), and attaches exact per-decile
// class frequencies as the proxy. Outcomes depend on the decile only, so
// the class plays no role in them by construction. labels index the
// universe; ConfigError when inputs mismatch or hold fewer than 10 records.
SemisyntheticResult semisynthetic_decile(const std::vector<double>& incomes,
                                         const std::vector<std::size_t>& labels,
                                         const LabelUniverse& universe,
                                         std::uint64_t seed,
                                         bool derandomized);

struct SyntheticIncomes {
  std::vector<double> incomes;
  std::vector<std::size_t> labels;
  LabelUniverse universe;  // {a, b}
};

// Class-skewed income sample for the semisynthetic construction: n/2 class-a
// records Normal(55, 20^2) and n - n/2 class-b records Normal(45, 20^2).
SyntheticIncomes synthetic_incomes(std::int64_t n, std::uint64_t seed);

}  // namespace dispaudit
