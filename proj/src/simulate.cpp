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

#include "dispaudit/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dispaudit/bias.hpp"
#include "dispaudit/estimators.hpp"
#include "dispaudit/proxy.hpp"

namespace dispaudit {

double Rng::uniform() {
  // Top 53 bits scaled into [0, 1); every double is exactly representable.
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean, double stddev) {
  // Box-Muller cosine branch; two fresh uniforms per draw, no cached state.
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
  return mean + stddev * radius * std::cos(2.0 * std::numbers::pi * u2);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

std::uint64_t splitmix64(std::uint64_t state) {
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t replication_seed(std::uint64_t base_seed, int rep) {
  constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  return splitmix64(base_seed +
                    (static_cast<std::uint64_t>(rep) + 1) * kGolden);
}

OutcomePolicy OutcomePolicy::logistic_income(double lambda, double center) {
  OutcomePolicy policy;
  policy.kind = Kind::logistic_income;
  policy.lambda = lambda;
  policy.center = center;
  return policy;
}

OutcomePolicy OutcomePolicy::logistic_decile(double center) {
  OutcomePolicy policy;
  policy.kind = Kind::logistic_decile;
  policy.center = center;
  return policy;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

double outcome_rate(const OutcomePolicy& policy, const std::string& key,
                    std::size_t class_idx, double x) {
  switch (policy.kind) {
    case OutcomePolicy::Kind::logistic_income:
      return logistic(policy.lambda * (x - policy.center));
    case OutcomePolicy::Kind::logistic_decile:
      return logistic(x - policy.center);
    case OutcomePolicy::Kind::table_rate: {
      const auto it = policy.rates.find({key, class_idx});
      if (it == policy.rates.end()) {
        throw ConfigError("no outcome rate for key '" + key + "', class " +
                          std::to_string(class_idx));
      }
      return it->second;
    }
  }
  throw ConfigError("unknown outcome policy kind");
}

std::int64_t exact_count(const NeighborhoodSpec& spec) {
  const double expected = spec.population * spec.adv_fraction;
  const std::int64_t count = std::llround(expected);
  if (std::abs(expected - static_cast<double>(count)) > 1e-9) {
    throw ConfigError("neighborhood '" + spec.key +
                      "': population * adv_fraction must be an integer");
  }
  return count;
}

}  // namespace

Dataset generate_neighborhoods(const std::vector<NeighborhoodSpec>& specs,
                               const LabelUniverse& universe,
                               const OutcomePolicy& policy, std::uint64_t seed,
                               bool derandomized) {
  if (universe.size() != 2) {
    throw ConfigError("neighborhood generation is two-class; universe has " +
                      std::to_string(universe.size()));
  }
  if (policy.kind == OutcomePolicy::Kind::logistic_income &&
      !(policy.lambda > 0.0)) {
    throw ConfigError("outcome steepness lambda must be > 0");
  }
  Dataset dataset;
  dataset.universe = universe;
  Rng rng(seed);
  for (const NeighborhoodSpec& spec : specs) {
    if (spec.population < 1) {
      throw ConfigError("neighborhood '" + spec.key +
                        "' must have population >= 1");
    }
    if (!(spec.adv_fraction >= 0.0) || !(spec.adv_fraction <= 1.0)) {
      throw ConfigError("neighborhood '" + spec.key +
                        "': adv_fraction must lie in [0,1]");
    }
    if (spec.income_mean_by_class.size() != universe.size()) {
      throw ConfigError("neighborhood '" + spec.key +
                        "': one income mean per class required");
    }
    if (!(spec.income_variance >= 0.0)) {
      throw ConfigError("neighborhood '" + spec.key +
                        "': income variance must be >= 0");
    }
    const std::int64_t count_adv = exact_count(spec);
    const std::int64_t counts[2] = {count_adv, spec.population - count_adv};
    const double stddev = std::sqrt(spec.income_variance);
    const ProxyDistribution proxy{
        {spec.adv_fraction, 1.0 - spec.adv_fraction}};
    for (std::size_t cls = 0; cls < 2; ++cls) {
      const double mean = spec.income_mean_by_class[cls];
      for (std::int64_t i = 0; i < counts[cls]; ++i) {
        AuditRecord record;
        record.proxy = proxy;
        record.true_class = cls;
        record.proxy_key = spec.key;
        const double income =
            derandomized ? mean : rng.normal(mean, stddev);
        record.covariate = income;
        const double rate = outcome_rate(policy, spec.key, cls, income);
        record.outcome =
            derandomized ? rate : (rng.bernoulli(rate) ? 1.0 : 0.0);
        dataset.records.push_back(std::move(record));
      }
    }
  }
  return dataset;
}

Dataset toy_population(ToyPopulation which) {
  Dataset dataset;
  dataset.universe = LabelUniverse({"a", "b"});
  const ProxyDistribution high_proxy{{0.7, 0.3}};
  const ProxyDistribution low_proxy{{0.3, 0.7}};

  struct Cell {
    const char* key;
    const ProxyDistribution* proxy;
    std::size_t cls;
    std::int64_t favorable;
    std::int64_t total;
  };
  // Favorable counts per (tract, class) cell; the first worked example
  // approves everyone in the high tract, the second mixes rates.
  const std::vector<Cell> cells =
      which == ToyPopulation::toy1
          ? std::vector<Cell>{{"high", &high_proxy, 0, 70, 70},
                              {"high", &high_proxy, 1, 30, 30},
                              {"low", &low_proxy, 0, 0, 30},
                              {"low", &low_proxy, 1, 0, 70}}
          : std::vector<Cell>{{"high", &high_proxy, 0, 49, 70},
                              {"high", &high_proxy, 1, 24, 30},
                              {"low", &low_proxy, 0, 6, 30},
                              {"low", &low_proxy, 1, 21, 70}};
  for (const Cell& cell : cells) {
    for (std::int64_t i = 0; i < cell.total; ++i) {
      AuditRecord record;
      record.outcome = i < cell.favorable ? 1.0 : 0.0;
      record.proxy = *cell.proxy;
      record.true_class = cell.cls;
      record.proxy_key = cell.key;
      dataset.records.push_back(std::move(record));
    }
  }
  return dataset;
}

Dataset experiment_population(const ExperimentParams& params,
                              std::uint64_t seed) {
  if (!(params.d >= -0.5) || !(params.d <= 0.5)) {
    throw ConfigError("income shift d must lie in [-0.5, 0.5]");
  }
  if (!(params.lambda > 0.0)) {
    throw ConfigError("outcome steepness lambda must be > 0");
  }
  const double d = params.d;
  const std::vector<NeighborhoodSpec> specs = {
      {"z1", 3000, 0.2, {1.0 + d, 1.0 - d}, 0.25},
      {"z2", 4000, 0.5, {2.0 + d, 2.0 - d}, 0.25},
      {"z3", 5000, 0.8, {3.0 + d, 3.0 - d}, 0.25},
  };
  return generate_neighborhoods(
      specs, LabelUniverse({"a", "b"}),
      OutcomePolicy::logistic_income(params.lambda, 2.0), seed,
      params.derandomized);
}

std::vector<SweepResult> sweep(const SweepConfig& config) {
  if (config.grid.empty()) {
    throw ConfigError("sweep grid must be nonempty");
  }
  if (config.reps < 1) {
    throw ConfigError("sweep needs reps >= 1");
  }
  const ThresholdPolicy policy(config.q);
  std::vector<SweepResult> results;
  results.reserve(config.grid.size());
  for (double grid_value : config.grid) {
    SweepResult result;
    result.grid_value = grid_value;
    result.rows.reserve(config.reps);
    for (int rep = 0; rep < config.reps; ++rep) {
      // The rep seed ignores the grid value on purpose: every grid point
      // sees the same random numbers, isolating the parameter effect.
      const std::uint64_t seed = replication_seed(config.seed, rep);
      ExperimentParams params;
      params.derandomized = config.derandomized;
      if (config.kind == SweepKind::intra) {
        params.d = grid_value;
        params.lambda = 1.0;
      } else {
        params.d = 0.0;
        params.lambda = grid_value;
      }
      const Dataset dataset = experiment_population(params, seed);

      SweepRow row;
      row.rep = rep;
      row.seed = seed;
      row.delta_true = true_disparity(dataset, "a", "b");
      row.delta_thresholded =
          thresholded_estimate(dataset, policy, "a", "b").disparity;
      row.delta_weighted = weighted_estimate(dataset, "a", "b").disparity;
      const DeltaTerms adv = delta_terms(dataset, policy, "a", "b");
      const DeltaTerms dis = delta_terms(dataset, policy, "b", "a");
      row.delta1_adv = adv.delta1;
      row.delta2_adv = adv.delta2;
      row.delta1_dis = dis.delta1;
      row.delta2_dis = dis.delta2;
      result.rows.push_back(row);
    }
    results.push_back(std::move(result));
  }
  return results;
}

SemisyntheticResult semisynthetic_decile(const std::vector<double>& incomes,
                                         const std::vector<std::size_t>& labels,
                                         const LabelUniverse& universe,
                                         std::uint64_t seed,
                                         bool derandomized) {
  if (incomes.size() != labels.size()) {
    throw ConfigError("incomes and labels must have equal length");
  }
  if (incomes.size() < 10) {
    throw ConfigError("decile construction needs at least 10 records");
  }
  for (std::size_t label : labels) {
    if (label >= universe.size()) {
      throw ConfigError("label index " + std::to_string(label) +
                        " outside the universe");
    }
  }

  // Decile thresholds at sorted ranks floor(k*N/10). Assignment is by value
  // comparison, so tied incomes always share a bucket and the bucket stays
  // a pure function of income.
  std::vector<double> sorted = incomes;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  double thresholds[9];
  for (std::size_t k = 1; k <= 9; ++k) {
    thresholds[k - 1] = sorted[k * n / 10];
  }
  auto decile_of = [&thresholds](double income) {
    int decile = 1;
    for (double threshold : thresholds) {
      if (income >= threshold) {
        ++decile;
      }
    }
    return decile;
  };

  Dataset dataset;
  dataset.universe = universe;
  dataset.records.reserve(n);
  Rng rng(seed);
  bool seen[10] = {};
  for (std::size_t i = 0; i < n; ++i) {
    const int decile = decile_of(incomes[i]);
    seen[decile - 1] = true;
    AuditRecord record;
    record.covariate = incomes[i];
    record.true_class = labels[i];
    char key[4] = {'d', static_cast<char>('0' + decile / 10),
                   static_cast<char>('0' + decile % 10), '\0'};
    record.proxy_key = key;
    const double rate = logistic(decile - 5.5);
    record.outcome = derandomized ? rate : (rng.bernoulli(rate) ? 1.0 : 0.0);
    dataset.records.push_back(std::move(record));
  }

  SemisyntheticResult result;
  result.dataset = plugin_proxy(dataset);
  result.distinct_deciles = 0;
  for (bool s : seen) {
    result.distinct_deciles += s ? 1 : 0;
  }
  return result;
}

SyntheticIncomes synthetic_incomes(std::int64_t n, std::uint64_t seed) {
  if (n < 2) {
    throw ConfigError("need at least 2 records, one per class");
  }
  SyntheticIncomes out;
  out.universe = LabelUniverse({"a", "b"});
  out.incomes.reserve(n);
  out.labels.reserve(n);
  // splitmix64 image keeps this stream disjoint from the outcome stream
  // when the same base seed feeds both this and the decile construction.
  Rng rng(splitmix64(seed));
  const std::int64_t count_a = n / 2;
  for (std::int64_t i = 0; i < n; ++i) {
    const bool is_a = i < count_a;
    out.incomes.push_back(rng.normal(is_a ? 55.0 : 45.0, 20.0));
    out.labels.push_back(is_a ? 0 : 1);
  }
  return out;
}

}  // namespace dispaudit
