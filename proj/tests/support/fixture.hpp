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

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "dispaudit/simulate.hpp"

namespace testsupport {

// Synthetic mortgage-audit extract shaped like public loan-level data:
// 11-digit census tract keys, coded action/race columns, two-decimal
// composition shares. Includes deliberate dirt: ten ragged rows, ~2%
// withdrawn actions, ~1% unknown tracts, and two composition rows whose
// shares sum to 0.9. Deterministic in the seed.
struct MortgageFixture {
  std::string records_csv;
  std::string composition_csv;
  std::string config_text;
  int data_rows = 0;
};

inline MortgageFixture make_mortgage_fixture(std::uint64_t seed,
                                             int rows = 10000) {
  dispaudit::Rng rng(seed);
  const int tract_count = 40;
  // Class order everywhere: white, black, api, hispanic (codes 5/3/2/1).
  const char* race_codes[4] = {"5", "3", "2", "1"};

  std::vector<std::string> tract_keys;
  std::vector<std::vector<double>> shares;  // exact, pre-rounding
  tract_keys.reserve(tract_count);
  shares.reserve(tract_count);
  for (int t = 0; t < tract_count; ++t) {
    char key[16];
    std::snprintf(key, sizeof key, "06037%06d", 100100 + t * 100);
    tract_keys.push_back(key);

    const int lead = t < 12 ? 0 : t < 24 ? 1 : t < 32 ? 2 : 3;
    const double lead_share = lead < 2 ? 0.65 + 0.23 * rng.uniform()
                                       : 0.55 + 0.2 * rng.uniform();
    double weights[4];
    double weight_sum = 0.0;
    for (int c = 0; c < 4; ++c) {
      weights[c] = c == lead ? 0.0 : 0.5 + rng.uniform();
      weight_sum += weights[c];
    }
    std::vector<double> row(4);
    for (int c = 0; c < 4; ++c) {
      row[c] = c == lead ? lead_share
                         : (1.0 - lead_share) * weights[c] / weight_sum;
    }
    shares.push_back(row);
  }

  MortgageFixture fixture;
  fixture.data_rows = rows;

  std::string comp = "census_tract,white,black,api,hispanic\n";
  for (int t = 0; t < tract_count; ++t) {
    comp += tract_keys[t];
    for (int c = 0; c < 4; ++c) {
      char buf[16];
      std::snprintf(buf, sizeof buf, ",%.2f", shares[t][c]);
      comp += buf;
    }
    comp += "\n";
  }
  // Two rows whose shares sum to 0.9: rejected by the tolerance policy.
  comp += "06037999100,0.40,0.30,0.10,0.10\n";
  comp += "06037999200,0.50,0.20,0.10,0.10\n";
  fixture.composition_csv = comp;

  std::string rec = "lei,census_tract,action_taken,derived_race,loan_amount\n";
  for (int i = 0; i < rows; ++i) {
    const bool unknown_tract = rng.uniform() < 0.01;
    const int t = static_cast<int>(rng.uniform() * tract_count);
    const std::string& tract =
        unknown_tract ? "06037999999" : tract_keys[t];

    const double u = rng.uniform();
    int race = 3;
    double cum = 0.0;
    for (int c = 0; c < 4; ++c) {
      cum += shares[t][c];
      if (u < cum) {
        race = c;
        break;
      }
    }

    const double bonus[4] = {0.1, -0.05, 0.05, 0.0};
    const double approve_p = std::clamp(
        0.35 + 0.3 * shares[t][0] + bonus[race], 0.05, 0.95);
    std::string action;
    if (rng.uniform() < 0.02) {
      action = "4";  // withdrawn: skipped by the column map
    } else if (rng.bernoulli(approve_p)) {
      action = rng.uniform() < 0.1 ? "2" : "1";
    } else {
      action = "3";
    }

    char lei[24];
    std::snprintf(lei, sizeof lei, "LEI%07d", i);
    const int amount = 50 + static_cast<int>(rng.uniform() * 950.0);

    rec += lei;
    rec += ',';
    rec += tract;
    rec += ',';
    rec += action;
    rec += ',';
    rec += race_codes[race];
    if (i % 1000 == 500) {
      // Ragged row: the amount column is missing entirely.
      rec += "\n";
    } else {
      rec += ',' + std::to_string(amount) + "\n";
    }
  }
  fixture.records_csv = rec;

  fixture.config_text =
      "# column map for the synthetic mortgage extract\n"
      "label.column = derived_race\n"
      "class.white = 5\n"
      "class.black = 3\n"
      "class.api = 2\n"
      "class.hispanic = 1\n";
  return fixture;
}

}  // namespace testsupport
