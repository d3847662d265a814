// Copyright 2026 The stockgraph Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "stockgraph/market_data.hpp"
#include "stockgraph/model.hpp"
#include "stockgraph/pipeline.hpp"

namespace testing {

using namespace stockgraph;

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  }
  return m;
}

inline PriceBar bar(Date d, double open, double high, double low, double close, double volume = 1000.0,
                    double turnover = 50000.0) {
  return PriceBar{d, open, high, low, close, volume, turnover};
}

/// Weekdays starting 2024-01-01 (a Monday).
inline std::vector<Date> weekdays(int count) {
  std::vector<Date> out;
  Date d{2024, 1, 1};
  for (int i = 0; i < count; ++i) {
    out.push_back(d);
    d = d.next_weekday();
  }
  return out;
}

/// Dimensions small enough for exhaustive finite differences.
inline ModelConfig tiny_model(int lookback = 4, Ablation ablation = Ablation::kFull) {
  ModelConfig m;
  m.dims.lookback = lookback;
  m.dims.d_in = 4;
  m.dims.d_enc = 4;
  m.dims.d_hidden = 4;
  m.dims.d_v = 2;
  m.dims.h_enc = 2;
  m.dims.d_att = 4;
  m.dims.h_tga = 2;
  m.dims.d_q = 4;
  m.ablation = ablation;
  return m;
}

inline SyntheticMarketSpec tiny_market(int n_stocks = 8, int n_days = 40, int lookback = 4, std::uint64_t seed = 3) {
  SyntheticMarketSpec spec;
  spec.n_stocks = n_stocks;
  spec.n_days = n_days;
  spec.lookback = lookback;
  spec.seed = seed;
  spec.clusters = {{{0, 1, 2}, 0.9, false, 0.0}, {{3, 4}, -0.8, false, 0.0}};
  return spec;
}

/// One labeled day of a tiny synthetic market with both edge types present.
inline TrainingDay tiny_day(int day_index = 20, double threshold = 0.3) {
  const auto prices = gen_synthetic_market(tiny_market());
  const Date d = common_days(prices)[day_index];
  TrainingDay td;
  td.features = build_feature_window(prices, d, 4);
  td.snapshot = build_relation_snapshot(td.features, threshold);
  td.labels = label_day(next_day_returns(prices, d), 2, d);
  return td;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("stockgraph_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
