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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stockgraph/market_data.hpp"
#include "stockgraph/model.hpp"
#include "stockgraph/trainer.hpp"

namespace stockgraph {

enum class DataSource { kSynthetic, kCsv };

/// Everything one pipeline run needs. Defaults follow the reference setup
/// (lookback 20, threshold 0.6, d_in = d_enc = 128, ...).
struct PipelineConfig {
  DataSource source = DataSource::kSynthetic;
  std::filesystem::path csv_path;
  SyntheticMarketSpec synthetic;

  double threshold = 0.6;
  int hop_bound = 1;   // d_N
  int time_bound = 1;  // t_N, neighborhood queries only; attention uses same-day neighbors

  ModelConfig model;
  TrainConfig train;
  int label_k = 0;  // 0: max(1, n / 5)

  double train_fraction = 0.7;
  double validation_fraction = 0.1;
  bool rolling_retrain = false;
  int retrain_epochs = 1;

  int backtest_k = 0;  // 0: max(1, n / 10)
  double daily_capital = 50000.0;

  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 42;

  /// Throws ConfigError naming the field and its bound.
  void validate() const;
  /// Stable JSON rendering of every resolved field except output_dir.
  std::string canonical() const;
  std::uint64_t hash() const;

  int resolved_label_k(int n_symbols) const;
  int resolved_backtest_k(int n_symbols) const;
};

/// Parses a flat YAML mapping; an empty document yields the defaults.
PipelineConfig parse_config(std::string_view yaml_text);

/// Reads, defaults and validates a config file.
PipelineConfig validate_config(const std::filesystem::path& path);

/// Applies one `key=value` override (value parsed as YAML) and revalidates.
void apply_override(PipelineConfig& config, std::string_view assignment);

}  // namespace stockgraph
