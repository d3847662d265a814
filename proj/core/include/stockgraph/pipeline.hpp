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

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stockgraph/backtest.hpp"
#include "stockgraph/config.hpp"
#include "stockgraph/graph.hpp"
#include "stockgraph/market_data.hpp"
#include "stockgraph/trainer.hpp"

namespace stockgraph {

/// Chronological partition of the usable days.
struct DaySplit {
  std::vector<Date> train;
  std::vector<Date> validation;
  std::vector<Date> test;
};

/// Common days with a full lookback window behind them and two more trading
/// days ahead (label close, entry open, exit open).
std::vector<Date> usable_days(const PriceTable& prices, int lookback);

/// Splits by the configured fractions; each part keeps at least one day.
DaySplit split_days(std::span<const Date> days, double train_fraction, double validation_fraction);

/// close(t+1) / close(t) - 1 for every symbol.
std::map<std::string, double> next_day_returns(const PriceTable& prices, Date day);

std::vector<TrainingDay> make_training_days(const PriceTable& prices, const TemporalHeteroGraph& graph,
                                            std::span<const Date> days, int lookback, int label_k);

/// Scores `days` in order. With rolling retrain, each scored day's labels are
/// used for `retrain_epochs` of fine-tuning before the next day is scored.
std::vector<PredictionScores> predict_days(const PriceTable& prices, const TemporalHeteroGraph& graph,
                                           std::span<const Date> days, const ModelParams& params,
                                           const PipelineConfig& config);

std::vector<DayLabels> labels_for(const PriceTable& prices, std::span<const Date> days, int label_k);

struct PipelineResult {
  DaySplit split;
  TrainResult training;
  std::vector<PredictionScores> scores;  // test days
  BacktestLedger ledger;
  MetricsReport metrics;
  double train_acc = 0.0;
  double validation_acc = 0.0;
  double test_acc = 0.0;
};

/// The whole pipeline in memory on a given price table.
PipelineResult run_pipeline(const PriceTable& prices, const PipelineConfig& config);

PriceTable load_prices(const PipelineConfig& config);

/// File-backed stages under config.output_dir. Each writes its artifacts,
/// updates manifest.json and logs its seed and config hash to `log`.
void stage_gen_data(const PipelineConfig& config, std::ostream& log);
void stage_build_graphs(const PipelineConfig& config, std::ostream& log);
void stage_train(const PipelineConfig& config, std::ostream& log);
void stage_predict(const PipelineConfig& config, std::ostream& log);
void stage_backtest(const PipelineConfig& config, std::ostream& log);
/// Recomputes metrics from daily_returns.csv and scores.csv, writes summary.txt and prints it to `out`.
void stage_report(const PipelineConfig& config, std::ostream& log, std::ostream& out);
void run_all(const PipelineConfig& config, std::ostream& log, std::ostream& out);

/// 16 hex digits of the FNV-1a hash of a file's bytes.
std::string file_hash(const std::filesystem::path& path);

}  // namespace stockgraph
