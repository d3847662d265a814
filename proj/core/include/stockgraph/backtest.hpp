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
#include <span>
#include <string>
#include <vector>

#include "stockgraph/market_data.hpp"
#include "stockgraph/model.hpp"

namespace stockgraph {

struct Fill {
  std::string symbol;
  double price = 0.0;
  double shares = 0.0;

  friend bool operator==(const Fill&, const Fill&) = default;
};

/// One trading decision: chosen at the close of `signal_day`, entered at the
/// open of `entry_day` (the record date), exited at the open of `exit_day`.
struct LedgerDay {
  Date signal_day;
  Date entry_day;
  Date exit_day;
  std::vector<std::string> selected;  // best score first
  std::vector<Fill> buys;             // at the entry_day open
  std::vector<Fill> sells;            // earlier positions not re-selected, at the entry_day open
  std::vector<std::string> held;      // re-selected positions carried without a fill
  std::vector<double> slot_returns;   // open-to-open, aligned with `selected`
  double portfolio_return = 0.0;
  double benchmark_return = 0.0;
  double cumulative = 0.0;            // running sum of portfolio_return
  double benchmark_cumulative = 0.0;

  friend bool operator==(const LedgerDay&, const LedgerDay&) = default;
};

struct BacktestLedger {
  int k = 0;
  double daily_capital = 0.0;
  std::vector<LedgerDay> days;

  std::vector<double> returns() const;
  std::vector<double> benchmark_returns() const;
};

struct MetricsReport {
  double acc = 0.0;
  double arr = 0.0;
  double av = 0.0;
  double mdd = 0.0;
  double asr = 0.0;
  double cr = 0.0;
  double ir = 0.0;
  bool asr_degenerate = false;  // AV == 0
  bool cr_degenerate = false;   // MDD == 0
  bool ir_degenerate = false;   // excess-return stdev == 0
  int n_days = 0;
};

inline constexpr double kTradingDaysPerYear = 252.0;

/// Daily buy-hold-sell protocol: top-k by score (ties by ascending symbol), equal
/// capital per slot, open-to-open returns, no costs. Scored days are processed
/// in date order; entry and exit are the next two trading days in the price table.
BacktestLedger run_backtest(std::span<const PredictionScores> scores, const PriceTable& prices, int k,
                            double daily_capital);

/// Mean over days of the fraction of labeled symbols with (score >= 0.5) == label.
double accuracy(std::span<const PredictionScores> scores, std::span<const DayLabels> labels);

/// Most negative gap between the additive cumulative curve and its running maximum (<= 0).
double max_drawdown(std::span<const double> daily_returns);

MetricsReport compute_metrics(std::span<const double> daily_returns, std::span<const double> benchmark_returns);
MetricsReport compute_metrics(const BacktestLedger& ledger, std::span<const double> benchmark_returns);

/// Writes metrics.json, daily_returns.csv and cumulative.csv into `out_dir`.
void write_report(const BacktestLedger& ledger, const MetricsReport& metrics, const std::filesystem::path& out_dir);

std::string metrics_to_json(const MetricsReport& metrics);
MetricsReport metrics_from_json(const std::string& text);

struct DailyReturnRow {
  Date day;
  double strategy = 0.0;
  double benchmark = 0.0;
};
std::vector<DailyReturnRow> read_daily_returns(const std::filesystem::path& path);

void write_ledger_csv(const BacktestLedger& ledger, const std::filesystem::path& path);

/// `day,symbol,score` rows.
void write_scores_csv(std::span<const PredictionScores> scores, const std::filesystem::path& path);
std::vector<PredictionScores> read_scores_csv(const std::filesystem::path& path);

/// `day,relation,head,u,v,alpha` rows with symbols for u and v.
void write_attention_csv(std::span<const PredictionScores> scores, const std::filesystem::path& path);

/// `day,beta_self,beta_pos,beta_neg` rows.
void write_betas_csv(std::span<const PredictionScores> scores, const std::filesystem::path& path);

}  // namespace stockgraph
