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

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stockgraph/date.hpp"

namespace stockgraph {

/// One trading day of a single stock.
struct PriceBar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;
  double turnover = 0.0;
};

/// Bars of one symbol, dates strictly increasing.
struct PriceSeries {
  std::string symbol;
  std::vector<PriceBar> bars;

  /// Index of the bar dated `day`, or -1.
  std::ptrdiff_t index_of(Date day) const;
};

/// Series keyed (and therefore ordered) by symbol.
using PriceTable = std::map<std::string, PriceSeries>;

inline constexpr int kFeatureChannels = 6;

/// Day-over-day ratio features of `n` symbols over the `lookback` days ending at `as_of`.
/// `data[i]` is a lookback x 6 matrix, rows oldest first, columns
/// open, high, low, close, volume, turnover.
struct FeatureWindow {
  Date as_of;
  std::vector<std::string> symbols;
  std::vector<Eigen::MatrixXd> data;

  int size() const { return static_cast<int>(symbols.size()); }
  int lookback() const { return data.empty() ? 0 : static_cast<int>(data.front().rows()); }
};

/// Throws ValidationError if a bar violates the price invariants.
void validate_bar(const PriceBar& bar, const std::string& symbol);

/// Reads `date,symbol,open,high,low,close,volume,turnover` rows.
PriceTable load_price_csv(const std::filesystem::path& path);

/// Writes the same format load_price_csv reads; values round-trip exactly.
void write_price_csv(const PriceTable& table, const std::filesystem::path& path);

/// A group of stocks whose log-returns share one factor.
///
/// With `lead_lag` set, `members.front()` is the leader: it loads on the cluster
/// factor on day t while the followers load on the day t-1 factor, and the
/// factor is AR(1) with coefficient `persistence`.
struct ClusterSpec {
  std::vector<int> members;
  double correlation = 0.0;
  bool lead_lag = false;
  double persistence = 0.0;
};

struct SyntheticMarketSpec {
  int n_stocks = 10;
  int n_days = 250;
  std::vector<ClusterSpec> clusters;
  std::uint64_t seed = 7;
  int lookback = 20;
  double volatility = 0.02;         // daily log-return stdev
  double volume_volatility = 0.2;   // daily log-volume shock stdev
  Date start{2020, 1, 1};
};

/// Throws ConfigError on overlapping clusters or out-of-range values.
void validate_synthetic_spec(const SyntheticMarketSpec& spec);

/// Geometric random walk market; members of a cluster get the requested
/// log-return correlation. Same spec, same output, bit for bit.
PriceTable gen_synthetic_market(const SyntheticMarketSpec& spec);

/// Symbol names used by the generator (`S000`, `S001`, ...).
std::string synthetic_symbol(int index);

/// Trading days present for every symbol in the table, ascending.
std::vector<Date> common_days(const PriceTable& table);

FeatureWindow build_feature_window(const PriceTable& series, std::span<const std::string> symbols,
                                   Date as_of, int lookback);

/// All symbols of the table, in table order.
FeatureWindow build_feature_window(const PriceTable& series, Date as_of, int lookback);

}  // namespace stockgraph
