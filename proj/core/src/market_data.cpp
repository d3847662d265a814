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

#include "stockgraph/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "stockgraph/errors.hpp"
#include "text.hpp"

namespace stockgraph {

namespace {

constexpr std::string_view kCsvHeader = "date,symbol,open,high,low,close,volume,turnover";

double ratio_feature(double value, double base) { return base == 0.0 ? 0.0 : value / base - 1.0; }

}  // namespace

std::ptrdiff_t PriceSeries::index_of(Date day) const {
  auto it = std::lower_bound(bars.begin(), bars.end(), day,
                             [](const PriceBar& b, Date d) { return b.date < d; });
  if (it == bars.end() || it->date != day) return -1;
  return it - bars.begin();
}

void validate_bar(const PriceBar& bar, const std::string& symbol) {
  const auto where = [&] { return symbol + " on " + bar.date.iso(); };
  for (double p : {bar.open, bar.high, bar.low, bar.close}) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ValidationError("non-positive price for " + where());
  }
  if (!(bar.volume >= 0.0) || !(bar.turnover >= 0.0) || !std::isfinite(bar.volume) ||
      !std::isfinite(bar.turnover)) {
    throw ValidationError("negative volume or turnover for " + where());
  }
  if (bar.low > std::min(bar.open, bar.close) || bar.high < std::max(bar.open, bar.close)) {
    throw ValidationError("high/low range does not cover open and close for " + where());
  }
}

PriceTable load_price_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open price file " + path.string());

  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || detail::trim(line) != kCsvHeader) {
    throw ParseError("expected header '" + std::string(kCsvHeader) + "'", line_no);
  }

  PriceTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(detail::trim(line), ',');
    if (fields.size() != 8) throw ParseError("expected 8 fields, got " + std::to_string(fields.size()), line_no);

    PriceBar bar;
    try {
      bar.date = Date::parse(detail::trim(fields[0]));
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
    const std::string symbol(detail::trim(fields[1]));
    if (symbol.empty()) throw ParseError("empty symbol", line_no);
    double* targets[] = {&bar.open, &bar.high, &bar.low, &bar.close, &bar.volume, &bar.turnover};
    for (int f = 0; f < 6; ++f) {
      if (!detail::parse_double(detail::trim(fields[2 + f]), *targets[f])) {
        throw ParseError("malformed number '" + std::string(fields[2 + f]) + "'", line_no);
      }
    }
    try {
      validate_bar(bar, symbol);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }

    auto& series = table[symbol];
    series.symbol = symbol;
    series.bars.push_back(bar);
  }

  for (auto& [symbol, series] : table) {
    std::stable_sort(series.bars.begin(), series.bars.end(),
                     [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < series.bars.size(); ++i) {
      if (series.bars[i].date == series.bars[i - 1].date) {
        throw DuplicateError("duplicate row for " + symbol + " on " + series.bars[i].date.iso());
      }
    }
  }
  return table;
}

void write_price_csv(const PriceTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << kCsvHeader << '\n';
  for (const auto& [symbol, series] : table) {
    for (const auto& b : series.bars) {
      out << b.date.iso() << ',' << symbol << ',' << detail::format_double(b.open) << ','
          << detail::format_double(b.high) << ',' << detail::format_double(b.low) << ','
          << detail::format_double(b.close) << ',' << detail::format_double(b.volume) << ','
          << detail::format_double(b.turnover) << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::string synthetic_symbol(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "S%03d", index);
  return buf;
}

void validate_synthetic_spec(const SyntheticMarketSpec& spec) {
  if (spec.n_stocks < 1) throw ConfigError("n_stocks must be >= 1");
  if (spec.lookback < 1) throw ConfigError("lookback must be >= 1");
  if (spec.n_days < 2 * spec.lookback) {
    throw ConfigError("n_days must be >= 2 * lookback (" + std::to_string(2 * spec.lookback) + ")");
  }
  if (!(spec.volatility > 0.0) || !(spec.volume_volatility >= 0.0)) {
    throw ConfigError("volatility must be positive");
  }
  std::vector<bool> taken(spec.n_stocks, false);
  for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
    const auto& cl = spec.clusters[c];
    const auto tag = "cluster " + std::to_string(c);
    if (!(cl.correlation >= -1.0 && cl.correlation <= 1.0)) throw ConfigError(tag + " correlation outside [-1, 1]");
    if (cl.members.size() < 2) throw ConfigError(tag + " needs >= 2 members");
    if (cl.correlation < 0.0 && cl.members.size() != 2) {
      throw ConfigError(tag + ": a negative target correlation needs exactly 2 members");
    }
    if (cl.lead_lag && !(cl.persistence >= 0.0 && cl.persistence < 1.0)) {
      throw ConfigError(tag + " persistence outside [0, 1)");
    }
    for (int i : cl.members) {
      if (i < 0 || i >= spec.n_stocks) throw ConfigError(tag + " member " + std::to_string(i) + " out of range");
      if (taken[i]) throw ConfigError("stock " + std::to_string(i) + " belongs to overlapping clusters");
      taken[i] = true;
    }
  }
}

PriceTable gen_synthetic_market(const SyntheticMarketSpec& spec) {
  validate_synthetic_spec(spec);

  // Per stock: owning cluster, factor loading and whether it reads the lagged factor.
  const int n = spec.n_stocks;
  std::vector<int> cluster_of(n, -1);
  std::vector<double> loading(n, 0.0);
  std::vector<bool> lagged(n, false);
  for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
    const auto& cl = spec.clusters[c];
    for (std::size_t m = 0; m < cl.members.size(); ++m) {
      const int i = cl.members[m];
      cluster_of[i] = static_cast<int>(c);
      const double sign = (cl.correlation < 0.0 && m == 1) ? -1.0 : 1.0;
      loading[i] = sign * std::sqrt(std::abs(cl.correlation));
      lagged[i] = cl.lead_lag && m > 0;
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  PriceTable table;
  std::vector<double> prev_close(n), base_volume(n), log_volume(n, 0.0);
  for (int i = 0; i < n; ++i) {
    prev_close[i] = 20.0 + 180.0 * uniform(rng);
    base_volume[i] = 1e5 + 9e5 * uniform(rng);
    auto& s = table[synthetic_symbol(i)];
    s.symbol = synthetic_symbol(i);
    s.bars.reserve(spec.n_days);
  }

  const std::size_t n_clusters = spec.clusters.size();
  std::vector<double> factor(n_clusters), lagged_factor(n_clusters), volume_factor(n_clusters);
  for (std::size_t c = 0; c < n_clusters; ++c) factor[c] = normal(rng);

  const double sigma = spec.volatility;
  Date day = spec.start;
  const std::chrono::weekday wd{day.days()};
  if (wd == std::chrono::Saturday || wd == std::chrono::Sunday) day = day.next_weekday();

  for (int t = 0; t < spec.n_days; ++t) {
    for (std::size_t c = 0; c < n_clusters; ++c) {
      lagged_factor[c] = factor[c];
      const auto& cl = spec.clusters[c];
      if (cl.lead_lag) {
        const double phi = cl.persistence;
        factor[c] = phi * factor[c] + std::sqrt(1.0 - phi * phi) * normal(rng);
      } else {
        factor[c] = normal(rng);
      }
      volume_factor[c] = normal(rng);
    }

    for (int i = 0; i < n; ++i) {
      const double eps = normal(rng);
      const double eps_volume = normal(rng);
      const double gap_noise = normal(rng);
      const double high_noise = normal(rng);
      const double low_noise = normal(rng);

      double z = eps, zv = eps_volume;
      if (const int c = cluster_of[i]; c >= 0) {
        const double idio = std::sqrt(1.0 - std::abs(spec.clusters[c].correlation));
        z = loading[i] * (lagged[i] ? lagged_factor[c] : factor[c]) + idio * eps;
        zv = loading[i] * volume_factor[c] + idio * eps_volume;
      }

      const double r = sigma * z;
      PriceBar bar;
      bar.date = day;
      bar.close = prev_close[i] * std::exp(r);
      bar.open = prev_close[i] * std::exp(0.5 * r + 0.1 * sigma * gap_noise);
      bar.high = std::max(bar.open, bar.close) * std::exp(0.25 * sigma * std::abs(high_noise));
      bar.low = std::min(bar.open, bar.close) * std::exp(-0.25 * sigma * std::abs(low_noise));
      log_volume[i] = 0.5 * log_volume[i] + spec.volume_volatility * zv;
      bar.volume = base_volume[i] * std::exp(log_volume[i]);
      bar.turnover = bar.volume * 0.25 * (bar.open + bar.high + bar.low + bar.close);
      table[synthetic_symbol(i)].bars.push_back(bar);
      prev_close[i] = bar.close;
    }
    day = day.next_weekday();
  }
  return table;
}

std::vector<Date> common_days(const PriceTable& table) {
  if (table.empty()) return {};
  std::vector<Date> days;
  for (const auto& b : table.begin()->second.bars) days.push_back(b.date);
  for (const auto& [symbol, series] : table) {
    std::vector<Date> mine;
    for (const auto& b : series.bars) mine.push_back(b.date);
    std::vector<Date> both;
    std::set_intersection(days.begin(), days.end(), mine.begin(), mine.end(), std::back_inserter(both));
    days = std::move(both);
  }
  return days;
}

FeatureWindow build_feature_window(const PriceTable& series, std::span<const std::string> symbols,
                                   Date as_of, int lookback) {
  if (lookback < 1) throw DimensionError("lookback must be >= 1");
  FeatureWindow window;
  window.as_of = as_of;
  window.symbols.assign(symbols.begin(), symbols.end());
  window.data.reserve(symbols.size());

  std::vector<std::string> short_symbols;
  for (const auto& symbol : symbols) {
    auto it = series.find(symbol);
    const std::ptrdiff_t idx = it == series.end() ? -1 : it->second.index_of(as_of);
    if (idx < lookback) {
      short_symbols.push_back(symbol);
      continue;
    }
    const auto& bars = it->second.bars;
    Eigen::MatrixXd m(lookback, kFeatureChannels);
    for (int p = 0; p < lookback; ++p) {
      const PriceBar& cur = bars[idx - lookback + 1 + p];
      const PriceBar& prev = bars[idx - lookback + p];
      m(p, 0) = cur.open / prev.close - 1.0;
      m(p, 1) = cur.high / prev.close - 1.0;
      m(p, 2) = cur.low / prev.close - 1.0;
      m(p, 3) = cur.close / prev.close - 1.0;
      m(p, 4) = ratio_feature(cur.volume, prev.volume);
      m(p, 5) = ratio_feature(cur.turnover, prev.turnover);
    }
    window.data.push_back(std::move(m));
  }
  if (!short_symbols.empty()) {
    std::string list;
    for (const auto& s : short_symbols) list += (list.empty() ? "" : ", ") + s;
    throw CoverageError("fewer than " + std::to_string(lookback + 1) + " bars ending at " + as_of.iso() +
                        " for: " + list);
  }
  return window;
}

FeatureWindow build_feature_window(const PriceTable& series, Date as_of, int lookback) {
  std::vector<std::string> symbols;
  symbols.reserve(series.size());
  for (const auto& [symbol, s] : series) symbols.push_back(symbol);
  return build_feature_window(series, symbols, as_of, lookback);
}

}  // namespace stockgraph
