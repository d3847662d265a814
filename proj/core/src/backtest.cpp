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

#include "stockgraph/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stockgraph/errors.hpp"
#include "text.hpp"

namespace stockgraph {

namespace {

double open_on(const PriceTable& prices, const std::string& symbol, Date day) {
  auto it = prices.find(symbol);
  const auto idx = it == prices.end() ? -1 : it->second.index_of(day);
  if (idx < 0) throw CoverageError("no open price for " + symbol + " on " + day.iso());
  return it->second.bars[idx].open;
}

bool has_bar(const PriceTable& prices, const std::string& symbol, Date day) {
  auto it = prices.find(symbol);
  return it != prices.end() && it->second.index_of(day) >= 0;
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Population standard deviation; exactly 0 for a constant series.
double stdev_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (*lo == *hi) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : " ") + x;
  return out;
}

std::string join(const std::vector<Fill>& fills) {
  std::string out;
  for (const auto& f : fills) {
    out += (out.empty() ? "" : " ") + f.symbol + "@" + detail::format_double(f.price) + "x" +
           detail::format_double(f.shares);
  }
  return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<double> BacktestLedger::returns() const {
  std::vector<double> out;
  for (const auto& d : days) out.push_back(d.portfolio_return);
  return out;
}

std::vector<double> BacktestLedger::benchmark_returns() const {
  std::vector<double> out;
  for (const auto& d : days) out.push_back(d.benchmark_return);
  return out;
}

BacktestLedger run_backtest(std::span<const PredictionScores> scores, const PriceTable& prices, int k,
                            double daily_capital) {
  if (k < 0) throw ConfigError("top-k must be >= 0");
  if (!(daily_capital > 0.0)) throw ConfigError("daily capital must be positive");

  std::set<Date> calendar_set;
  for (const auto& [symbol, series] : prices) {
    for (const auto& b : series.bars) calendar_set.insert(b.date);
  }
  const std::vector<Date> calendar(calendar_set.begin(), calendar_set.end());
  const auto next_day = [&](Date d) {
    auto it = std::upper_bound(calendar.begin(), calendar.end(), d);
    if (it == calendar.end()) throw CoverageError("no trading day after " + d.iso());
    return *it;
  };

  std::vector<const PredictionScores*> ordered;
  for (const auto& s : scores) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->day < b->day; });

  BacktestLedger ledger;
  ledger.k = k;
  ledger.daily_capital = daily_capital;
  std::map<std::string, double> positions;  // symbol -> shares held into the next record
  Date positions_exit{};

  for (const auto* day_scores : ordered) {
    if (day_scores->symbols.size() != day_scores->scores.size()) {
      throw AlignmentError("scores of " + day_scores->day.iso() + " do not align with symbols");
    }
    LedgerDay rec;
    rec.signal_day = day_scores->day;
    rec.entry_day = next_day(rec.signal_day);
    rec.exit_day = next_day(rec.entry_day);

    std::vector<std::size_t> order(day_scores->symbols.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (day_scores->scores[a] != day_scores->scores[b]) return day_scores->scores[a] > day_scores->scores[b];
      return day_scores->symbols[a] < day_scores->symbols[b];
    });
    const std::size_t slots = std::min(order.size(), static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < slots; ++i) rec.selected.push_back(day_scores->symbols[order[i]]);

    const bool continuous = !positions.empty() && positions_exit == rec.entry_day;
    std::map<std::string, double> next_positions;
    for (const auto& symbol : rec.selected) {
      const double entry = open_on(prices, symbol, rec.entry_day);
      const double exit = open_on(prices, symbol, rec.exit_day);
      rec.slot_returns.push_back(exit / entry - 1.0);
      if (continuous && positions.count(symbol)) {
        rec.held.push_back(symbol);
        next_positions[symbol] = positions[symbol];
      } else {
        const double shares = daily_capital / static_cast<double>(slots) / entry;
        rec.buys.push_back({symbol, entry, shares});
        next_positions[symbol] = shares;
      }
    }
    for (const auto& [symbol, shares] : positions) {
      if (continuous && next_positions.count(symbol)) continue;
      rec.sells.push_back({symbol, open_on(prices, symbol, positions_exit), shares});
    }
    positions = std::move(next_positions);
    positions_exit = rec.exit_day;

    rec.portfolio_return = mean_of(rec.slot_returns);
    std::vector<double> universe;
    for (const auto& symbol : day_scores->symbols) {
      if (has_bar(prices, symbol, rec.entry_day) && has_bar(prices, symbol, rec.exit_day)) {
        universe.push_back(open_on(prices, symbol, rec.exit_day) / open_on(prices, symbol, rec.entry_day) - 1.0);
      }
    }
    rec.benchmark_return = mean_of(universe);
    const double prev_cum = ledger.days.empty() ? 0.0 : ledger.days.back().cumulative;
    const double prev_bench = ledger.days.empty() ? 0.0 : ledger.days.back().benchmark_cumulative;
    rec.cumulative = prev_cum + rec.portfolio_return;
    rec.benchmark_cumulative = prev_bench + rec.benchmark_return;
    ledger.days.push_back(std::move(rec));
  }
  return ledger;
}

double accuracy(std::span<const PredictionScores> scores, std::span<const DayLabels> labels) {
  std::map<Date, const DayLabels*> by_day;
  for (const auto& l : labels) by_day[l.day] = &l;
  if (scores.empty()) return 0.0;

  double total = 0.0;
  for (const auto& s : scores) {
    auto it = by_day.find(s.day);
    if (it == by_day.end()) throw CoverageError("no labels for scored day " + s.day.iso());
    const auto& day_labels = it->second->labels;
    if (day_labels.empty()) throw CoverageError("empty labels on " + s.day.iso());
    int correct = 0;
    for (const auto& [symbol, y] : day_labels) {
      const int predicted = s.score_of(symbol) >= 0.5 ? 1 : 0;
      correct += predicted == y ? 1 : 0;
    }
    total += static_cast<double>(correct) / static_cast<double>(day_labels.size());
  }
  return total / static_cast<double>(scores.size());
}

double max_drawdown(std::span<const double> daily_returns) {
  double cum = 0.0, peak = 0.0, mdd = 0.0;
  bool first = true;
  for (double r : daily_returns) {
    cum += r;
    peak = first ? cum : std::max(peak, cum);
    first = false;
    mdd = std::min(mdd, cum - peak);
  }
  return mdd;
}

MetricsReport compute_metrics(std::span<const double> r, std::span<const double> benchmark) {
  if (r.empty()) throw CoverageError("metrics need a non-empty return series");
  if (benchmark.size() != r.size()) {
    throw AlignmentError("benchmark has " + std::to_string(benchmark.size()) + " days, ledger has " +
                         std::to_string(r.size()));
  }
  MetricsReport m;
  m.n_days = static_cast<int>(r.size());
  const double total = std::accumulate(r.begin(), r.end(), 0.0);
  m.arr = total * (kTradingDaysPerYear / static_cast<double>(r.size()));
  m.av = stdev_of(r) * std::sqrt(kTradingDaysPerYear);
  m.mdd = max_drawdown(r);

  m.asr_degenerate = m.av == 0.0;
  m.asr = m.asr_degenerate ? 0.0 : m.arr / m.av;
  m.cr_degenerate = m.mdd == 0.0;
  m.cr = m.cr_degenerate ? 0.0 : m.arr / std::abs(m.mdd);

  std::vector<double> excess(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) excess[i] = r[i] - benchmark[i];
  const double sd = stdev_of(excess);
  m.ir_degenerate = sd == 0.0;
  m.ir = m.ir_degenerate ? 0.0 : mean_of(excess) / sd * std::sqrt(kTradingDaysPerYear);
  return m;
}

MetricsReport compute_metrics(const BacktestLedger& ledger, std::span<const double> benchmark_returns) {
  if (ledger.days.empty()) throw CoverageError("metrics need a non-empty ledger");
  const auto r = ledger.returns();
  return compute_metrics(r, benchmark_returns);
}

std::string metrics_to_json(const MetricsReport& m) {
  nlohmann::ordered_json doc;
  doc["ACC"] = m.acc;
  doc["ARR"] = m.arr;
  doc["AV"] = m.av;
  doc["MDD"] = m.mdd;
  doc["ASR"] = m.asr;
  doc["CR"] = m.cr;
  doc["IR"] = m.ir;
  doc["n_days"] = m.n_days;
  doc["degenerate"] = {{"ASR", m.asr_degenerate}, {"CR", m.cr_degenerate}, {"IR", m.ir_degenerate}};
  return doc.dump(2);
}

MetricsReport metrics_from_json(const std::string& text) {
  MetricsReport m;
  try {
    const auto doc = nlohmann::json::parse(text);
    m.acc = doc.at("ACC");
    m.arr = doc.at("ARR");
    m.av = doc.at("AV");
    m.mdd = doc.at("MDD");
    m.asr = doc.at("ASR");
    m.cr = doc.at("CR");
    m.ir = doc.at("IR");
    m.n_days = doc.at("n_days");
    m.asr_degenerate = doc.at("degenerate").at("ASR");
    m.cr_degenerate = doc.at("degenerate").at("CR");
    m.ir_degenerate = doc.at("degenerate").at("IR");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed metrics JSON: ") + e.what());
  }
  return m;
}

void write_report(const BacktestLedger& ledger, const MetricsReport& metrics, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) throw IoError("cannot create report directory " + out_dir.string());

  open_out(out_dir / "metrics.json") << metrics_to_json(metrics) << '\n';

  auto daily = open_out(out_dir / "daily_returns.csv");
  daily << "day,strategy_return,benchmark_return\n";
  auto cumulative = open_out(out_dir / "cumulative.csv");
  cumulative << "day,strategy_cum,benchmark_cum\n";
  for (const auto& d : ledger.days) {
    daily << d.entry_day.iso() << ',' << detail::format_double(d.portfolio_return) << ','
          << detail::format_double(d.benchmark_return) << '\n';
    cumulative << d.entry_day.iso() << ',' << detail::format_double(d.cumulative) << ','
               << detail::format_double(d.benchmark_cumulative) << '\n';
  }
  if (!daily || !cumulative) throw IoError("failed writing report files in " + out_dir.string());
}

std::vector<DailyReturnRow> read_daily_returns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  std::vector<DailyReturnRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(detail::trim(line), ',');
    DailyReturnRow row;
    if (f.size() != 3 || !detail::parse_double(f[1], row.strategy) || !detail::parse_double(f[2], row.benchmark)) {
      throw ParseError("malformed daily return row", line_no);
    }
    row.day = Date::parse(f[0]);
    rows.push_back(row);
  }
  return rows;
}

void write_ledger_csv(const BacktestLedger& ledger, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "day,signal_day,exit_day,selected,buys,sells,held,portfolio_return,benchmark_return,cumulative\n";
  for (const auto& d : ledger.days) {
    out << d.entry_day.iso() << ',' << d.signal_day.iso() << ',' << d.exit_day.iso() << ',' << join(d.selected)
        << ',' << join(d.buys) << ',' << join(d.sells) << ',' << join(d.held) << ','
        << detail::format_double(d.portfolio_return) << ',' << detail::format_double(d.benchmark_return) << ','
        << detail::format_double(d.cumulative) << '\n';
  }
}

void write_scores_csv(std::span<const PredictionScores> scores, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "day,symbol,score\n";
  for (const auto& s : scores) {
    for (std::size_t i = 0; i < s.symbols.size(); ++i) {
      out << s.day.iso() << ',' << s.symbols[i] << ',' << detail::format_double(s.scores[i]) << '\n';
    }
  }
}

std::vector<PredictionScores> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || detail::trim(line) != "day,symbol,score") {
    throw ParseError("expected header 'day,symbol,score'", line_no);
  }
  std::map<Date, PredictionScores> by_day;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(detail::trim(line), ',');
    double score = 0.0;
    if (f.size() != 3 || !detail::parse_double(f[2], score)) throw ParseError("malformed score row", line_no);
    Date day;
    try {
      day = Date::parse(f[0]);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), line_no);
    }
    auto& s = by_day[day];
    s.day = day;
    s.symbols.emplace_back(f[1]);
    s.scores.push_back(score);
  }
  std::vector<PredictionScores> out;
  for (auto& [day, s] : by_day) out.push_back(std::move(s));
  return out;
}

void write_attention_csv(std::span<const PredictionScores> scores, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "day,relation,head,u,v,alpha\n";
  for (const auto& s : scores) {
    for (const auto* trace : {&s.pos_trace, &s.neg_trace}) {
      const char* rel = trace == &s.pos_trace ? "pos" : "neg";
      for (const auto& e : *trace) {
        out << s.day.iso() << ',' << rel << ',' << e.head << ',' << s.symbols[e.u] << ',' << s.symbols[e.v] << ','
            << detail::format_double(e.alpha) << '\n';
      }
    }
  }
}

void write_betas_csv(std::span<const PredictionScores> scores, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "day,beta_self,beta_pos,beta_neg\n";
  for (const auto& s : scores) {
    out << s.day.iso() << ',' << detail::format_double(s.betas[0]) << ',' << detail::format_double(s.betas[1]) << ','
        << detail::format_double(s.betas[2]) << '\n';
  }
}

}  // namespace stockgraph
