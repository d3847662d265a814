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

#include "stockgraph/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "stockgraph/errors.hpp"
#include "text.hpp"

namespace stockgraph {

namespace fs = std::filesystem;

namespace {

std::string hex16(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

ModelConfig resolved_model(const PipelineConfig& config) { return config.model; }

TrainConfig resolved_train(const PipelineConfig& config, int n_symbols) {
  TrainConfig t = config.train;
  t.seed = config.seed;
  t.k = config.resolved_label_k(n_symbols);
  return t;
}

int symbol_count(const PriceTable& prices) { return static_cast<int>(prices.size()); }

void log_stage(std::ostream& log, std::string_view stage, const PipelineConfig& config) {
  log << "[" << stage << "] seed=" << config.seed << " config_hash=" << hex16(config.hash()) << "\n";
}

fs::path out_path(const PipelineConfig& config, std::string_view name) { return config.output_dir / name; }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void require_file(const fs::path& path, std::string_view producer) {
  if (!fs::exists(path)) {
    throw IoError("missing " + path.string() + " (run '" + std::string(producer) + "' first)");
  }
}

std::string hash_tree(const fs::path& path) {
  if (!fs::is_directory(path)) return file_hash(path);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::string joined;
  for (const auto& f : files) joined += f.filename().string() + ":" + file_hash(f) + "\n";
  return hex16(detail::fnv1a(joined));
}

// Records one stage's inputs and outputs, keeping entries from other stages.
void update_manifest(const PipelineConfig& config, std::string_view stage, const std::vector<std::string>& inputs,
                     const std::vector<std::string>& outputs) {
  const auto path = out_path(config, "manifest.json");
  nlohmann::ordered_json manifest = nlohmann::ordered_json::object();
  if (fs::exists(path)) {
    std::ifstream in(path);
    try {
      manifest = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception&) {
      manifest = nlohmann::ordered_json::object();
    }
  }
  const auto canonical = nlohmann::ordered_json::parse(config.canonical());
  if (!manifest.is_object() || manifest.value("config_hash", std::string()) != hex16(config.hash())) {
    manifest = nlohmann::ordered_json::object();
  }
  manifest["config"] = canonical;
  manifest["config_hash"] = hex16(config.hash());
  manifest["seed"] = config.seed;
  if (config.source == DataSource::kCsv && fs::exists(config.csv_path)) {
    manifest["source_hash"] = file_hash(config.csv_path);
  }
  nlohmann::ordered_json entry;
  for (const auto& name : inputs) entry["inputs"][name] = hash_tree(out_path(config, name));
  for (const auto& name : outputs) entry["outputs"][name] = hash_tree(out_path(config, name));
  manifest["stages"][std::string(stage)] = entry;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << manifest.dump(2) << "\n";
}

PriceTable read_stage_prices(const PipelineConfig& config) {
  const auto path = out_path(config, "prices.csv");
  require_file(path, "gen-data");
  return load_price_csv(path);
}

TemporalHeteroGraph read_stage_graph(const PipelineConfig& config) {
  const auto dir = out_path(config, "graphs");
  require_file(dir, "build-graphs");
  return load_graph(dir, config.hop_bound, config.time_bound);
}

bool same_dims(const ModelDims& a, const ModelDims& b) {
  return a.lookback == b.lookback && a.d_feat == b.d_feat && a.d_in == b.d_in && a.d_enc == b.d_enc &&
         a.d_hidden == b.d_hidden && a.d_v == b.d_v && a.h_enc == b.h_enc && a.d_att == b.d_att &&
         a.h_tga == b.h_tga && a.d_q == b.d_q;
}

std::vector<DayLabels> labels_for_scores(const PriceTable& prices, std::span<const PredictionScores> scores,
                                         int label_k) {
  std::vector<Date> days;
  for (const auto& s : scores) days.push_back(s.day);
  return labels_for(prices, days, label_k);
}

}  // namespace

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return hex16(detail::fnv1a(buf.str()));
}

std::vector<Date> usable_days(const PriceTable& prices, int lookback) {
  const auto days = common_days(prices);
  std::vector<Date> out;
  for (std::size_t i = static_cast<std::size_t>(lookback); i + 2 < days.size(); ++i) out.push_back(days[i]);
  return out;
}

DaySplit split_days(std::span<const Date> days, double train_fraction, double validation_fraction) {
  const auto n = static_cast<long>(days.size());
  if (n < 3) {
    throw CoverageError("need at least 3 usable days for a train/validation/test split, got " + std::to_string(n));
  }
  long n_train = std::clamp(static_cast<long>(std::floor(train_fraction * n)), 1L, n - 2);
  long n_val = std::clamp(static_cast<long>(std::floor(validation_fraction * n)), 1L, n - n_train - 1);
  DaySplit split;
  split.train.assign(days.begin(), days.begin() + n_train);
  split.validation.assign(days.begin() + n_train, days.begin() + n_train + n_val);
  split.test.assign(days.begin() + n_train + n_val, days.end());
  return split;
}

std::map<std::string, double> next_day_returns(const PriceTable& prices, Date day) {
  std::map<std::string, double> out;
  for (const auto& [symbol, series] : prices) {
    const auto i = series.index_of(day);
    if (i < 0 || static_cast<std::size_t>(i + 1) >= series.bars.size()) {
      throw CoverageError("no next-day close for " + symbol + " after " + day.iso());
    }
    out[symbol] = series.bars[i + 1].close / series.bars[i].close - 1.0;
  }
  return out;
}

std::vector<DayLabels> labels_for(const PriceTable& prices, std::span<const Date> days, int label_k) {
  std::vector<DayLabels> out;
  out.reserve(days.size());
  for (const auto day : days) out.push_back(label_day(next_day_returns(prices, day), label_k, day));
  return out;
}

std::vector<TrainingDay> make_training_days(const PriceTable& prices, const TemporalHeteroGraph& graph,
                                            std::span<const Date> days, int lookback, int label_k) {
  std::vector<TrainingDay> out;
  out.reserve(days.size());
  for (const auto day : days) {
    TrainingDay d;
    d.features = build_feature_window(prices, day, lookback);
    d.snapshot = graph.at(day);
    d.labels = label_day(next_day_returns(prices, day), label_k, day);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<PredictionScores> predict_days(const PriceTable& prices, const TemporalHeteroGraph& graph,
                                           std::span<const Date> days, const ModelParams& params,
                                           const PipelineConfig& config) {
  const auto model = resolved_model(config);
  const int label_k = config.resolved_label_k(symbol_count(prices));
  ModelParams current = params;
  std::vector<PredictionScores> out;
  out.reserve(days.size());
  for (std::size_t i = 0; i < days.size(); ++i) {
    if (config.rolling_retrain && i > 0 && config.retrain_epochs > 0) {
      // Day i-1's labels need the close of day i, which is known when day i is scored.
      auto recent = make_training_days(prices, graph, days.subspan(i - 1, 1), model.dims.lookback, label_k);
      TrainConfig t = resolved_train(config, symbol_count(prices));
      t.epochs = config.retrain_epochs;
      t.seed = config.seed + i;
      current = train(recent, model, t, &current).params;
    }
    const auto features = build_feature_window(prices, days[i], model.dims.lookback);
    out.push_back(forward_day(days[i], graph, features, current, model));
  }
  return out;
}

PriceTable load_prices(const PipelineConfig& config) {
  if (config.source == DataSource::kCsv) return load_price_csv(config.csv_path);
  return gen_synthetic_market(config.synthetic);
}

PipelineResult run_pipeline(const PriceTable& prices, const PipelineConfig& config) {
  config.validate();
  const auto model = resolved_model(config);
  const int n = symbol_count(prices);
  const int label_k = config.resolved_label_k(n);
  const auto days = usable_days(prices, model.dims.lookback);

  PipelineResult result;
  result.split = split_days(days, config.train_fraction, config.validation_fraction);
  const auto graph = build_temporal_graph(prices, days, model.dims.lookback, config.threshold, config.hop_bound,
                                          config.time_bound);

  const auto train_days = make_training_days(prices, graph, result.split.train, model.dims.lookback, label_k);
  result.training = train(train_days, model, resolved_train(config, n));

  auto score_days = [&](std::span<const Date> span) {
    PipelineConfig frozen = config;
    frozen.rolling_retrain = false;
    return predict_days(prices, graph, span, result.training.params, frozen);
  };
  const auto train_scores = score_days(result.split.train);
  const auto val_scores = score_days(result.split.validation);
  result.scores = predict_days(prices, graph, result.split.test, result.training.params, config);

  result.train_acc = accuracy(train_scores, labels_for(prices, result.split.train, label_k));
  result.validation_acc = accuracy(val_scores, labels_for(prices, result.split.validation, label_k));
  result.test_acc = accuracy(result.scores, labels_for(prices, result.split.test, label_k));

  result.ledger = run_backtest(result.scores, prices, config.resolved_backtest_k(n), config.daily_capital);
  result.metrics = compute_metrics(result.ledger, result.ledger.benchmark_returns());
  result.metrics.acc = result.test_acc;
  return result;
}

void stage_gen_data(const PipelineConfig& config, std::ostream& log) {
  log_stage(log, "gen-data", config);
  ensure_dir(config.output_dir);
  const auto prices = load_prices(config);
  write_price_csv(prices, out_path(config, "prices.csv"));
  log << "[gen-data] " << prices.size() << " symbols, " << common_days(prices).size() << " common days\n";
  update_manifest(config, "gen-data", {}, {"prices.csv"});
}

void stage_build_graphs(const PipelineConfig& config, std::ostream& log) {
  log_stage(log, "build-graphs", config);
  const auto prices = read_stage_prices(config);
  const auto days = usable_days(prices, config.model.dims.lookback);
  if (days.empty()) throw CoverageError("no day has a full lookback window and two following days");
  const auto graph = build_temporal_graph(prices, days, config.model.dims.lookback, config.threshold,
                                          config.hop_bound, config.time_bound);
  const auto dir = out_path(config, "graphs");
  std::error_code ec;
  fs::remove_all(dir, ec);
  ensure_dir(dir);
  save_graph(graph, dir);
  std::size_t pos = 0, neg = 0;
  for (const auto& s : graph.snapshots) {
    pos += s.pos_edges.size();
    neg += s.neg_edges.size();
  }
  log << "[build-graphs] " << graph.snapshots.size() << " snapshots, " << pos << " pos / " << neg << " neg edges\n";
  update_manifest(config, "build-graphs", {"prices.csv"}, {"graphs"});
}

void stage_train(const PipelineConfig& config, std::ostream& log) {
  log_stage(log, "train", config);
  const auto prices = read_stage_prices(config);
  const auto graph = read_stage_graph(config);
  const auto model = resolved_model(config);
  const int n = symbol_count(prices);
  const auto split = split_days(usable_days(prices, model.dims.lookback), config.train_fraction,
                                config.validation_fraction);
  const auto train_cfg = resolved_train(config, n);
  const auto days = make_training_days(prices, graph, split.train, model.dims.lookback, train_cfg.k);
  const auto result = train(days, model, train_cfg);

  save_checkpoint({model, train_cfg, result.params}, out_path(config, "checkpoint.bin"));
  write_loss_history(result.loss_history, out_path(config, "loss_history.csv"));

  PipelineConfig frozen = config;
  frozen.rolling_retrain = false;
  const auto val_scores = predict_days(prices, graph, split.validation, result.params, frozen);
  const double val_acc = accuracy(val_scores, labels_for(prices, split.validation, train_cfg.k));
  log << "[train] " << split.train.size() << " days, " << result.loss_history.size() << " epochs";
  if (!result.loss_history.empty()) {
    log << ", loss " << detail::format_double(result.loss_history.front()) << " -> "
        << detail::format_double(result.loss_history.back());
  }
  log << ", validation ACC " << detail::format_double(val_acc) << "\n";
  update_manifest(config, "train", {"prices.csv", "graphs"}, {"checkpoint.bin", "loss_history.csv"});
}

void stage_predict(const PipelineConfig& config, std::ostream& log) {
  log_stage(log, "predict", config);
  const auto prices = read_stage_prices(config);
  const auto graph = read_stage_graph(config);
  const auto ckpt_path = out_path(config, "checkpoint.bin");
  require_file(ckpt_path, "train");
  const auto checkpoint = load_checkpoint(ckpt_path);
  if (!same_dims(checkpoint.model.dims, config.model.dims) || checkpoint.model.ablation != config.model.ablation) {
    throw ConfigError("checkpoint dimensions or ablation differ from the config; re-run 'train'");
  }
  const auto split = split_days(usable_days(prices, config.model.dims.lookback), config.train_fraction,
                                config.validation_fraction);
  const auto scores = predict_days(prices, graph, split.test, checkpoint.params, config);
  write_scores_csv(scores, out_path(config, "scores.csv"));
  write_attention_csv(scores, out_path(config, "attention.csv"));
  write_betas_csv(scores, out_path(config, "betas.csv"));
  log << "[predict] scored " << scores.size() << " test days\n";
  update_manifest(config, "predict", {"prices.csv", "graphs", "checkpoint.bin"},
                  {"scores.csv", "attention.csv", "betas.csv"});
}

void stage_backtest(const PipelineConfig& config, std::ostream& log) {
  log_stage(log, "backtest", config);
  const auto prices = read_stage_prices(config);
  const auto scores_path = out_path(config, "scores.csv");
  require_file(scores_path, "predict");
  const auto scores = read_scores_csv(scores_path);
  const int n = symbol_count(prices);
  const auto ledger = run_backtest(scores, prices, config.resolved_backtest_k(n), config.daily_capital);
  auto metrics = compute_metrics(ledger, ledger.benchmark_returns());
  metrics.acc = accuracy(scores, labels_for_scores(prices, scores, config.resolved_label_k(n)));
  write_ledger_csv(ledger, out_path(config, "ledger.csv"));
  write_report(ledger, metrics, config.output_dir);
  log << "[backtest] " << ledger.days.size() << " days, k=" << ledger.k << "\n";
  update_manifest(config, "backtest", {"prices.csv", "scores.csv"},
                  {"ledger.csv", "metrics.json", "daily_returns.csv", "cumulative.csv"});
}

void stage_report(const PipelineConfig& config, std::ostream& log, std::ostream& out) {
  log_stage(log, "report", config);
  const auto returns_path = out_path(config, "daily_returns.csv");
  require_file(returns_path, "backtest");
  const auto rows = read_daily_returns(returns_path);
  std::vector<double> strategy, bench;
  for (const auto& r : rows) {
    strategy.push_back(r.strategy);
    bench.push_back(r.benchmark);
  }
  auto metrics = compute_metrics(strategy, bench);
  const auto scores_path = out_path(config, "scores.csv");
  if (fs::exists(scores_path) && fs::exists(out_path(config, "prices.csv"))) {
    const auto prices = read_stage_prices(config);
    const auto scores = read_scores_csv(scores_path);
    metrics.acc = accuracy(scores, labels_for_scores(prices, scores, config.resolved_label_k(symbol_count(prices))));
  }

  std::ostringstream summary;
  auto line = [&](std::string_view name, double value, bool degenerate = false) {
    summary << name << "  " << detail::format_double(value) << (degenerate ? "  (degenerate)" : "") << "\n";
  };
  summary << "days " << metrics.n_days << "\n";
  line("ACC", metrics.acc);
  line("ARR", metrics.arr);
  line("AV ", metrics.av);
  line("MDD", metrics.mdd);
  line("ASR", metrics.asr, metrics.asr_degenerate);
  line("CR ", metrics.cr, metrics.cr_degenerate);
  line("IR ", metrics.ir, metrics.ir_degenerate);

  std::ofstream file(out_path(config, "summary.txt"));
  if (!file) throw IoError("cannot write " + out_path(config, "summary.txt").string());
  file << summary.str();
  out << summary.str();
  update_manifest(config, "report", {"daily_returns.csv"}, {"summary.txt"});
}

void run_all(const PipelineConfig& config, std::ostream& log, std::ostream& out) {
  stage_gen_data(config, log);
  stage_build_graphs(config, log);
  stage_train(config, log);
  stage_predict(config, log);
  stage_backtest(config, log);
  stage_report(config, log, out);
}

}  // namespace stockgraph
