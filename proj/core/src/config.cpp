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

#include "stockgraph/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include <json.hpp>

#include "stockgraph/errors.hpp"
#include "text.hpp"

namespace stockgraph {

namespace {

using Setter = std::function<void(PipelineConfig&, const YAML::Node&)>;

template <class T>
T as(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

template <class T, class Get>
Setter field(const std::string& key, Get get) {
  return [key, get](PipelineConfig& c, const YAML::Node& n) { get(c) = as<T>(n, key); };
}

ClusterSpec parse_cluster(const YAML::Node& node, std::size_t index) {
  const auto tag = "clusters[" + std::to_string(index) + "]";
  if (!node.IsMap()) throw ConfigError(tag + " must be a mapping");
  ClusterSpec c;
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (key == "members") {
      c.members = as<std::vector<int>>(kv.second, tag + ".members");
    } else if (key == "correlation") {
      c.correlation = as<double>(kv.second, tag + ".correlation");
    } else if (key == "lead_lag") {
      c.lead_lag = as<bool>(kv.second, tag + ".lead_lag");
    } else if (key == "persistence") {
      c.persistence = as<double>(kv.second, tag + ".persistence");
    } else {
      throw ConfigError("unknown config field '" + tag + "." + key + "'");
    }
  }
  if (!node["members"]) throw ConfigError("missing required field '" + tag + ".members'");
  if (!node["correlation"]) throw ConfigError("missing required field '" + tag + ".correlation'");
  return c;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"source",
       [](PipelineConfig& c, const YAML::Node& n) {
         const auto v = as<std::string>(n, "source");
         if (v == "synthetic") {
           c.source = DataSource::kSynthetic;
         } else if (v == "csv") {
           c.source = DataSource::kCsv;
         } else {
           throw ConfigError("source must be 'synthetic' or 'csv', got '" + v + "'");
         }
       }},
      {"csv_path", [](PipelineConfig& c, const YAML::Node& n) { c.csv_path = as<std::string>(n, "csv_path"); }},
      {"synthetic_stocks", field<int>("synthetic_stocks", [](PipelineConfig& c) -> int& { return c.synthetic.n_stocks; })},
      {"synthetic_days", field<int>("synthetic_days", [](PipelineConfig& c) -> int& { return c.synthetic.n_days; })},
      {"synthetic_seed",
       field<std::uint64_t>("synthetic_seed", [](PipelineConfig& c) -> std::uint64_t& { return c.synthetic.seed; })},
      {"synthetic_volatility",
       field<double>("synthetic_volatility", [](PipelineConfig& c) -> double& { return c.synthetic.volatility; })},
      {"synthetic_volume_volatility", field<double>("synthetic_volume_volatility", [](PipelineConfig& c) -> double& {
         return c.synthetic.volume_volatility;
       })},
      {"synthetic_start",
       [](PipelineConfig& c, const YAML::Node& n) {
         try {
           c.synthetic.start = Date::parse(as<std::string>(n, "synthetic_start"));
         } catch (const ValidationError& e) {
           throw ConfigError(std::string("synthetic_start: ") + e.what());
         }
       }},
      {"clusters",
       [](PipelineConfig& c, const YAML::Node& n) {
         if (!n.IsSequence()) throw ConfigError("clusters must be a list");
         c.synthetic.clusters.clear();
         for (std::size_t i = 0; i < n.size(); ++i) c.synthetic.clusters.push_back(parse_cluster(n[i], i));
       }},
      {"lookback", field<int>("lookback", [](PipelineConfig& c) -> int& { return c.model.dims.lookback; })},
      {"threshold", field<double>("threshold", [](PipelineConfig& c) -> double& { return c.threshold; })},
      {"hop_bound", field<int>("hop_bound", [](PipelineConfig& c) -> int& { return c.hop_bound; })},
      {"time_bound", field<int>("time_bound", [](PipelineConfig& c) -> int& { return c.time_bound; })},
      {"neighbor_hops", field<int>("neighbor_hops", [](PipelineConfig& c) -> int& { return c.model.neighbor_hops; })},
      {"d_in", field<int>("d_in", [](PipelineConfig& c) -> int& { return c.model.dims.d_in; })},
      {"d_enc", field<int>("d_enc", [](PipelineConfig& c) -> int& { return c.model.dims.d_enc; })},
      {"d_hidden", field<int>("d_hidden", [](PipelineConfig& c) -> int& { return c.model.dims.d_hidden; })},
      {"d_v", field<int>("d_v", [](PipelineConfig& c) -> int& { return c.model.dims.d_v; })},
      {"h_enc", field<int>("h_enc", [](PipelineConfig& c) -> int& { return c.model.dims.h_enc; })},
      {"d_att", field<int>("d_att", [](PipelineConfig& c) -> int& { return c.model.dims.d_att; })},
      {"h_tga", field<int>("h_tga", [](PipelineConfig& c) -> int& { return c.model.dims.h_tga; })},
      {"d_q", field<int>("d_q", [](PipelineConfig& c) -> int& { return c.model.dims.d_q; })},
      {"negative_slope",
       field<double>("negative_slope", [](PipelineConfig& c) -> double& { return c.model.negative_slope; })},
      {"ablation",
       [](PipelineConfig& c, const YAML::Node& n) { c.model.ablation = parse_ablation(as<std::string>(n, "ablation")); }},
      {"epochs", field<int>("epochs", [](PipelineConfig& c) -> int& { return c.train.epochs; })},
      {"batch_days", field<int>("batch_days", [](PipelineConfig& c) -> int& { return c.train.batch_days; })},
      {"learning_rate",
       field<double>("learning_rate", [](PipelineConfig& c) -> double& { return c.train.learning_rate; })},
      {"label_k", field<int>("label_k", [](PipelineConfig& c) -> int& { return c.label_k; })},
      {"train_fraction", field<double>("train_fraction", [](PipelineConfig& c) -> double& { return c.train_fraction; })},
      {"validation_fraction",
       field<double>("validation_fraction", [](PipelineConfig& c) -> double& { return c.validation_fraction; })},
      {"rolling_retrain", field<bool>("rolling_retrain", [](PipelineConfig& c) -> bool& { return c.rolling_retrain; })},
      {"retrain_epochs", field<int>("retrain_epochs", [](PipelineConfig& c) -> int& { return c.retrain_epochs; })},
      {"backtest_k", field<int>("backtest_k", [](PipelineConfig& c) -> int& { return c.backtest_k; })},
      {"daily_capital", field<double>("daily_capital", [](PipelineConfig& c) -> double& { return c.daily_capital; })},
      {"output_dir",
       [](PipelineConfig& c, const YAML::Node& n) { c.output_dir = as<std::string>(n, "output_dir"); }},
      {"seed", field<std::uint64_t>("seed", [](PipelineConfig& c) -> std::uint64_t& { return c.seed; })},
  };
  return table;
}

void apply_field(PipelineConfig& config, const std::string& key, const YAML::Node& value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config field '" + key + "'");
  it->second(config, value);
}

// Values derived from other fields.
void sync(PipelineConfig& config) {
  config.synthetic.lookback = config.model.dims.lookback;
  config.train.seed = config.seed;
}

}  // namespace

void PipelineConfig::validate() const {
  if (source == DataSource::kCsv && csv_path.empty()) {
    throw ConfigError("missing required field 'csv_path' (required when source is csv)");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("threshold must lie in the open interval (0, 1), got " + detail::format_double(threshold));
  }
  if (hop_bound < 1) throw ConfigError("hop_bound must be >= 1");
  if (time_bound < 0) throw ConfigError("time_bound must be >= 0");
  model.validate();
  if (train.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (train.batch_days < 1) throw ConfigError("batch_days must be >= 1");
  if (!(train.learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (label_k < 0) throw ConfigError("label_k must be >= 0 (0 selects n / 5)");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  if (!(validation_fraction >= 0.0 && train_fraction + validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must be >= 0 and leave room for a test split");
  }
  if (retrain_epochs < 0) throw ConfigError("retrain_epochs must be >= 0");
  if (backtest_k < 0) throw ConfigError("backtest_k must be >= 0 (0 selects n / 10)");
  if (!(daily_capital > 0.0)) throw ConfigError("daily_capital must be > 0");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (source == DataSource::kSynthetic) {
    if (synthetic.n_stocks < 2) throw ConfigError("synthetic_stocks must be >= 2");
    validate_synthetic_spec(synthetic);
  }
}

std::string PipelineConfig::canonical() const {
  nlohmann::ordered_json j;
  j["source"] = source == DataSource::kCsv ? "csv" : "synthetic";
  j["csv_path"] = csv_path.string();
  j["synthetic_stocks"] = synthetic.n_stocks;
  j["synthetic_days"] = synthetic.n_days;
  j["synthetic_seed"] = synthetic.seed;
  j["synthetic_volatility"] = synthetic.volatility;
  j["synthetic_volume_volatility"] = synthetic.volume_volatility;
  j["synthetic_start"] = synthetic.start.iso();
  auto clusters = nlohmann::ordered_json::array();
  for (const auto& c : synthetic.clusters) {
    clusters.push_back({{"members", c.members},
                        {"correlation", c.correlation},
                        {"lead_lag", c.lead_lag},
                        {"persistence", c.persistence}});
  }
  j["clusters"] = clusters;
  const auto& d = model.dims;
  j["lookback"] = d.lookback;
  j["threshold"] = threshold;
  j["hop_bound"] = hop_bound;
  j["time_bound"] = time_bound;
  j["neighbor_hops"] = model.neighbor_hops;
  j["d_in"] = d.d_in;
  j["d_enc"] = d.d_enc;
  j["d_hidden"] = d.d_hidden;
  j["d_v"] = d.d_v;
  j["h_enc"] = d.h_enc;
  j["d_att"] = d.d_att;
  j["h_tga"] = d.h_tga;
  j["d_q"] = d.d_q;
  j["negative_slope"] = model.negative_slope;
  j["ablation"] = std::string(to_string(model.ablation));
  j["epochs"] = train.epochs;
  j["batch_days"] = train.batch_days;
  j["learning_rate"] = train.learning_rate;
  j["label_k"] = label_k;
  j["train_fraction"] = train_fraction;
  j["validation_fraction"] = validation_fraction;
  j["rolling_retrain"] = rolling_retrain;
  j["retrain_epochs"] = retrain_epochs;
  j["backtest_k"] = backtest_k;
  j["daily_capital"] = daily_capital;
  j["seed"] = seed;
  return j.dump();
}

std::uint64_t PipelineConfig::hash() const { return detail::fnv1a(canonical()); }

int PipelineConfig::resolved_label_k(int n_symbols) const {
  return label_k > 0 ? label_k : std::max(1, n_symbols / 5);
}

int PipelineConfig::resolved_backtest_k(int n_symbols) const {
  return backtest_k > 0 ? backtest_k : std::max(1, n_symbols / 10);
}

PipelineConfig parse_config(std::string_view yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(yaml_text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  PipelineConfig config;
  if (root && !root.IsNull()) {
    if (!root.IsMap()) throw ConfigError("config must be a key/value mapping");
    for (const auto& kv : root) apply_field(config, kv.first.as<std::string>(), kv.second);
  }
  sync(config);
  config.validate();
  return config;
}

PipelineConfig validate_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

void apply_override(PipelineConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const std::string key(detail::trim(assignment.substr(0, eq)));
  YAML::Node value;
  try {
    value = YAML::Load(std::string(assignment.substr(eq + 1)));
  } catch (const YAML::Exception& e) {
    throw ConfigError("override for '" + key + "' is not valid YAML: " + e.what());
  }
  apply_field(config, key, value);
  sync(config);
  config.validate();
}

}  // namespace stockgraph
