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

// stockgraph: command line driver for the data -> graphs -> model -> backtest pipeline.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stockgraph/config.hpp"
#include "stockgraph/errors.hpp"
#include "stockgraph/pipeline.hpp"

namespace {

using stockgraph::ClusterSpec;
using stockgraph::ConfigError;
using stockgraph::PipelineConfig;

// "0,1,2:0.9" or "0,1,2:0.9:lead:0.7"
ClusterSpec parse_cluster_flag(const std::string& text) {
  ClusterSpec c;
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(':', start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  if (parts.size() != 2 && parts.size() != 4) {
    throw ConfigError("--cluster expects members:correlation[:lead:persistence], got '" + text + "'");
  }
  try {
    std::size_t s = 0;
    for (;;) {
      const auto comma = parts[0].find(',', s);
      c.members.push_back(std::stoi(parts[0].substr(s, comma - s)));
      if (comma == std::string::npos) break;
      s = comma + 1;
    }
    c.correlation = std::stod(parts[1]);
    if (parts.size() == 4) {
      if (parts[2] != "lead") throw ConfigError("--cluster: third field must be 'lead'");
      c.lead_lag = true;
      c.persistence = std::stod(parts[3]);
    }
  } catch (const std::logic_error&) {
    throw ConfigError("--cluster: cannot parse '" + text + "'");
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stock movement prediction with temporal heterogeneous graph attention"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "YAML config file")->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "Override a config field, key=value (repeatable)");

  std::optional<int> stocks, days;
  std::optional<std::uint64_t> data_seed;
  std::vector<std::string> clusters;
  auto* gen = app.add_subcommand("gen-data", "Write prices.csv from the synthetic market or the configured CSV");
  gen->add_option("--stocks", stocks, "Number of synthetic stocks");
  gen->add_option("--days", days, "Number of synthetic trading days");
  gen->add_option("--seed", data_seed, "Synthetic market seed");
  gen->add_option("--cluster", clusters, "Correlated cluster members:correlation[:lead:persistence]");

  auto* graphs = app.add_subcommand("build-graphs", "Build daily pos/neg relation snapshots");
  auto* train = app.add_subcommand("train", "Train the model on the training split");
  auto* predict = app.add_subcommand("predict", "Score the test split");
  auto* backtest = app.add_subcommand("backtest", "Simulate the top-k strategy and compute metrics");
  auto* report = app.add_subcommand("report", "Recompute and print metrics from the backtest outputs");
  auto* all = app.add_subcommand("run-all", "Run every stage in order");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    PipelineConfig config =
        config_path.empty() ? stockgraph::parse_config("") : stockgraph::validate_config(config_path);
    for (const auto& o : overrides) stockgraph::apply_override(config, o);
    if (stocks) config.synthetic.n_stocks = *stocks;
    if (days) config.synthetic.n_days = *days;
    if (data_seed) config.synthetic.seed = *data_seed;
    if (!clusters.empty()) {
      config.synthetic.clusters.clear();
      for (const auto& c : clusters) config.synthetic.clusters.push_back(parse_cluster_flag(c));
    }
    config.validate();

    if (*gen) {
      stockgraph::stage_gen_data(config, std::cerr);
    } else if (*graphs) {
      stockgraph::stage_build_graphs(config, std::cerr);
    } else if (*train) {
      stockgraph::stage_train(config, std::cerr);
    } else if (*predict) {
      stockgraph::stage_predict(config, std::cerr);
    } else if (*backtest) {
      stockgraph::stage_backtest(config, std::cerr);
    } else if (*report) {
      stockgraph::stage_report(config, std::cerr, std::cout);
    } else if (*all) {
      stockgraph::run_all(config, std::cerr, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const stockgraph::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
