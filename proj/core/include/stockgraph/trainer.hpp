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
#include <span>
#include <string>
#include <vector>

#include "stockgraph/model.hpp"

namespace stockgraph {

struct TrainConfig {
  int epochs = 50;
  int batch_days = 8;
  double learning_rate = 3e-4;
  std::uint64_t seed = 42;
  int k = 100;  // labeled stocks per side

  void validate() const;
};

/// One sample: a trading day's features, relation snapshot and labels.
struct TrainingDay {
  FeatureWindow features;
  RelationSnapshot snapshot;
  DayLabels labels;
};

struct TrainResult {
  ModelParams params;
  std::vector<double> loss_history;  // mean per-day loss of each epoch
};

/// Adam with bias correction.
class Adam {
 public:
  Adam(const ModelParams& like, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(ModelParams& params, const ModelParams& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  long steps_ = 0;
  std::vector<double> m_, v_;
};

/// Epochs over seed-shuffled day batches; each batch sums per-day gradients and
/// takes one Adam step. Starts from `initial` when given, else from a seeded init.
/// Throws DivergenceError when an epoch's loss is not finite.
TrainResult train(std::span<const TrainingDay> days, const ModelConfig& model, const TrainConfig& config,
                  const ModelParams* initial = nullptr);

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t checked = 0;
};

/// Central differences against the analytic gradient for every parameter entry.
/// Relative error is |a - f| / max(|a|, |f|, 1e-8).
GradientCheckResult gradient_check(const ModelParams& params, const ModelConfig& model, const TrainingDay& day,
                                   double step = 1e-5);

struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  ModelParams params;
};

inline constexpr int kCheckpointVersion = 1;

/// One JSON header line, then every parameter array as little-endian float64 in visit order.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void write_loss_history(std::span<const double> history, const std::filesystem::path& path);

}  // namespace stockgraph
