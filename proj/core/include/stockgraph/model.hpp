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

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "stockgraph/encoder.hpp"
#include "stockgraph/graph.hpp"
#include "stockgraph/hetero_attention.hpp"
#include "stockgraph/temporal_attention.hpp"

namespace stockgraph {

/// full, or one component dropped: encoder attention, temporal attention, heterogeneous attention.
enum class Ablation { kFull, kNoEnc, kNoTemp, kNoHete };

std::string_view to_string(Ablation a);
/// Accepts full, noenc, notemp, nohete; throws ConfigError otherwise.
Ablation parse_ablation(std::string_view text);

struct ModelDims {
  int lookback = 20;
  int d_feat = kFeatureChannels;
  int d_in = 128;
  int d_enc = 128;
  int d_hidden = 512;
  int d_v = 128;
  int h_enc = 8;
  int d_att = 256;
  int h_tga = 4;
  int d_q = 256;
};

struct ModelConfig {
  ModelDims dims;
  Ablation ablation = Ablation::kFull;
  double negative_slope = 0.2;
  int neighbor_hops = 1;  // same-day hops used to form attention neighborhoods

  /// Width of one flattened node embedding.
  int embedding_width() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

struct ModelParams {
  EncoderParams encoder;
  TgaParams tga;
  HgaParams hga;
  Eigen::VectorXd classifier_w;  // d_att
  Eigen::VectorXd classifier_b;  // length 1

  static ModelParams zeros(const ModelConfig& config);
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);
  ModelParams zeros_like() const;
  std::size_t size() const;

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    EncoderParams::visit(self.encoder, f);
    TgaParams::visit(self.tga, f);
    HgaParams::visit(self.hga, f);
    f("classifier.w", self.classifier_w);
    f("classifier.b", self.classifier_b);
  }
};

/// Per-symbol sigmoid scores of one day plus the attention weights behind them.
struct PredictionScores {
  Date day;
  std::vector<std::string> symbols;
  std::vector<double> scores;
  std::vector<AttentionEntry> pos_trace;
  std::vector<AttentionEntry> neg_trace;
  std::array<double, 3> betas{};

  double score_of(std::string_view symbol) const;
};

/// Labels of one day: 1 for the top k next-day returns, 0 for the bottom k.
struct DayLabels {
  Date day;
  std::map<std::string, int> labels;
  int k = 0;
};

/// Ties are broken by ascending symbol: among equal returns the smaller symbol ranks higher.
DayLabels label_day(const std::map<std::string, double>& next_day_returns, int k, Date day = {});

inline constexpr double kScoreClamp = 1e-7;

/// Binary cross-entropy summed over the labeled symbols, scores clamped to [eps, 1 - eps].
double bce_loss(const PredictionScores& scores, const DayLabels& labels);

/// Encoder -> flatten -> pos/neg temporal attention + self projection ->
/// heterogeneous attention -> sigmoid classifier.
PredictionScores forward_day(const FeatureWindow& features, const RelationSnapshot& snapshot,
                             const ModelParams& params, const ModelConfig& config);

/// Looks up the snapshot dated features.as_of in `graph`.
PredictionScores forward_day(Date day, const TemporalHeteroGraph& graph, const FeatureWindow& features,
                             const ModelParams& params, const ModelConfig& config);

/// Loss of one day; adds dLoss/dParams into `grads` when given.
double day_loss_and_gradient(const FeatureWindow& features, const RelationSnapshot& snapshot,
                             const DayLabels& labels, const ModelParams& params, const ModelConfig& config,
                             ModelParams* grads);

}  // namespace stockgraph
