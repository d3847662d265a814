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

#include "stockgraph/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "stockgraph/errors.hpp"
#include "stockgraph/nn.hpp"

namespace stockgraph {

namespace {

// Everything the backward pass needs from one forward pass.
struct ForwardPass {
  EncoderCache encoder;
  Eigen::MatrixXd h_flat;
  TgaCache tga_pos, tga_neg;
  RelationMessages messages;
  Eigen::MatrixXd h_self;
  HgaCache hga;
  FusedEmbedding fused;
  Eigen::VectorXd scores;
};

ForwardPass run_forward(const FeatureWindow& features, const RelationSnapshot& snapshot, const ModelParams& params,
                        const ModelConfig& config) {
  if (snapshot.symbols != features.symbols) {
    throw IndexError("snapshot " + snapshot.as_of.iso() + " symbols do not align with the feature window");
  }
  if (features.lookback() != config.dims.lookback) {
    throw DimensionError("feature window lookback " + std::to_string(features.lookback()) +
                         " != model lookback " + std::to_string(config.dims.lookback));
  }
  ForwardPass fp;
  const auto encoded = encode_history(features, params.encoder, config.ablation == Ablation::kNoEnc, &fp.encoder);
  fp.h_flat = flatten_embeddings(encoded);

  const bool uniform_tga = config.ablation == Ablation::kNoTemp;
  fp.messages.pos = tga_forward(fp.h_flat, neighbor_lists(snapshot, Relation::kPos, config.neighbor_hops),
                                Relation::kPos, params.tga, uniform_tga, &fp.tga_pos);
  fp.messages.neg = tga_forward(fp.h_flat, neighbor_lists(snapshot, Relation::kNeg, config.neighbor_hops),
                                Relation::kNeg, params.tga, uniform_tga, &fp.tga_neg);
  fp.h_self = self_projection(fp.h_flat, params.hga);
  fp.fused = hga_forward(fp.h_self, fp.messages.pos.h, fp.messages.neg.h, params.hga,
                         config.ablation == Ablation::kNoHete, &fp.hga);

  if (params.classifier_w.size() != fp.fused.z.cols() || params.classifier_b.size() != 1) {
    throw DimensionError("classifier does not match d_att");
  }
  Eigen::VectorXd logits = fp.fused.z * params.classifier_w;
  logits.array() += params.classifier_b(0);
  fp.scores = logits.unaryExpr([](double x) { return nn::sigmoid(x); });
  return fp;
}

PredictionScores to_scores(const FeatureWindow& features, ForwardPass& fp) {
  PredictionScores out;
  out.day = features.as_of;
  out.symbols = features.symbols;
  out.scores.assign(fp.scores.data(), fp.scores.data() + fp.scores.size());
  out.pos_trace = std::move(fp.messages.pos.trace);
  out.neg_trace = std::move(fp.messages.neg.trace);
  out.betas = fp.fused.betas;
  return out;
}

}  // namespace

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::kFull: return "full";
    case Ablation::kNoEnc: return "noenc";
    case Ablation::kNoTemp: return "notemp";
    case Ablation::kNoHete: return "nohete";
  }
  return "full";
}

Ablation parse_ablation(std::string_view text) {
  for (Ablation a : {Ablation::kFull, Ablation::kNoEnc, Ablation::kNoTemp, Ablation::kNoHete}) {
    if (to_string(a) == text) return a;
  }
  throw ConfigError("unknown ablation '" + std::string(text) + "' (expected full, noenc, notemp or nohete)");
}

int ModelConfig::embedding_width() const {
  return dims.lookback * (ablation == Ablation::kNoEnc ? dims.d_in : dims.d_enc);
}

void ModelConfig::validate() const {
  const std::pair<const char*, int> fields[] = {
      {"lookback", dims.lookback}, {"d_feat", dims.d_feat}, {"d_in", dims.d_in},   {"d_enc", dims.d_enc},
      {"d_hidden", dims.d_hidden}, {"d_v", dims.d_v},       {"h_enc", dims.h_enc}, {"d_att", dims.d_att},
      {"h_tga", dims.h_tga},       {"d_q", dims.d_q},       {"neighbor_hops", neighbor_hops}};
  for (const auto& [name, value] : fields) {
    if (value < 1) throw ConfigError(std::string(name) + " must be >= 1");
  }
  if (dims.d_in % 2 != 0) {
    throw ConfigError("d_in must be even: the positional encoding pairs sin/cos columns");
  }
  if (!(negative_slope >= 0.0 && negative_slope < 1.0)) throw ConfigError("negative_slope must lie in [0, 1)");
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  const auto& d = config.dims;
  const int width = config.embedding_width();
  ModelParams p;
  p.encoder = EncoderParams::zeros({d.d_feat, d.d_in, d.d_hidden, d.d_v, d.h_enc, d.d_enc});
  p.tga = TgaParams::zeros(width, d.h_tga, d.d_att);
  p.tga.negative_slope = config.negative_slope;
  p.hga = HgaParams::zeros(width, d.d_att, d.d_q);
  p.classifier_w = Eigen::VectorXd::Zero(d.d_att);
  p.classifier_b = Eigen::VectorXd::Zero(1);
  return p;
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const auto& d = config.dims;
  const int width = config.embedding_width();
  ModelParams p;
  p.encoder = EncoderParams::glorot({d.d_feat, d.d_in, d.d_hidden, d.d_v, d.h_enc, d.d_enc}, seed);
  p.tga = TgaParams::glorot(width, d.h_tga, d.d_att, seed + 1);
  p.tga.negative_slope = config.negative_slope;
  p.hga = HgaParams::glorot(width, d.d_att, d.d_q, seed + 2);
  std::mt19937_64 rng(seed + 3);
  p.classifier_w = Eigen::VectorXd::Zero(d.d_att);
  nn::glorot_uniform(p.classifier_w, d.d_att, 1, rng);
  p.classifier_b = Eigen::VectorXd::Zero(1);
  return p;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  visit(z, [](const std::string&, auto& m) { m.setZero(); });
  return z;
}

std::size_t ModelParams::size() const {
  std::size_t total = 0;
  visit(*this, [&](const std::string&, const auto& m) { total += static_cast<std::size_t>(m.size()); });
  return total;
}

double PredictionScores::score_of(std::string_view symbol) const {
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] == symbol) return scores[i];
  }
  throw LookupError("no score for '" + std::string(symbol) + "' on " + day.iso());
}

DayLabels label_day(const std::map<std::string, double>& next_day_returns, int k, Date day) {
  if (k < 1) throw ConfigError("labels per side k must be >= 1");
  if (static_cast<int>(next_day_returns.size()) < 2 * k) {
    throw CoverageError("labeling needs >= " + std::to_string(2 * k) + " symbols with returns on " + day.iso() +
                        ", got " + std::to_string(next_day_returns.size()));
  }
  std::vector<std::pair<std::string, double>> entries(next_day_returns.begin(), next_day_returns.end());
  for (const auto& [symbol, r] : entries) {
    if (!std::isfinite(r)) throw ValidationError("non-finite return for " + symbol);
  }
  // Map order is ascending symbol, so stable sorts keep that as the tie-break.
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  DayLabels out;
  out.day = day;
  out.k = k;
  for (int i = 0; i < k; ++i) out.labels[entries[i].first] = 1;

  std::vector<std::pair<std::string, double>> rest(entries.begin() + k, entries.end());
  std::sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  for (int i = 0; i < k; ++i) out.labels[rest[i].first] = 0;
  return out;
}

double bce_loss(const PredictionScores& scores, const DayLabels& labels) {
  double loss = 0.0;
  for (const auto& [symbol, y] : labels.labels) {
    double p = 0.0;
    try {
      p = scores.score_of(symbol);
    } catch (const LookupError&) {
      throw CoverageError("no score for labeled symbol " + symbol + " on " + labels.day.iso());
    }
    p = std::clamp(p, kScoreClamp, 1.0 - kScoreClamp);
    loss -= y == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return loss;
}

PredictionScores forward_day(const FeatureWindow& features, const RelationSnapshot& snapshot,
                             const ModelParams& params, const ModelConfig& config) {
  auto fp = run_forward(features, snapshot, params, config);
  return to_scores(features, fp);
}

PredictionScores forward_day(Date day, const TemporalHeteroGraph& graph, const FeatureWindow& features,
                             const ModelParams& params, const ModelConfig& config) {
  if (features.as_of != day) throw AlignmentError("feature window is dated " + features.as_of.iso());
  return forward_day(features, graph.at(day), params, config);
}

double day_loss_and_gradient(const FeatureWindow& features, const RelationSnapshot& snapshot,
                             const DayLabels& labels, const ModelParams& params, const ModelConfig& config,
                             ModelParams* grads) {
  auto fp = run_forward(features, snapshot, params, config);
  const auto n = static_cast<Eigen::Index>(features.symbols.size());

  double loss = 0.0;
  Eigen::VectorXd d_logits = Eigen::VectorXd::Zero(n);
  for (const auto& [symbol, y] : labels.labels) {
    const auto it = std::find(features.symbols.begin(), features.symbols.end(), symbol);
    if (it == features.symbols.end()) {
      throw CoverageError("no score for labeled symbol " + symbol + " on " + labels.day.iso());
    }
    const auto v = it - features.symbols.begin();
    const double p = fp.scores(v);
    const double clamped = std::clamp(p, kScoreClamp, 1.0 - kScoreClamp);
    loss -= y == 1 ? std::log(clamped) : std::log(1.0 - clamped);
    // Zero slope where the clamp is active.
    if (p == clamped) d_logits(v) = p - y;
  }
  if (!grads) return loss;

  grads->classifier_w.noalias() += fp.fused.z.transpose() * d_logits;
  grads->classifier_b(0) += d_logits.sum();
  const Eigen::MatrixXd d_z = d_logits * params.classifier_w.transpose();

  const auto d_sources = hga_backward(fp.hga, fp.fused, params.hga, d_z, grads->hga);
  Eigen::MatrixXd d_flat = self_projection_backward(fp.h_flat, params.hga, d_sources[kSelf], grads->hga);
  tga_backward(fp.tga_pos, fp.h_flat, Relation::kPos, params.tga, d_sources[kPosSource], grads->tga, d_flat);
  tga_backward(fp.tga_neg, fp.h_flat, Relation::kNeg, params.tga, d_sources[kNegSource], grads->tga, d_flat);

  const auto d_encoded = unflatten_embeddings(d_flat, config.dims.lookback);
  encoder_backward(fp.encoder, params.encoder, d_encoded.h, grads->encoder);
  return loss;
}

}  // namespace stockgraph
