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

#include <cmath>
#include <fstream>

#include <doctest.h>

#include "extended_forward.hpp"
#include "helpers.hpp"
#include "stockgraph/errors.hpp"
#include "stockgraph/model.hpp"
#include "stockgraph/trainer.hpp"

using namespace stockgraph;

namespace {

const Ablation kAllAblations[] = {Ablation::kFull, Ablation::kNoEnc, Ablation::kNoTemp, Ablation::kNoHete};

std::vector<double> flat_params(const ModelParams& p) {
  std::vector<double> out;
  ModelParams::visit(p, [&](const std::string&, const auto& m) { out.insert(out.end(), m.data(), m.data() + m.size()); });
  return out;
}

// Chains the public stage functions by hand.
Eigen::VectorXd composed_scores(const TrainingDay& day, const ModelParams& p, const ModelConfig& cfg) {
  const auto enc = encode_history(day.features, p.encoder, cfg.ablation == Ablation::kNoEnc);
  const auto flat = flatten_embeddings(enc);
  const bool uniform = cfg.ablation == Ablation::kNoTemp;
  const auto pos = tga_forward(flat, neighbor_lists(day.snapshot, Relation::kPos), Relation::kPos, p.tga, uniform);
  const auto neg = tga_forward(flat, neighbor_lists(day.snapshot, Relation::kNeg), Relation::kNeg, p.tga, uniform);
  const auto fused = hga_forward(self_projection(flat, p.hga), pos.h, neg.h, p.hga, cfg.ablation == Ablation::kNoHete);
  Eigen::VectorXd out(flat.rows());
  for (Eigen::Index v = 0; v < flat.rows(); ++v) {
    double s = p.classifier_b(0);
    for (Eigen::Index c = 0; c < fused.z.cols(); ++c) s += fused.z(v, c) * p.classifier_w(c);
    out(v) = 1.0 / (1.0 + std::exp(-s));
  }
  return out;
}

std::vector<TrainingDay> tiny_days(int first, int count) {
  std::vector<TrainingDay> out;
  for (int i = 0; i < count; ++i) out.push_back(testing::tiny_day(first + i));
  return out;
}

}  // namespace

TEST_SUITE("model_trainer") {

TEST_CASE("labels take the top and bottom k") {
  const std::map<std::string, double> r{{"A", 0.03}, {"B", 0.01}, {"C", -0.02}, {"D", 0.0}};
  const auto one = label_day(r, 1);
  CHECK(one.labels == std::map<std::string, int>{{"A", 1}, {"C", 0}});
  const auto two = label_day(r, 2);
  CHECK(two.labels == std::map<std::string, int>{{"A", 1}, {"B", 1}, {"C", 0}, {"D", 0}});

  const std::map<std::string, double> ties{{"D", 0.01}, {"A", 0.01}, {"C", 0.01}, {"B", 0.01}};
  const auto t = label_day(ties, 1);
  CHECK(t.labels == std::map<std::string, int>{{"A", 1}, {"B", 0}});

  CHECK_THROWS_AS(label_day(r, 0), ConfigError);
  CHECK_THROWS_AS(label_day(r, 3), CoverageError);
  CHECK_THROWS_AS(label_day({{"A", 0.1}, {"B", std::nan("")}}, 1), ValidationError);
}

TEST_CASE("binary cross-entropy") {
  PredictionScores s;
  s.symbols = {"A", "B", "C", "D"};
  s.scores = {0.5, 0.5, 0.5, 0.5};
  DayLabels l;
  l.labels = {{"A", 1}, {"B", 1}, {"C", 0}, {"D", 0}};
  CHECK(bce_loss(s, l) == doctest::Approx(4 * std::log(2.0)).epsilon(1e-15));

  s.scores = {0.0, 1.0, 1.0, 0.0};
  // A and C are confidently wrong, B and D confidently right; both clamp at 1e-7.
  const double wrong = -std::log(kScoreClamp);
  const double right = -std::log(1.0 - kScoreClamp);
  CHECK(bce_loss(s, l) == doctest::Approx(2 * wrong + 2 * right).epsilon(1e-8));

  l.labels["E"] = 1;
  CHECK_THROWS_AS(bce_loss(s, l), CoverageError);
}

TEST_CASE("forward pass matches hand-chained stages and the extended-precision path") {
  const auto day = testing::tiny_day();
  for (Ablation a : kAllAblations) {
    const auto cfg = testing::tiny_model(4, a);
    for (std::uint64_t seed : {1u, 2u}) {
      const auto params = ModelParams::init(cfg, seed);
      const auto scores = forward_day(day.features, day.snapshot, params, cfg);
      const auto composed = composed_scores(day, params, cfg);
      const auto extended = detail::extended_scores(day.features, day.snapshot, params, cfg);
      REQUIRE(scores.scores.size() == day.features.symbols.size());
      for (std::size_t i = 0; i < scores.scores.size(); ++i) {
        CHECK(std::abs(scores.scores[i] - composed(static_cast<Eigen::Index>(i))) < 1e-12);
        CHECK(std::abs(scores.scores[i] - static_cast<double>(extended[i])) < 1e-12);
        CHECK(scores.scores[i] > 0.0);
        CHECK(scores.scores[i] < 1.0);
      }
    }
  }
}

TEST_CASE("zero classifier scores one half") {
  const auto day = testing::tiny_day();
  const auto cfg = testing::tiny_model();
  auto params = ModelParams::init(cfg, 3);
  params.classifier_w.setZero();
  params.classifier_b.setZero();
  for (double s : forward_day(day.features, day.snapshot, params, cfg).scores) CHECK(s == 0.5);
}

TEST_CASE("ablations change the forward pass") {
  const auto day = testing::tiny_day();
  const auto full_cfg = testing::tiny_model();
  const auto noenc_cfg = testing::tiny_model(4, Ablation::kNoEnc);
  CHECK(noenc_cfg.embedding_width() == 4 * 4);
  CHECK(full_cfg.embedding_width() == 4 * 4);
  const auto full = forward_day(day.features, day.snapshot, ModelParams::init(full_cfg, 5), full_cfg);
  const auto noenc = forward_day(day.features, day.snapshot, ModelParams::init(noenc_cfg, 5), noenc_cfg);
  CHECK(full.scores != noenc.scores);

  const auto nohete_cfg = testing::tiny_model(4, Ablation::kNoHete);
  const auto nohete = forward_day(day.features, day.snapshot, ModelParams::init(nohete_cfg, 5), nohete_cfg);
  for (double b : nohete.betas) CHECK(b == 1.0 / 3.0);
}

TEST_CASE("gradient check for every ablation") {
  const auto day = testing::tiny_day();
  for (Ablation a : kAllAblations) {
    CAPTURE(to_string(a));
    const auto cfg = testing::tiny_model(4, a);
    const auto params = ModelParams::init(cfg, 11);
    const auto fine = gradient_check(params, cfg, day, 1e-5);
    CAPTURE(fine.worst_parameter);
    CHECK(fine.checked == params.size());
    CHECK(fine.max_relative_error < 1e-4);
    const auto coarse = gradient_check(params, cfg, day, 2e-5);
    CHECK(coarse.max_relative_error < 1e-3);
  }
}

TEST_CASE("classifier bias gradient is the summed residual") {
  const auto day = testing::tiny_day();
  const auto cfg = testing::tiny_model();
  const auto params = ModelParams::init(cfg, 4);
  auto grads = params.zeros_like();
  const double loss = day_loss_and_gradient(day.features, day.snapshot, day.labels, params, cfg, &grads);
  const auto scores = forward_day(day.features, day.snapshot, params, cfg);
  double residual = 0;
  for (const auto& [symbol, y] : day.labels.labels) residual += scores.score_of(symbol) - y;
  CHECK(std::abs(grads.classifier_b(0) - residual) < 1e-12);
  CHECK(std::abs(loss - bce_loss(scores, day.labels)) < 1e-12);
}

TEST_CASE("adam first step moves each parameter by the learning rate") {
  const auto cfg = testing::tiny_model();
  auto params = ModelParams::init(cfg, 1);
  const auto before = flat_params(params);
  auto grads = params.zeros_like();
  ModelParams::visit(grads, [](const std::string&, auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (i % 2 == 0 ? 1.0 : -1.0) * (0.5 + 0.01 * i);
  });
  const auto g = flat_params(grads);
  Adam adam(params, 0.01);
  adam.step(params, grads);
  const auto after = flat_params(params);
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double expected = -0.01 * g[i] / (std::abs(g[i]) + 1e-8);
    CHECK(std::abs((after[i] - before[i]) - expected) < 1e-12);
  }
}

TEST_CASE("training is deterministic and learns a planted signal") {
  const auto days = tiny_days(8, 12);
  const auto cfg = testing::tiny_model();
  TrainConfig tc;
  tc.epochs = 30;
  tc.batch_days = 4;
  tc.learning_rate = 1e-2;
  tc.seed = 5;
  tc.k = 2;
  const auto a = train(days, cfg, tc);
  const auto b = train(days, cfg, tc);
  CHECK(flat_params(a.params) == flat_params(b.params));
  CHECK(a.loss_history == b.loss_history);
  REQUIRE(a.loss_history.size() == 30);
  CHECK(a.loss_history.back() < a.loss_history.front());

  tc.seed = 6;
  CHECK(flat_params(train(days, cfg, tc).params) != flat_params(a.params));
}

TEST_CASE("zero learning rate leaves the parameters and loss fixed") {
  const auto days = tiny_days(10, 4);
  const auto cfg = testing::tiny_model();
  TrainConfig tc;
  tc.epochs = 3;
  tc.learning_rate = 0.0;
  tc.k = 2;
  const auto init = ModelParams::init(cfg, tc.seed);
  const auto r = train(days, cfg, tc, &init);
  CHECK(flat_params(r.params) == flat_params(init));
  REQUIRE(r.loss_history.size() == 3);
  CHECK(std::abs(r.loss_history[1] - r.loss_history[0]) < 1e-12);
  CHECK(std::abs(r.loss_history[2] - r.loss_history[0]) < 1e-12);
}

TEST_CASE("training rejects bad settings and reports divergence") {
  const auto days = tiny_days(10, 2);
  const auto cfg = testing::tiny_model();
  TrainConfig tc;
  tc.k = 2;
  tc.epochs = 1;
  CHECK_THROWS_AS(train(std::span<const TrainingDay>{}, cfg, tc), CoverageError);
  auto bad = tc;
  bad.batch_days = 0;
  CHECK_THROWS_AS(train(days, cfg, bad), ConfigError);
  bad = tc;
  bad.learning_rate = -1;
  CHECK_THROWS_AS(train(days, cfg, bad), ConfigError);

  auto poisoned = ModelParams::init(cfg, 1);
  poisoned.classifier_b(0) = std::nan("");
  CHECK_THROWS_AS(train(days, cfg, tc, &poisoned), DivergenceError);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = testing::scratch_dir("checkpoint");
  Checkpoint ck;
  ck.model = testing::tiny_model(4, Ablation::kNoTemp);
  ck.train.epochs = 7;
  ck.train.learning_rate = 0.125;
  ck.train.seed = 99;
  ck.train.k = 3;
  ck.params = ModelParams::init(ck.model, 8);
  save_checkpoint(ck, dir / "ck.bin");
  const auto back = load_checkpoint(dir / "ck.bin");
  CHECK(back.model.ablation == Ablation::kNoTemp);
  CHECK(back.model.dims.d_att == ck.model.dims.d_att);
  CHECK(back.train.epochs == 7);
  CHECK(back.train.learning_rate == 0.125);
  CHECK(back.train.seed == 99);
  CHECK(back.train.k == 3);
  CHECK(flat_params(back.params) == flat_params(ck.params));

  CHECK_THROWS_AS(load_checkpoint(dir / "missing.bin"), IoError);

  std::string bytes;
  {
    std::ifstream in(dir / "ck.bin", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(dir / name, std::ios::binary) << content;
    return dir / name;
  };
  CHECK_THROWS_AS(load_checkpoint(write("short.bin", bytes.substr(0, bytes.size() - 3))), IoError);
  CHECK_THROWS_AS(load_checkpoint(write("long.bin", bytes + "x")), ValidationError);
  CHECK_THROWS_AS(load_checkpoint(write("header.bin", "{\"format\":\"other\"}\n")), ValidationError);
  CHECK_THROWS_AS(load_checkpoint(write("junk.bin", "not json\n")), ValidationError);
}

TEST_CASE("model config validation") {
  auto cfg = testing::tiny_model();
  CHECK_NOTHROW(cfg.validate());
  cfg.dims.d_in = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = testing::tiny_model();
  cfg.dims.h_tga = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_ablation("nohete") == Ablation::kNoHete);
  CHECK_THROWS_AS(parse_ablation("none"), ConfigError);
}

}
