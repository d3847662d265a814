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

#include "stockgraph/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "extended_forward.hpp"
#include "stockgraph/errors.hpp"
#include "text.hpp"

namespace stockgraph {

namespace {

struct Block {
  std::string name;
  double* data;
  Eigen::Index rows, cols;
  Eigen::Index size() const { return rows * cols; }
};

std::vector<Block> blocks_of(ModelParams& params) {
  std::vector<Block> out;
  ModelParams::visit(params, [&](const std::string& name, auto& m) {
    out.push_back({name, m.data(), m.rows(), m.cols()});
  });
  return out;
}

std::vector<Block> blocks_of(const ModelParams& params) { return blocks_of(const_cast<ModelParams&>(params)); }

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void write_le(std::ostream& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw IoError("checkpoint payload truncated");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_days < 1) throw ConfigError("batch_days must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be >= 0");
  if (k < 1) throw ConfigError("k must be >= 1");
}

Adam::Adam(const ModelParams& like, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(like.size(), 0.0), v_(like.size(), 0.0) {}

void Adam::step(ModelParams& params, const ModelParams& grads) {
  ++steps_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  const auto p = blocks_of(params);
  const auto g = blocks_of(grads);
  std::size_t offset = 0;
  for (std::size_t b = 0; b < p.size(); ++b) {
    for (Eigen::Index i = 0; i < p[b].size(); ++i, ++offset) {
      const double gi = g[b].data[i];
      m_[offset] = beta1_ * m_[offset] + (1.0 - beta1_) * gi;
      v_[offset] = beta2_ * v_[offset] + (1.0 - beta2_) * gi * gi;
      p[b].data[i] -= lr_ * (m_[offset] / c1) / (std::sqrt(v_[offset] / c2) + eps_);
    }
  }
}

TrainResult train(std::span<const TrainingDay> days, const ModelConfig& model, const TrainConfig& config,
                  const ModelParams* initial) {
  model.validate();
  config.validate();
  if (days.empty()) throw CoverageError("training needs >= 1 day");

  TrainResult result{initial ? *initial : ModelParams::init(model, config.seed), {}};
  Adam adam(result.params, config.learning_rate);
  std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(days.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_days) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_days));
      ModelParams grads = result.params.zeros_like();
      for (std::size_t b = start; b < stop; ++b) {
        const auto& day = days[order[b]];
        epoch_loss += day_loss_and_gradient(day.features, day.snapshot, day.labels, result.params, model, &grads);
      }
      adam.step(result.params, grads);
    }
    epoch_loss /= static_cast<double>(days.size());
    if (!std::isfinite(epoch_loss)) {
      throw DivergenceError("training diverged: non-finite loss in epoch " + std::to_string(epoch + 1));
    }
    result.loss_history.push_back(epoch_loss);
  }
  return result;
}

GradientCheckResult gradient_check(const ModelParams& params, const ModelConfig& model, const TrainingDay& day,
                                   double step) {
  ModelParams analytic = params.zeros_like();
  day_loss_and_gradient(day.features, day.snapshot, day.labels, params, model, &analytic);

  ModelParams probe = params;
  const auto probe_blocks = blocks_of(probe);
  const auto grad_blocks = blocks_of(analytic);
  GradientCheckResult result;
  for (std::size_t b = 0; b < probe_blocks.size(); ++b) {
    for (Eigen::Index i = 0; i < probe_blocks[b].size(); ++i) {
      double& x = probe_blocks[b].data[i];
      const double saved = x;
      x = saved + step;
      const long double up = detail::extended_day_loss(day.features, day.snapshot, day.labels, probe, model);
      x = saved - step;
      const long double down = detail::extended_day_loss(day.features, day.snapshot, day.labels, probe, model);
      x = saved;

      const double fd = static_cast<double>((up - down) / (2.0L * step));
      const double a = grad_blocks[b].data[i];
      const double err = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8});
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = probe_blocks[b].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto& d = checkpoint.model.dims;
  nlohmann::ordered_json header;
  header["format"] = "stockgraph-checkpoint";
  header["version"] = kCheckpointVersion;
  header["dims"] = {{"lookback", d.lookback}, {"d_feat", d.d_feat}, {"d_in", d.d_in},   {"d_enc", d.d_enc},
                    {"d_hidden", d.d_hidden}, {"d_v", d.d_v},       {"h_enc", d.h_enc}, {"d_att", d.d_att},
                    {"h_tga", d.h_tga},       {"d_q", d.d_q}};
  header["ablation"] = std::string(to_string(checkpoint.model.ablation));
  header["negative_slope"] = checkpoint.model.negative_slope;
  header["neighbor_hops"] = checkpoint.model.neighbor_hops;
  header["hyperparameters"] = {{"epochs", checkpoint.train.epochs},
                               {"batch_days", checkpoint.train.batch_days},
                               {"learning_rate", checkpoint.train.learning_rate},
                               {"k", checkpoint.train.k}};
  header["seed"] = checkpoint.train.seed;
  auto arrays = nlohmann::ordered_json::array();
  for (const auto& b : blocks_of(checkpoint.params)) {
    arrays.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
  }
  header["arrays"] = std::move(arrays);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << header.dump() << '\n';
  for (const auto& b : blocks_of(checkpoint.params)) {
    for (Eigen::Index i = 0; i < b.size(); ++i) write_le(out, b.data[i]);
  }
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty checkpoint " + path.string());

  Checkpoint ck;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.at("format") != "stockgraph-checkpoint") throw ValidationError("not a stockgraph checkpoint");
    if (header.at("version").get<int>() != kCheckpointVersion) {
      throw ValidationError("unsupported checkpoint version " + header.at("version").dump());
    }
    const auto& dims = header.at("dims");
    auto& d = ck.model.dims;
    d.lookback = dims.at("lookback");
    d.d_feat = dims.at("d_feat");
    d.d_in = dims.at("d_in");
    d.d_enc = dims.at("d_enc");
    d.d_hidden = dims.at("d_hidden");
    d.d_v = dims.at("d_v");
    d.h_enc = dims.at("h_enc");
    d.d_att = dims.at("d_att");
    d.h_tga = dims.at("h_tga");
    d.d_q = dims.at("d_q");
    ck.model.ablation = parse_ablation(header.at("ablation").get<std::string>());
    ck.model.negative_slope = header.at("negative_slope");
    ck.model.neighbor_hops = header.at("neighbor_hops");
    const auto& hp = header.at("hyperparameters");
    ck.train.epochs = hp.at("epochs");
    ck.train.batch_days = hp.at("batch_days");
    ck.train.learning_rate = hp.at("learning_rate");
    ck.train.k = hp.at("k");
    ck.train.seed = header.at("seed");
    ck.model.validate();

    ck.params = ModelParams::zeros(ck.model);
    const auto blocks = blocks_of(ck.params);
    const auto& arrays = header.at("arrays");
    if (arrays.size() != blocks.size()) throw ValidationError("checkpoint array count does not match dims");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (arrays[b].at("name") != blocks[b].name || arrays[b].at("rows") != blocks[b].rows ||
          arrays[b].at("cols") != blocks[b].cols) {
        throw ValidationError("checkpoint array " + std::to_string(b) + " does not match " + blocks[b].name);
      }
      for (Eigen::Index i = 0; i < blocks[b].size(); ++i) blocks[b].data[i] = read_le(in);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint header: ") + e.what());
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError("trailing bytes after checkpoint payload");
  return ck;
}

void write_loss_history(std::span<const double> history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < history.size(); ++e) out << e + 1 << ',' << detail::format_double(history[e]) << '\n';
}

}  // namespace stockgraph
