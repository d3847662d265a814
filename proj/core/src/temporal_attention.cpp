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

#include "stockgraph/temporal_attention.hpp"

#include <random>
#include <string>

#include "stockgraph/errors.hpp"
#include "stockgraph/nn.hpp"

namespace stockgraph {

namespace {

void check_relation(const RelationTgaParams& p, Eigen::Index width) {
  if (p.attention.empty()) throw DimensionError("temporal attention needs >= 1 head");
  for (const auto& a : p.attention) {
    if (a.size() != 2 * width) throw DimensionError("attention vector length != 2 * embedding width");
  }
  if (p.w_out.rows() != static_cast<Eigen::Index>(p.attention.size()) * width) {
    throw DimensionError("temporal attention w_out rows != heads * embedding width");
  }
}

}  // namespace

TgaParams TgaParams::zeros(int width, int heads, int d_att) {
  TgaParams p;
  for (Relation r : {Relation::kPos, Relation::kNeg}) {
    auto& rel = p.of(r);
    rel.attention.assign(heads, Eigen::VectorXd::Zero(2 * width));
    rel.w_out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(heads) * width, d_att);
  }
  return p;
}

TgaParams TgaParams::glorot(int width, int heads, int d_att, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TgaParams p = zeros(width, heads, d_att);
  for (Relation r : {Relation::kPos, Relation::kNeg}) {
    auto& rel = p.of(r);
    for (auto& a : rel.attention) nn::glorot_uniform(a, 2 * width, 1, rng);
    nn::glorot_uniform(rel.w_out, rel.w_out.rows(), d_att, rng);
  }
  return p;
}

Eigen::MatrixXd flatten_embeddings(const EncodedSequence& h) {
  if (h.h.empty()) return {};
  const auto rows = h.h.front().rows();
  const auto width = h.h.front().cols();
  Eigen::MatrixXd flat(static_cast<Eigen::Index>(h.h.size()), rows * width);
  for (std::size_t v = 0; v < h.h.size(); ++v) {
    for (Eigen::Index p = 0; p < rows; ++p) flat.block(v, p * width, 1, width) = h.h[v].row(p);
  }
  return flat;
}

EncodedSequence unflatten_embeddings(const Eigen::MatrixXd& flat, int lookback) {
  if (lookback < 1 || flat.cols() % lookback != 0) throw DimensionError("flat width is not a multiple of lookback");
  const auto width = flat.cols() / lookback;
  EncodedSequence out;
  for (Eigen::Index v = 0; v < flat.rows(); ++v) {
    Eigen::MatrixXd m(lookback, width);
    for (int p = 0; p < lookback; ++p) m.row(p) = flat.block(v, p * width, 1, width);
    out.h.push_back(std::move(m));
  }
  return out;
}

RelationMessage tga_forward(const Eigen::MatrixXd& h_flat, const std::vector<std::vector<int>>& neighbors,
                            Relation r, const TgaParams& params, bool uniform, TgaCache* cache) {
  const auto& rel = params.of(r);
  const Eigen::Index n = h_flat.rows();
  const Eigen::Index width = h_flat.cols();
  check_relation(rel, width);
  if (static_cast<Eigen::Index>(neighbors.size()) != n) {
    throw IndexError("neighbor lists do not align with embedding rows");
  }
  const auto heads = rel.attention.size();

  RelationMessage msg;
  msg.relation = r;
  Eigen::MatrixXd concat = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(heads) * width);
  if (cache) {
    cache->nodes.assign(n, {});
    cache->uniform = uniform;
  }

  for (Eigen::Index v = 0; v < n; ++v) {
    const auto& nbrs = neighbors[v];
    if (nbrs.empty()) continue;
    const auto m = static_cast<Eigen::Index>(nbrs.size());
    for (int u : nbrs) {
      if (u < 0 || u >= n || u == v) throw IndexError("neighbor index out of range");
    }
    for (std::size_t k = 0; k < heads; ++k) {
      Eigen::VectorXd logits = Eigen::VectorXd::Zero(m);
      Eigen::VectorXd alpha(m);
      if (uniform) {
        alpha.setConstant(1.0 / static_cast<double>(m));
      } else {
        const auto& a = rel.attention[k];
        const double target = a.tail(width).dot(h_flat.row(v).transpose());
        Eigen::VectorXd source(m);
        for (Eigen::Index j = 0; j < m; ++j) {
          source(j) = a.head(width).dot(h_flat.row(nbrs[j]).transpose());
          logits(j) = source(j) + target;
        }
        Eigen::VectorXd shifted(m);
        if ((logits.array() > 0.0).all()) {
          // One linear piece: the target term cancels in the softmax, so leave it out.
          shifted = source.array() - source.maxCoeff();
        } else if ((logits.array() <= 0.0).all()) {
          shifted = params.negative_slope * (source.array() - source.maxCoeff());
        } else {
          for (Eigen::Index j = 0; j < m; ++j) shifted(j) = nn::leaky_relu(logits(j), params.negative_slope);
          shifted.array() -= shifted.maxCoeff();
        }
        alpha = shifted.array().exp();
        alpha /= alpha.sum();
      }
      Eigen::VectorXd agg = Eigen::VectorXd::Zero(width);
      for (Eigen::Index j = 0; j < m; ++j) agg += alpha(j) * h_flat.row(nbrs[j]).transpose();
      for (Eigen::Index c = 0; c < width; ++c) concat(v, static_cast<Eigen::Index>(k) * width + c) = nn::elu(agg(c));
      for (Eigen::Index j = 0; j < m; ++j) {
        msg.trace.push_back({static_cast<int>(k), nbrs[j], static_cast<int>(v), alpha(j)});
      }
      if (cache) {
        auto& node = cache->nodes[v];
        node.logits.push_back(std::move(logits));
        node.alpha.push_back(std::move(alpha));
        node.agg.push_back(std::move(agg));
      }
    }
    if (cache) cache->nodes[v].neighbors = nbrs;
  }

  msg.h = concat * rel.w_out;
  if (cache) cache->concat = std::move(concat);
  return msg;
}

RelationMessage tga_forward(const Eigen::MatrixXd& h_flat, const std::vector<std::string>& symbols,
                            const RelationSnapshot& snapshot, Relation r, const TgaParams& params, bool uniform,
                            TgaCache* cache) {
  if (snapshot.symbols != symbols || static_cast<Eigen::Index>(symbols.size()) != h_flat.rows()) {
    throw IndexError("snapshot " + snapshot.as_of.iso() + " symbols do not align with embedding rows");
  }
  return tga_forward(h_flat, neighbor_lists(snapshot, r), r, params, uniform, cache);
}

void tga_backward(const TgaCache& cache, const Eigen::MatrixXd& h_flat, Relation r, const TgaParams& params,
                  const Eigen::MatrixXd& d_out, TgaParams& grads, Eigen::MatrixXd& d_flat) {
  const auto& rel = params.of(r);
  auto& grel = grads.of(r);
  const Eigen::Index width = h_flat.cols();

  grel.w_out.noalias() += cache.concat.transpose() * d_out;
  const Eigen::MatrixXd d_concat = d_out * rel.w_out.transpose();

  for (Eigen::Index v = 0; v < static_cast<Eigen::Index>(cache.nodes.size()); ++v) {
    const auto& node = cache.nodes[v];
    if (node.neighbors.empty()) continue;
    const auto m = static_cast<Eigen::Index>(node.neighbors.size());
    for (std::size_t k = 0; k < node.alpha.size(); ++k) {
      const auto& alpha = node.alpha[k];
      Eigen::VectorXd d_agg(width);
      for (Eigen::Index c = 0; c < width; ++c) {
        d_agg(c) = d_concat(v, static_cast<Eigen::Index>(k) * width + c) * nn::elu_grad(node.agg[k](c));
      }
      Eigen::VectorXd d_alpha(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const int u = node.neighbors[j];
        d_alpha(j) = d_agg.dot(h_flat.row(u).transpose());
        d_flat.row(u) += alpha(j) * d_agg.transpose();
      }
      if (cache.uniform) continue;

      const auto& a = rel.attention[k];
      const double mix = alpha.dot(d_alpha);
      double d_target = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        const int u = node.neighbors[j];
        const double d_logit =
            alpha(j) * (d_alpha(j) - mix) * nn::leaky_relu_grad(node.logits[k](j), params.negative_slope);
        grel.attention[k].head(width) += d_logit * h_flat.row(u).transpose();
        d_flat.row(u) += d_logit * a.head(width).transpose();
        d_target += d_logit;
      }
      grel.attention[k].tail(width) += d_target * h_flat.row(v).transpose();
      d_flat.row(v) += d_target * a.tail(width).transpose();
    }
  }
}

}  // namespace stockgraph
