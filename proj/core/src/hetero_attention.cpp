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

#include "stockgraph/hetero_attention.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "stockgraph/errors.hpp"
#include "stockgraph/nn.hpp"

namespace stockgraph {

HgaParams HgaParams::zeros(int width, int d_att, int d_q) {
  return {Eigen::MatrixXd::Zero(width, d_att), Eigen::VectorXd::Zero(d_att), Eigen::MatrixXd::Zero(d_att, d_q),
          Eigen::VectorXd::Zero(d_q), Eigen::VectorXd::Zero(d_q)};
}

HgaParams HgaParams::glorot(int width, int d_att, int d_q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  HgaParams p = zeros(width, d_att, d_q);
  nn::glorot_uniform(p.w_self, width, d_att, rng);
  nn::glorot_uniform(p.w, d_att, d_q, rng);
  nn::glorot_uniform(p.q, d_q, 1, rng);
  return p;
}

Eigen::MatrixXd self_projection(const Eigen::MatrixXd& h_flat, const HgaParams& params) {
  if (h_flat.cols() != params.w_self.rows() || params.b_self.size() != params.w_self.cols()) {
    throw DimensionError("self projection: embedding width does not match w_self");
  }
  Eigen::MatrixXd out = h_flat * params.w_self;
  out.rowwise() += params.b_self.transpose();
  return out;
}

Eigen::MatrixXd self_projection_backward(const Eigen::MatrixXd& h_flat, const HgaParams& params,
                                         const Eigen::MatrixXd& d_self, HgaParams& grads) {
  grads.w_self.noalias() += h_flat.transpose() * d_self;
  grads.b_self += d_self.colwise().sum().transpose();
  return d_self * params.w_self.transpose();
}

FusedEmbedding hga_forward(const Eigen::MatrixXd& h_self, const Eigen::MatrixXd& h_pos, const Eigen::MatrixXd& h_neg,
                           const HgaParams& params, bool uniform, HgaCache* cache) {
  const std::array<const Eigen::MatrixXd*, 3> sources{&h_self, &h_pos, &h_neg};
  for (const auto* s : sources) {
    if (s->rows() != h_self.rows() || s->cols() != h_self.cols()) {
      throw DimensionError("heterogeneous attention inputs differ in shape");
    }
  }
  if (params.w.rows() != h_self.cols() || params.b.size() != params.w.cols() || params.q.size() != params.w.cols()) {
    throw DimensionError("heterogeneous attention parameters do not match d_att / d_q");
  }
  const auto n = h_self.rows();
  if (n == 0) throw DimensionError("heterogeneous attention needs >= 1 node");

  FusedEmbedding fused;
  if (uniform) {
    fused.betas = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  } else {
    for (int r = 0; r < 3; ++r) {
      Eigen::MatrixXd pre = *sources[r] * params.w;
      pre.rowwise() += params.b.transpose();
      Eigen::MatrixXd act = pre.array().tanh();
      // Fixed-order reduction over nodes.
      double total = 0.0;
      for (Eigen::Index v = 0; v < n; ++v) total += act.row(v).dot(params.q.transpose());
      fused.scores[r] = total / static_cast<double>(n);
      if (cache) cache->activations[r] = std::move(act);
    }
    const double top = std::max({fused.scores[0], fused.scores[1], fused.scores[2]});
    double norm = 0.0;
    for (int r = 0; r < 3; ++r) norm += (fused.betas[r] = std::exp(fused.scores[r] - top));
    for (auto& b : fused.betas) b /= norm;
  }

  fused.z = fused.betas[0] * h_self + fused.betas[1] * h_pos + fused.betas[2] * h_neg;
  if (cache) {
    cache->uniform = uniform;
    for (int r = 0; r < 3; ++r) cache->sources[r] = *sources[r];
  }
  return fused;
}

std::array<Eigen::MatrixXd, 3> hga_backward(const HgaCache& cache, const FusedEmbedding& fused,
                                            const HgaParams& params, const Eigen::MatrixXd& d_z, HgaParams& grads) {
  std::array<Eigen::MatrixXd, 3> d_sources;
  for (int r = 0; r < 3; ++r) d_sources[r] = fused.betas[r] * d_z;
  if (cache.uniform) return d_sources;

  std::array<double, 3> d_beta{};
  for (int r = 0; r < 3; ++r) d_beta[r] = (d_z.array() * cache.sources[r].array()).sum();
  const double mix = fused.betas[0] * d_beta[0] + fused.betas[1] * d_beta[1] + fused.betas[2] * d_beta[2];

  const auto n = static_cast<double>(d_z.rows());
  for (int r = 0; r < 3; ++r) {
    const double d_score = fused.betas[r] * (d_beta[r] - mix);
    const auto& act = cache.activations[r];
    grads.q += (d_score / n) * act.colwise().sum().transpose();
    // d pre = d_score / n * q * (1 - tanh^2), per node.
    Eigen::MatrixXd d_pre = (1.0 - act.array().square()).matrix();
    d_pre = d_pre.array().rowwise() * ((d_score / n) * params.q.transpose()).array();
    grads.w.noalias() += cache.sources[r].transpose() * d_pre;
    grads.b += d_pre.colwise().sum().transpose();
    d_sources[r].noalias() += d_pre * params.w.transpose();
  }
  return d_sources;
}

}  // namespace stockgraph
