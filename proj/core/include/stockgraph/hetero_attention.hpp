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

namespace stockgraph {

/// Self projection plus the transform (w, b, q) shared by all three message sources.
struct HgaParams {
  Eigen::MatrixXd w_self;  // width x d_att
  Eigen::VectorXd b_self;  // d_att
  Eigen::MatrixXd w;       // d_att x d_q
  Eigen::VectorXd b;       // d_q
  Eigen::VectorXd q;       // d_q

  static HgaParams zeros(int width, int d_att, int d_q);
  static HgaParams glorot(int width, int d_att, int d_q, std::uint64_t seed);

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    f("hga.w_self", self.w_self);
    f("hga.b_self", self.b_self);
    f("hga.w", self.w);
    f("hga.b", self.b);
    f("hga.q", self.q);
  }
};

enum Source { kSelf = 0, kPosSource = 1, kNegSource = 2 };

struct FusedEmbedding {
  Eigen::MatrixXd z;           // n x d_att
  std::array<double, 3> betas{};  // self, pos, neg
  std::array<double, 3> scores{};  // w_r before the softmax
};

struct HgaCache {
  std::array<Eigen::MatrixXd, 3> sources;
  std::array<Eigen::MatrixXd, 3> activations;  // tanh(h W + b) per source
  bool uniform = false;
};

/// Row-wise affine map h_flat * w_self + b_self.
Eigen::MatrixXd self_projection(const Eigen::MatrixXd& h_flat, const HgaParams& params);

/// w_r = mean_v q^T tanh(W h_{v,r} + b); beta = softmax(w); z = sum_r beta_r H_r.
/// With `uniform`, beta is fixed at 1/3 each.
FusedEmbedding hga_forward(const Eigen::MatrixXd& h_self, const Eigen::MatrixXd& h_pos, const Eigen::MatrixXd& h_neg,
                           const HgaParams& params, bool uniform = false, HgaCache* cache = nullptr);

/// Accumulates gradients of (w, b, q) and returns dLoss/dH_r for the three sources.
std::array<Eigen::MatrixXd, 3> hga_backward(const HgaCache& cache, const FusedEmbedding& fused,
                                            const HgaParams& params, const Eigen::MatrixXd& d_z, HgaParams& grads);

/// Gradient of self_projection; returns dLoss/dh_flat.
Eigen::MatrixXd self_projection_backward(const Eigen::MatrixXd& h_flat, const HgaParams& params,
                                         const Eigen::MatrixXd& d_self, HgaParams& grads);

}  // namespace stockgraph
