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

#include <cstdint>
#include <vector>

#include "stockgraph/encoder.hpp"
#include "stockgraph/graph.hpp"

namespace stockgraph {

/// Attention vectors and output projection of one relation.
struct RelationTgaParams {
  std::vector<Eigen::VectorXd> attention;  // per head, length 2 * width: [source | target]
  Eigen::MatrixXd w_out;                   // (heads * width) x d_att
};

struct TgaParams {
  RelationTgaParams pos;
  RelationTgaParams neg;
  double negative_slope = 0.2;

  const RelationTgaParams& of(Relation r) const { return r == Relation::kPos ? pos : neg; }
  RelationTgaParams& of(Relation r) { return r == Relation::kPos ? pos : neg; }

  static TgaParams zeros(int width, int heads, int d_att);
  static TgaParams glorot(int width, int heads, int d_att, std::uint64_t seed);

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    for (Relation r : {Relation::kPos, Relation::kNeg}) {
      auto& rel = self.of(r);
      const std::string prefix = "tga." + std::string(to_string(r));
      for (std::size_t h = 0; h < rel.attention.size(); ++h) f(prefix + ".attention." + std::to_string(h), rel.attention[h]);
      f(prefix + ".w_out", rel.w_out);
    }
  }
};

/// alpha of edge u -> v in one head.
struct AttentionEntry {
  int head = 0;
  int u = 0;
  int v = 0;
  double alpha = 0.0;
};

struct RelationMessage {
  Relation relation = Relation::kPos;
  Eigen::MatrixXd h;  // n x d_att
  std::vector<AttentionEntry> trace;
};

struct RelationMessages {
  RelationMessage pos;
  RelationMessage neg;
};

struct TgaCache {
  struct Node {
    std::vector<int> neighbors;
    std::vector<Eigen::VectorXd> logits;  // per head, pre-activation scores
    std::vector<Eigen::VectorXd> alpha;   // per head
    std::vector<Eigen::VectorXd> agg;     // per head, before ELU
  };
  std::vector<Node> nodes;
  Eigen::MatrixXd concat;  // n x heads * width
  bool uniform = false;
};

/// Row v = v's per-position vectors concatenated oldest first.
Eigen::MatrixXd flatten_embeddings(const EncodedSequence& h);
EncodedSequence unflatten_embeddings(const Eigen::MatrixXd& flat, int lookback);

/// Multi-head additive attention of one relation over the given neighbor lists.
/// Each head: alpha = softmax_u LeakyReLU(a^T [h_u || h_v]), output ELU(sum alpha h_u);
/// heads concatenated then projected. Nodes without neighbors get a zero row.
/// With `uniform` every neighbor gets weight 1/|N(v)| and attention vectors are unused.
RelationMessage tga_forward(const Eigen::MatrixXd& h_flat, const std::vector<std::vector<int>>& neighbors,
                            Relation r, const TgaParams& params, bool uniform = false, TgaCache* cache = nullptr);

/// Same, reading the relation's direct neighbors from a snapshot whose symbols
/// must match `symbols` row for row (IndexError otherwise).
RelationMessage tga_forward(const Eigen::MatrixXd& h_flat, const std::vector<std::string>& symbols,
                            const RelationSnapshot& snapshot, Relation r, const TgaParams& params,
                            bool uniform = false, TgaCache* cache = nullptr);

/// Accumulates gradients for the relation's parameters and adds dLoss/dh_flat into `d_flat`.
void tga_backward(const TgaCache& cache, const Eigen::MatrixXd& h_flat, Relation r, const TgaParams& params,
                  const Eigen::MatrixXd& d_out, TgaParams& grads, Eigen::MatrixXd& d_flat);

}  // namespace stockgraph
