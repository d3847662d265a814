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
#include <map>

#include <doctest.h>

#include "helpers.hpp"
#include "stockgraph/errors.hpp"
#include "stockgraph/temporal_attention.hpp"

using namespace stockgraph;

namespace {

double leaky(double x, double slope) { return x > 0 ? x : slope * x; }
double elu(double x) { return x > 0 ? x : std::exp(x) - 1.0; }

// Dense recomputation of one relation's message with scalar loops.
Eigen::MatrixXd loop_tga(const Eigen::MatrixXd& h, const std::vector<std::vector<int>>& nbrs,
                         const RelationTgaParams& p, double slope, std::map<std::tuple<int, int, int>, double>* alpha_out) {
  const int n = static_cast<int>(h.rows());
  const int w = static_cast<int>(h.cols());
  const int heads = static_cast<int>(p.attention.size());
  Eigen::MatrixXd concat = Eigen::MatrixXd::Zero(n, heads * w);
  for (int v = 0; v < n; ++v) {
    if (nbrs[v].empty()) continue;
    for (int k = 0; k < heads; ++k) {
      std::vector<double> e;
      for (int u : nbrs[v]) {
        double s = 0;
        for (int c = 0; c < w; ++c) s += p.attention[k](c) * h(u, c) + p.attention[k](w + c) * h(v, c);
        e.push_back(std::exp(leaky(s, slope)));
      }
      double z = 0;
      for (double x : e) z += x;
      for (int c = 0; c < w; ++c) {
        double agg = 0;
        for (std::size_t j = 0; j < e.size(); ++j) agg += e[j] / z * h(nbrs[v][j], c);
        concat(v, k * w + c) = elu(agg);
      }
      if (alpha_out) {
        for (std::size_t j = 0; j < e.size(); ++j) (*alpha_out)[{k, nbrs[v][j], v}] = e[j] / z;
      }
    }
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, p.w_out.cols());
  for (int v = 0; v < n; ++v) {
    for (int c = 0; c < p.w_out.cols(); ++c) {
      for (int r = 0; r < heads * w; ++r) out(v, c) += concat(v, r) * p.w_out(r, c);
    }
  }
  return out;
}

const std::vector<std::vector<int>> kFiveNode = {{1, 2}, {0, 2, 3}, {0, 1}, {1}, {}};

}  // namespace

TEST_SUITE("temporal_attention") {

TEST_CASE("flatten concatenates rows in order") {
  EncodedSequence seq;
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  seq.h.push_back(m);
  const auto flat = flatten_embeddings(seq);
  REQUIRE(flat.rows() == 1);
  REQUIRE(flat.cols() == 4);
  for (int i = 0; i < 4; ++i) CHECK(flat(0, i) == i + 1);

  EncodedSequence many;
  for (int s = 0; s < 3; ++s) many.h.push_back(testing::random_matrix(5, 3, s));
  const auto back = unflatten_embeddings(flatten_embeddings(many), 5);
  for (int s = 0; s < 3; ++s) CHECK(back.h[s] == many.h[s]);
  CHECK_THROWS_AS(unflatten_embeddings(flatten_embeddings(many), 4), DimensionError);
}

TEST_CASE("dense oracle on a five-node graph with two heads") {
  for (std::uint64_t seed : {1u, 7u, 19u}) {
    const auto h = testing::random_matrix(5, 6, seed);
    const auto params = TgaParams::glorot(6, 2, 3, seed + 100);
    TgaCache cache;
    const auto msg = tga_forward(h, kFiveNode, Relation::kPos, params, false, &cache);
    std::map<std::tuple<int, int, int>, double> alphas;
    const auto ref = loop_tga(h, kFiveNode, params.pos, params.negative_slope, &alphas);
    CHECK((msg.h - ref).cwiseAbs().maxCoeff() < 1e-10);
    REQUIRE(msg.trace.size() == alphas.size());
    for (const auto& e : msg.trace) CHECK(std::abs(e.alpha - alphas.at({e.head, e.u, e.v})) < 1e-12);
    CHECK(msg.h.row(4).isZero(0.0));
  }
}

TEST_CASE("attention weights per target sum to one") {
  const auto h = testing::random_matrix(5, 4, 2, 3.0);
  const auto params = TgaParams::glorot(4, 3, 2, 5);
  const auto msg = tga_forward(h, kFiveNode, Relation::kNeg, params);
  std::map<std::pair<int, int>, double> sums;
  for (const auto& e : msg.trace) {
    CHECK(e.alpha >= 0.0);
    sums[{e.head, e.v}] += e.alpha;
  }
  CHECK(sums.size() == 4 * 3);
  for (const auto& [key, s] : sums) CHECK(std::abs(s - 1.0) < 1e-12);
}

TEST_CASE("single neighbour and identical embeddings") {
  const auto params = TgaParams::glorot(3, 2, 2, 3);
  const auto h = testing::random_matrix(3, 3, 4);
  const auto single = tga_forward(h, {{1}, {}, {}}, Relation::kPos, params);
  for (const auto& e : single.trace) CHECK(e.alpha == 1.0);

  Eigen::MatrixXd same(3, 3);
  same.rowwise() = Eigen::RowVector3d(0.3, -0.2, 0.5);
  const auto twin = tga_forward(same, {{1, 2}, {}, {}}, Relation::kPos, params);
  REQUIRE(twin.trace.size() == 4);
  for (const auto& e : twin.trace) CHECK(std::abs(e.alpha - 0.5) < 1e-15);
}

TEST_CASE("uniform mode weights neighbours equally") {
  const auto h = testing::random_matrix(5, 4, 8);
  const auto params = TgaParams::glorot(4, 2, 3, 9);
  const auto msg = tga_forward(h, kFiveNode, Relation::kPos, params, true);
  for (const auto& e : msg.trace) CHECK(e.alpha == doctest::Approx(1.0 / kFiveNode[e.v].size()).epsilon(1e-15));
}

TEST_CASE("output depends only on the node and its neighbours") {
  const auto params = TgaParams::glorot(4, 2, 3, 11);
  auto h = testing::random_matrix(5, 4, 12);
  const auto base = tga_forward(h, kFiveNode, Relation::kPos, params);
  h.row(3) *= 2.0;
  const auto changed = tga_forward(h, kFiveNode, Relation::kPos, params);
  // Node 3 feeds only node 1; nodes 0, 2 and 4 are untouched.
  CHECK(changed.h.row(0) == base.h.row(0));
  CHECK(changed.h.row(2) == base.h.row(2));
  CHECK(changed.h.row(4) == base.h.row(4));
  CHECK(changed.h.row(1) != base.h.row(1));
}

TEST_CASE("snapshot overload aligns by symbol") {
  RelationSnapshot snap;
  snap.as_of = Date{2024, 3, 1};
  snap.symbols = {"A", "B", "C"};
  snap.pos_edges = {{0, 1, 0.9}};
  snap.neg_edges = {{1, 2, -0.8}};
  const auto params = TgaParams::glorot(2, 1, 2, 1);
  const auto h = testing::random_matrix(3, 2, 1);
  const auto pos = tga_forward(h, snap.symbols, snap, Relation::kPos, params);
  CHECK(pos.h.row(2).isZero(0.0));
  CHECK(!pos.h.row(0).isZero(0.0));
  const auto neg = tga_forward(h, snap.symbols, snap, Relation::kNeg, params);
  CHECK(neg.h.row(0).isZero(0.0));
  CHECK_THROWS_AS(tga_forward(h, std::vector<std::string>{"A", "C", "B"}, snap, Relation::kPos, params), IndexError);
  CHECK_THROWS_AS(tga_forward(h, {{1}, {0}}, Relation::kPos, params), IndexError);
  CHECK_THROWS_AS(tga_forward(h, {{0}, {}, {}}, Relation::kPos, params), IndexError);
  CHECK_THROWS_AS(tga_forward(h, {{5}, {}, {}}, Relation::kPos, params), IndexError);
  CHECK_THROWS_AS(tga_forward(testing::random_matrix(3, 5, 1), snap.symbols, snap, Relation::kPos, params),
                  DimensionError);
}

TEST_CASE("backward matches central differences") {
  for (bool uniform : {false, true}) {
    for (std::uint64_t seed : {3u, 4u}) {
      auto h = testing::random_matrix(5, 4, seed);
      auto params = TgaParams::glorot(4, 2, 3, seed + 50);
      const auto weight = testing::random_matrix(5, 3, seed + 70);
      auto loss = [&] {
        return (tga_forward(h, kFiveNode, Relation::kPos, params, uniform).h.array() * weight.array()).sum();
      };
      TgaCache cache;
      tga_forward(h, kFiveNode, Relation::kPos, params, uniform, &cache);
      auto grads = TgaParams::zeros(4, 2, 3);
      Eigen::MatrixXd d_flat = Eigen::MatrixXd::Zero(5, 4);
      tga_backward(cache, h, Relation::kPos, params, weight, grads, d_flat);

      double worst = 0;
      auto sweep = [&](auto& m, const auto& g) {
        for (Eigen::Index i = 0; i < m.size(); ++i) {
          const double saved = m.data()[i];
          m.data()[i] = saved + 1e-6;
          const double up = loss();
          m.data()[i] = saved - 1e-6;
          const double down = loss();
          m.data()[i] = saved;
          const double fd = (up - down) / 2e-6;
          const double a = g.data()[i];
          if (std::abs(a) < 1e-9 && std::abs(fd) < 1e-9) continue;
          worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-8}));
        }
      };
      for (int k = 0; k < 2; ++k) sweep(params.pos.attention[k], grads.pos.attention[k]);
      sweep(params.pos.w_out, grads.pos.w_out);
      sweep(h, d_flat);
      CHECK(worst < 1e-5);
      if (uniform) {
        for (const auto& a : grads.pos.attention) CHECK(a.isZero(0.0));
      }
      CHECK(grads.neg.w_out.isZero(0.0));
    }
  }
}

}
