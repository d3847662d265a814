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

#include <doctest.h>

#include "helpers.hpp"
#include "stockgraph/errors.hpp"
#include "stockgraph/hetero_attention.hpp"

using namespace stockgraph;

TEST_SUITE("hetero_attention") {

TEST_CASE("self projection") {
  const auto h = testing::random_matrix(4, 6, 1);
  auto p = HgaParams::zeros(6, 6, 2);
  CHECK(self_projection(h, p).isZero(0.0));
  p.w_self = Eigen::MatrixXd::Identity(6, 6);
  CHECK(self_projection(h, p) == h);

  auto q = HgaParams::glorot(6, 3, 2, 4);
  q.b_self = Eigen::Vector3d(0.1, -0.2, 0.3);
  const auto out = self_projection(h, q);
  for (int v = 0; v < 4; ++v) {
    for (int c = 0; c < 3; ++c) {
      double s = q.b_self(c);
      for (int i = 0; i < 6; ++i) s += h(v, i) * q.w_self(i, c);
      CHECK(std::abs(out(v, c) - s) < 1e-14);
    }
  }
  CHECK_THROWS_AS(self_projection(testing::random_matrix(4, 5, 1), q), DimensionError);
}

TEST_CASE("fusion matches a scalar-loop oracle") {
  // n = 4, d_att = 3, d_q = 2.
  Eigen::MatrixXd hs(4, 3), hp(4, 3), hn(4, 3);
  hs << 0.1, 0.2, 0.3, -0.4, 0.5, 0.0, 0.7, -0.1, 0.2, 0.0, 0.3, -0.6;
  hp << 1.0, 0.0, -1.0, 0.2, 0.2, 0.2, -0.3, 0.9, 0.1, 0.4, -0.5, 0.6;
  hn << -0.2, -0.2, 0.8, 0.6, -0.7, 0.3, 0.0, 0.0, 0.0, 0.5, 0.5, -0.5;
  HgaParams p = HgaParams::zeros(3, 3, 2);
  p.w << 0.5, -0.3, 0.2, 0.8, -0.6, 0.1;
  p.b << 0.05, -0.1;
  p.q << 1.2, -0.7;

  const std::array<const Eigen::MatrixXd*, 3> src{&hs, &hp, &hn};
  double w[3];
  for (int r = 0; r < 3; ++r) {
    double total = 0;
    for (int v = 0; v < 4; ++v) {
      for (int j = 0; j < 2; ++j) {
        double pre = p.b(j);
        for (int c = 0; c < 3; ++c) pre += (*src[r])(v, c) * p.w(c, j);
        total += p.q(j) * std::tanh(pre);
      }
    }
    w[r] = total / 4.0;
  }
  const double z = std::exp(w[0]) + std::exp(w[1]) + std::exp(w[2]);
  const auto fused = hga_forward(hs, hp, hn, p);
  for (int r = 0; r < 3; ++r) {
    CHECK(std::abs(fused.scores[r] - w[r]) < 1e-14);
    CHECK(std::abs(fused.betas[r] - std::exp(w[r]) / z) < 1e-14);
  }
  const Eigen::MatrixXd expected = std::exp(w[0]) / z * hs + std::exp(w[1]) / z * hp + std::exp(w[2]) / z * hn;
  CHECK((fused.z - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("identical sources and zero query give uniform weights") {
  const auto h = testing::random_matrix(5, 4, 3);
  const auto p = HgaParams::glorot(4, 4, 3, 2);
  const auto same = hga_forward(h, h, h, p);
  for (double b : same.betas) CHECK(std::abs(b - 1.0 / 3.0) < 1e-15);
  CHECK((same.z - h).cwiseAbs().maxCoeff() < 1e-15);

  auto zero_q = p;
  zero_q.q.setZero();
  const auto flat = hga_forward(h, testing::random_matrix(5, 4, 4), testing::random_matrix(5, 4, 5), zero_q);
  for (double b : flat.betas) CHECK(b == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto forced = hga_forward(h, testing::random_matrix(5, 4, 4), testing::random_matrix(5, 4, 5), p, true);
  for (double b : forced.betas) CHECK(b == 1.0 / 3.0);
}

TEST_CASE("weights form a convex combination") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto hs = testing::random_matrix(6, 3, seed, 4.0);
    const auto hp = testing::random_matrix(6, 3, seed + 100, 4.0);
    const auto hn = testing::random_matrix(6, 3, seed + 200, 4.0);
    const auto p = HgaParams::glorot(3, 3, 5, seed);
    const auto fused = hga_forward(hs, hp, hn, p);
    double sum = 0;
    for (double b : fused.betas) {
      CHECK(b > 0.0);
      CHECK(b < 1.0);
      sum += b;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
    const Eigen::ArrayXXd lo = hs.array().min(hp.array()).min(hn.array());
    const Eigen::ArrayXXd hi = hs.array().max(hp.array()).max(hn.array());
    CHECK((fused.z.array() >= lo - 1e-12).all());
    CHECK((fused.z.array() <= hi + 1e-12).all());
  }
}

TEST_CASE("shape errors") {
  const auto p = HgaParams::glorot(3, 3, 2, 1);
  const auto h = testing::random_matrix(4, 3, 1);
  CHECK_THROWS_AS(hga_forward(h, testing::random_matrix(3, 3, 1), h, p), DimensionError);
  CHECK_THROWS_AS(hga_forward(h, h, testing::random_matrix(4, 2, 1), p), DimensionError);
  const auto wide = testing::random_matrix(4, 5, 1);
  CHECK_THROWS_AS(hga_forward(wide, wide, wide, p), DimensionError);
  const Eigen::MatrixXd empty(0, 3);
  CHECK_THROWS_AS(hga_forward(empty, empty, empty, p), DimensionError);
}

TEST_CASE("backward matches central differences") {
  for (bool uniform : {false, true}) {
    std::array<Eigen::MatrixXd, 3> src{testing::random_matrix(5, 3, 1), testing::random_matrix(5, 3, 2),
                                       testing::random_matrix(5, 3, 3)};
    auto p = HgaParams::glorot(3, 3, 4, 9);
    p.b = Eigen::Vector4d(0.1, -0.2, 0.05, 0.3);
    const auto weight = testing::random_matrix(5, 3, 10);
    auto loss = [&] { return (hga_forward(src[0], src[1], src[2], p, uniform).z.array() * weight.array()).sum(); };
    HgaCache cache;
    const auto fused = hga_forward(src[0], src[1], src[2], p, uniform, &cache);
    auto grads = HgaParams::zeros(3, 3, 4);
    const auto d_src = hga_backward(cache, fused, p, weight, grads);

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
    sweep(p.w, grads.w);
    sweep(p.b, grads.b);
    sweep(p.q, grads.q);
    for (int r = 0; r < 3; ++r) sweep(src[r], d_src[r]);
    CHECK(worst < 1e-5);
    if (uniform) CHECK(grads.q.isZero(0.0));
  }
}

}
