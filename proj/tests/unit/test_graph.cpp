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
#include <random>
#include <set>

#include <doctest.h>

#include "helpers.hpp"
#include "stockgraph/errors.hpp"
#include "stockgraph/graph.hpp"

using namespace stockgraph;

namespace {

// Textbook two-pass Pearson on one column pair.
double two_pass_pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    mx += x(i);
    my += y(i);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    sxy += (x(i) - mx) * (y(i) - my);
    sxx += (x(i) - mx) * (x(i) - mx);
    syy += (y(i) - my) * (y(i) - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double oracle_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double total = 0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) total += two_pass_pearson(a.col(c), b.col(c));
  return total / static_cast<double>(a.cols());
}

CorrelationMatrix two_by_two(double r) {
  CorrelationMatrix m;
  m.as_of = Date{2024, 1, 2};
  m.symbols = {"A", "B"};
  m.values.resize(2, 2);
  m.values << 1, r, r, 1;
  return m;
}

RelationSnapshot snapshot_with(int n, const std::vector<std::pair<int, int>>& pos, Date day,
                               const std::vector<std::pair<int, int>>& neg = {}) {
  RelationSnapshot s;
  s.as_of = day;
  for (int i = 0; i < n; ++i) s.symbols.push_back("N" + std::to_string(i));
  for (auto [i, j] : pos) s.pos_edges.push_back({std::min(i, j), std::max(i, j), 0.9});
  for (auto [i, j] : neg) s.neg_edges.push_back({std::min(i, j), std::max(i, j), -0.9});
  return s;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("correlation matrix matches a two-pass Pearson oracle") {
  const auto prices = gen_synthetic_market(testing::tiny_market(10, 60, 20, 5));
  const auto days = common_days(prices);
  for (Date d : {days[20], days[40], days[59]}) {
    const auto w = build_feature_window(prices, d, 20);
    const auto corr = correlation_matrix(w);
    for (int i = 0; i < 10; ++i) {
      CHECK(corr.values(i, i) == 1.0);
      for (int j = 0; j < 10; ++j) {
        if (i != j) CHECK(std::abs(corr.values(i, j) - oracle_correlation(w.data[i], w.data[j])) < 1e-12);
      }
    }
  }
}

TEST_CASE("pairwise correlation on random 20x4 windows matches the oracle") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto a = testing::random_matrix(20, 4, seed);
    const auto b = testing::random_matrix(20, 4, seed + 100);
    CHECK(std::abs(pairwise_correlation(a, b) - oracle_correlation(a, b)) < 1e-12);
  }
}

TEST_CASE("pairwise correlation properties") {
  const auto a = testing::random_matrix(20, 4, 7);
  const auto b = testing::random_matrix(20, 4, 8);
  CHECK(pairwise_correlation(a, a) == doctest::Approx(1.0).epsilon(1e-14));

  Eigen::MatrixXd centered = a.rowwise() - a.colwise().mean();
  CHECK(pairwise_correlation(centered, -centered) == doctest::Approx(-1.0).epsilon(1e-14));

  CHECK(pairwise_correlation(a, b) == pairwise_correlation(b, a));

  Eigen::MatrixXd as = a, bs = b;
  as.col(2) *= 37.5;
  bs.col(2) *= 37.5;
  CHECK(std::abs(pairwise_correlation(as, bs) - pairwise_correlation(a, b)) < 1e-12);

  // A constant channel contributes 0 to the channel mean.
  Eigen::MatrixXd ac = a;
  ac.col(0).setConstant(3.0);
  const double expected = (two_pass_pearson(a.col(1), b.col(1)) + two_pass_pearson(a.col(2), b.col(2)) +
                           two_pass_pearson(a.col(3), b.col(3))) / 4.0;
  CHECK(std::abs(pairwise_correlation(ac, b) - expected) < 1e-12);

  CHECK_THROWS_AS(pairwise_correlation(a, testing::random_matrix(19, 4, 1)), DimensionError);
  CHECK_THROWS_AS(pairwise_correlation(a, testing::random_matrix(20, 3, 1)), DimensionError);
}

TEST_CASE("threshold rule is strict") {
  auto s = build_relation_snapshot(two_by_two(0.7), 0.6);
  CHECK(s.pos_edges.size() == 1);
  CHECK(s.neg_edges.empty());
  CHECK(s.pos_edges[0].weight == 0.7);

  s = build_relation_snapshot(two_by_two(-0.61), 0.6);
  CHECK(s.pos_edges.empty());
  CHECK(s.neg_edges.size() == 1);

  s = build_relation_snapshot(two_by_two(0.6), 0.6);
  CHECK(s.pos_edges.empty());
  CHECK(s.neg_edges.empty());
  s = build_relation_snapshot(two_by_two(-0.6), 0.6);
  CHECK(s.neg_edges.empty());

  CHECK_THROWS_AS(build_relation_snapshot(two_by_two(0.7), 1.5), ConfigError);
  CHECK_THROWS_AS(build_relation_snapshot(two_by_two(0.7), 0.0), ConfigError);
}

TEST_CASE("snapshot edges match hand thresholding, are disjoint and shrink with tau") {
  const auto prices = gen_synthetic_market(testing::tiny_market(10, 60, 20, 5));
  const auto d = common_days(prices)[45];
  const auto corr = correlation_matrix(build_feature_window(prices, d, 20));
  std::size_t previous = SIZE_MAX;
  for (double tau : {0.1, 0.3, 0.6, 0.8, 0.95}) {
    const auto s = build_relation_snapshot(corr, tau);
    std::set<std::pair<int, int>> pos, neg;
    for (const auto& e : s.pos_edges) {
      CHECK(e.i < e.j);
      CHECK(e.weight > tau);
      pos.insert({e.i, e.j});
    }
    for (const auto& e : s.neg_edges) {
      CHECK(e.weight < -tau);
      neg.insert({e.i, e.j});
    }
    for (int i = 0; i < 10; ++i) {
      for (int j = i + 1; j < 10; ++j) {
        CHECK(pos.count({i, j}) == (corr.values(i, j) > tau ? 1u : 0u));
        CHECK(neg.count({i, j}) == (corr.values(i, j) < -tau ? 1u : 0u));
        CHECK(!(pos.count({i, j}) && neg.count({i, j})));
      }
    }
    const auto total = s.pos_edges.size() + s.neg_edges.size();
    CHECK(total <= previous);
    previous = total;
  }
}

TEST_CASE("temporal graph construction") {
  const auto prices = gen_synthetic_market(testing::tiny_market(10, 60, 10, 5));
  const auto days = common_days(prices);
  SUBCASE("one day gives one snapshot") {
    const std::vector<Date> one{days[30]};
    const auto g = build_temporal_graph(prices, one, 10, 0.6, 1, 0);
    CHECK(g.snapshots.size() == 1);
    CHECK(g.snapshots[0].as_of == days[30]);
  }
  SUBCASE("planted 0.9 pair is a pos edge on every day") {
    const std::vector<Date> span(days.begin() + 10, days.end());
    const auto g = build_temporal_graph(prices, span, 10, 0.6, 1, 0);
    for (const auto& s : g.snapshots) {
      bool found = false;
      for (const auto& e : s.pos_edges) found = found || (e.i == 0 && e.j == 1);
      CHECK(found);
    }
  }
  SUBCASE("snapshots do not depend on request order") {
    const std::vector<Date> fwd{days[20], days[30], days[40]};
    const std::vector<Date> rev{days[40], days[20], days[30]};
    const auto a = build_temporal_graph(prices, fwd, 10, 0.5, 1, 0);
    const auto b = build_temporal_graph(prices, rev, 10, 0.5, 1, 0);
    for (Date d : fwd) {
      CHECK(a.at(d).pos_edges == b.at(d).pos_edges);
      CHECK(a.at(d).neg_edges == b.at(d).neg_edges);
    }
  }
  SUBCASE("insufficient history") {
    const std::vector<Date> early{days[3]};
    CHECK_THROWS_AS(build_temporal_graph(prices, early, 10, 0.6, 1, 0), CoverageError);
  }
}

TEST_CASE("neighborhood matches a Floyd-Warshall distance oracle") {
  std::mt19937_64 rng(21);
  std::bernoulli_distribution coin(0.2);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10;
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (coin(rng)) edges.push_back({i, j});
      }
    }
    const Date day{2024, 3, 4};
    TemporalHeteroGraph g;
    g.snapshots = {snapshot_with(n, edges, day)};
    g.hop_bound = 2;
    g.time_bound = 0;

    std::vector<std::vector<int>> dist(n, std::vector<int>(n, 1 << 20));
    for (int i = 0; i < n; ++i) dist[i][i] = 0;
    for (auto [i, j] : edges) dist[i][j] = dist[j][i] = 1;
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);
      }
    }
    const auto lists = neighbor_lists(g.snapshots[0], Relation::kPos, 2);
    for (int v = 0; v < n; ++v) {
      std::set<std::pair<std::string, Date>> expected;
      std::vector<int> expected_idx;
      for (int u = 0; u < n; ++u) {
        if (u != v && dist[v][u] <= 2) {
          expected.insert({"N" + std::to_string(u), day});
          expected_idx.push_back(u);
        }
      }
      CHECK(neighborhood(g, "N" + std::to_string(v), day, Relation::kPos) == expected);
      CHECK(lists[v] == expected_idx);
      CHECK(neighborhood(g, "N" + std::to_string(v), day, Relation::kNeg).empty());
    }
  }
}

TEST_CASE("neighborhood edge cases") {
  const auto days = testing::weekdays(3);
  TemporalHeteroGraph g;
  g.snapshots = {snapshot_with(5, {{0, 1}}, days[0]), snapshot_with(5, {{0, 1}, {0, 2}, {0, 3}}, days[1]),
                 snapshot_with(5, {{0, 4}}, days[2])};
  g.hop_bound = 1;
  g.time_bound = 0;

  CHECK(neighborhood(g, "N4", days[1], Relation::kPos).empty());
  const std::set<std::pair<std::string, Date>> leaves{{"N1", days[1]}, {"N2", days[1]}, {"N3", days[1]}};
  CHECK(neighborhood(g, "N0", days[1], Relation::kPos) == leaves);

  g.time_bound = 1;
  const std::set<std::pair<std::string, Date>> widened{{"N1", days[0]}, {"N1", days[1]}, {"N2", days[1]},
                                                       {"N3", days[1]}, {"N4", days[2]}};
  CHECK(neighborhood(g, "N0", days[1], Relation::kPos) == widened);
  CHECK(neighborhood(g, "N0", days[0], Relation::kPos) ==
        std::set<std::pair<std::string, Date>>{{"N1", days[0]}, {"N1", days[1]}, {"N2", days[1]}, {"N3", days[1]}});

  CHECK_THROWS_AS(neighborhood(g, "ZZZ", days[1], Relation::kPos), LookupError);
  CHECK_THROWS_AS(neighborhood(g, "N0", Date{2030, 1, 1}, Relation::kPos), LookupError);
}

TEST_CASE("snapshot JSON and directory round trips") {
  const auto prices = gen_synthetic_market(testing::tiny_market(10, 60, 10, 5));
  const auto days = common_days(prices);
  const std::vector<Date> span(days.begin() + 10, days.begin() + 20);
  const auto g = build_temporal_graph(prices, span, 10, 0.3, 1, 0);

  const auto back = snapshot_from_json(snapshot_to_json(g.snapshots[0]));
  CHECK(back.as_of == g.snapshots[0].as_of);
  CHECK(back.symbols == g.snapshots[0].symbols);
  CHECK(back.pos_edges == g.snapshots[0].pos_edges);
  CHECK(back.neg_edges == g.snapshots[0].neg_edges);

  const auto dir = testing::scratch_dir("graph");
  save_graph(g, dir);
  const auto loaded = load_graph(dir, 2, 1);
  CHECK(loaded.hop_bound == 2);
  CHECK(loaded.time_bound == 1);
  REQUIRE(loaded.snapshots.size() == g.snapshots.size());
  for (std::size_t i = 0; i < g.snapshots.size(); ++i) {
    CHECK(loaded.snapshots[i].as_of == g.snapshots[i].as_of);
    CHECK(loaded.snapshots[i].pos_edges == g.snapshots[i].pos_edges);
    CHECK(loaded.snapshots[i].neg_edges == g.snapshots[i].neg_edges);
  }
  CHECK_THROWS(snapshot_from_json("{\"as_of\": \"2024-01-01\"}"));
  CHECK_THROWS(snapshot_from_json("not json"));
}

}
