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

#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stockgraph/date.hpp"
#include "stockgraph/market_data.hpp"

namespace stockgraph {

enum class Relation { kPos, kNeg };

std::string_view to_string(Relation r);

struct CorrelationMatrix {
  Date as_of;
  std::vector<std::string> symbols;
  Eigen::MatrixXd values;
};

/// Unordered pair i < j of indices into the snapshot's symbols.
struct Edge {
  int i = 0;
  int j = 0;
  double weight = 0.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// One day of the relation graph. Edge weights are kept for diagnostics only.
struct RelationSnapshot {
  Date as_of;
  std::vector<std::string> symbols;
  std::vector<Edge> pos_edges;
  std::vector<Edge> neg_edges;

  const std::vector<Edge>& edges(Relation r) const { return r == Relation::kPos ? pos_edges : neg_edges; }
  int index_of(std::string_view symbol) const;
};

/// Sequence of snapshots over trading days plus the neighborhood bounds.
struct TemporalHeteroGraph {
  std::vector<RelationSnapshot> snapshots;
  int hop_bound = 1;   // d_N
  int time_bound = 0;  // t_N, in snapshots

  /// Index of the snapshot dated `day`; throws LookupError when absent.
  std::size_t snapshot_index(Date day) const;
  const RelationSnapshot& at(Date day) const { return snapshots[snapshot_index(day)]; }
};

/// Mean over columns of the Pearson correlation between matching columns of
/// `a` and `b`. A column that is constant in either window contributes 0.
double pairwise_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

CorrelationMatrix correlation_matrix(const FeatureWindow& window);

/// Pos edge iff correlation > threshold, neg edge iff correlation < -threshold.
RelationSnapshot build_relation_snapshot(const FeatureWindow& window, double threshold);
RelationSnapshot build_relation_snapshot(const CorrelationMatrix& corr, double threshold);

/// One snapshot per requested day, each from that day's trailing feature window.
TemporalHeteroGraph build_temporal_graph(const PriceTable& series, std::span<const Date> days, int lookback,
                                         double threshold, int hop_bound, int time_bound);

/// Per-node neighbor lists of one relation within `hops` hops on a single snapshot, ascending.
std::vector<std::vector<int>> neighbor_lists(const RelationSnapshot& snapshot, Relation r, int hops = 1);

/// Temporal nodes within hop_bound hops of `symbol` along relation `r` edges, on
/// snapshots within time_bound trading days of `day`. `symbol` itself is excluded.
std::set<std::pair<std::string, Date>> neighborhood(const TemporalHeteroGraph& graph, std::string_view symbol,
                                                    Date day, Relation r);

/// `{as_of, symbols, pos: [[i, j, w]...], neg: [[i, j, w]...]}`
std::string snapshot_to_json(const RelationSnapshot& snapshot);
RelationSnapshot snapshot_from_json(std::string_view text);

void save_snapshot(const RelationSnapshot& snapshot, const std::filesystem::path& path);
RelationSnapshot load_snapshot(const std::filesystem::path& path);

/// Writes `<dir>/<as_of>.json` per snapshot.
void save_graph(const TemporalHeteroGraph& graph, const std::filesystem::path& dir);
/// Loads every `*.json` snapshot in `dir`, sorted by date.
TemporalHeteroGraph load_graph(const std::filesystem::path& dir, int hop_bound, int time_bound);

}  // namespace stockgraph
