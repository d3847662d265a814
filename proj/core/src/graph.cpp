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

#include "stockgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stockgraph/errors.hpp"

namespace stockgraph {

namespace {

bool is_constant(const Eigen::Ref<const Eigen::VectorXd>& v) { return v.maxCoeff() == v.minCoeff(); }

std::vector<std::vector<int>> direct_adjacency(const RelationSnapshot& s, Relation r) {
  std::vector<std::vector<int>> adj(s.symbols.size());
  for (const Edge& e : s.edges(r)) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  for (auto& list : adj) std::sort(list.begin(), list.end());
  return adj;
}

// Nodes reachable from `source` in 1..hops steps, ascending.
std::vector<int> bfs_within(const std::vector<std::vector<int>>& adj, int source, int hops) {
  std::vector<int> depth(adj.size(), -1);
  std::deque<int> queue{source};
  depth[source] = 0;
  std::vector<int> out;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    if (depth[u] == hops) continue;
    for (int w : adj[u]) {
      if (depth[w] != -1) continue;
      depth[w] = depth[u] + 1;
      out.push_back(w);
      queue.push_back(w);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string_view to_string(Relation r) { return r == Relation::kPos ? "pos" : "neg"; }

int RelationSnapshot::index_of(std::string_view symbol) const {
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (symbols[i] == symbol) return static_cast<int>(i);
  }
  return -1;
}

std::size_t TemporalHeteroGraph::snapshot_index(Date day) const {
  auto it = std::lower_bound(snapshots.begin(), snapshots.end(), day,
                             [](const RelationSnapshot& s, Date d) { return s.as_of < d; });
  if (it == snapshots.end() || it->as_of != day) throw LookupError("no snapshot for " + day.iso());
  return static_cast<std::size_t>(it - snapshots.begin());
}

double pairwise_correlation(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("correlation windows differ in shape");
  }
  if (a.rows() < 2 || a.cols() < 1) throw DimensionError("correlation needs >= 2 rows and >= 1 column");

  double total = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    if (is_constant(a.col(c)) || is_constant(b.col(c))) continue;
    const Eigen::VectorXd ca = a.col(c).array() - a.col(c).mean();
    const Eigen::VectorXd cb = b.col(c).array() - b.col(c).mean();
    const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
    if (denom == 0.0) continue;
    total += std::clamp(ca.dot(cb) / denom, -1.0, 1.0);
  }
  return total / static_cast<double>(a.cols());
}

CorrelationMatrix correlation_matrix(const FeatureWindow& window) {
  const int n = window.size();
  CorrelationMatrix corr{window.as_of, window.symbols, Eigen::MatrixXd::Identity(n, n)};
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double r = pairwise_correlation(window.data[i], window.data[j]);
      corr.values(i, j) = r;
      corr.values(j, i) = r;
    }
  }
  return corr;
}

RelationSnapshot build_relation_snapshot(const CorrelationMatrix& corr, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("edge threshold must lie in (0, 1)");
  if (corr.symbols.size() < 2) throw DimensionError("a relation snapshot needs >= 2 symbols");
  RelationSnapshot s{corr.as_of, corr.symbols, {}, {}};
  const auto n = static_cast<int>(corr.symbols.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double r = corr.values(i, j);
      if (r > threshold) {
        s.pos_edges.push_back({i, j, r});
      } else if (r < -threshold) {
        s.neg_edges.push_back({i, j, r});
      }
    }
  }
  return s;
}

RelationSnapshot build_relation_snapshot(const FeatureWindow& window, double threshold) {
  return build_relation_snapshot(correlation_matrix(window), threshold);
}

TemporalHeteroGraph build_temporal_graph(const PriceTable& series, std::span<const Date> days, int lookback,
                                         double threshold, int hop_bound, int time_bound) {
  if (hop_bound < 1) throw ConfigError("hop bound d_N must be >= 1");
  if (time_bound < 0) throw ConfigError("time bound t_N must be >= 0");
  std::vector<Date> sorted(days.begin(), days.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  TemporalHeteroGraph graph;
  graph.hop_bound = hop_bound;
  graph.time_bound = time_bound;
  graph.snapshots.reserve(sorted.size());
  for (Date day : sorted) {
    graph.snapshots.push_back(build_relation_snapshot(build_feature_window(series, day, lookback), threshold));
  }
  return graph;
}

std::vector<std::vector<int>> neighbor_lists(const RelationSnapshot& snapshot, Relation r, int hops) {
  auto adj = direct_adjacency(snapshot, r);
  if (hops <= 1) return adj;
  std::vector<std::vector<int>> out(adj.size());
  for (std::size_t v = 0; v < adj.size(); ++v) out[v] = bfs_within(adj, static_cast<int>(v), hops);
  return out;
}

std::set<std::pair<std::string, Date>> neighborhood(const TemporalHeteroGraph& graph, std::string_view symbol,
                                                    Date day, Relation r) {
  const std::size_t center = graph.snapshot_index(day);
  if (graph.snapshots[center].index_of(symbol) < 0) {
    throw LookupError("unknown symbol '" + std::string(symbol) + "' on " + day.iso());
  }
  const std::size_t lo = center >= static_cast<std::size_t>(graph.time_bound) ? center - graph.time_bound : 0;
  const std::size_t hi = std::min(graph.snapshots.size() - 1, center + graph.time_bound);

  std::set<std::pair<std::string, Date>> out;
  for (std::size_t s = lo; s <= hi; ++s) {
    const auto& snap = graph.snapshots[s];
    const int source = snap.index_of(symbol);
    if (source < 0) continue;
    for (int u : bfs_within(direct_adjacency(snap, r), source, graph.hop_bound)) {
      out.emplace(snap.symbols[u], snap.as_of);
    }
  }
  return out;
}

std::string snapshot_to_json(const RelationSnapshot& snapshot) {
  nlohmann::json doc;
  doc["as_of"] = snapshot.as_of.iso();
  doc["symbols"] = snapshot.symbols;
  for (Relation r : {Relation::kPos, Relation::kNeg}) {
    auto edges = nlohmann::json::array();
    for (const Edge& e : snapshot.edges(r)) edges.push_back({e.i, e.j, e.weight});
    doc[std::string(to_string(r))] = std::move(edges);
  }
  return doc.dump();
}

RelationSnapshot snapshot_from_json(std::string_view text) {
  RelationSnapshot s;
  try {
    const auto doc = nlohmann::json::parse(text);
    s.as_of = Date::parse(doc.at("as_of").get<std::string>());
    s.symbols = doc.at("symbols").get<std::vector<std::string>>();
    const int n = static_cast<int>(s.symbols.size());
    for (Relation r : {Relation::kPos, Relation::kNeg}) {
      auto& edges = r == Relation::kPos ? s.pos_edges : s.neg_edges;
      for (const auto& e : doc.at(std::string(to_string(r)))) {
        Edge edge{e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()};
        if (edge.i < 0 || edge.j < 0 || edge.i >= n || edge.j >= n || edge.i == edge.j) {
          throw IndexError("edge index out of range in snapshot " + s.as_of.iso());
        }
        edges.push_back(edge);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed snapshot JSON: ") + e.what());
  }
  return s;
}

void save_snapshot(const RelationSnapshot& snapshot, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << snapshot_to_json(snapshot) << '\n';
}

RelationSnapshot load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return snapshot_from_json(buf.str());
}

void save_graph(const TemporalHeteroGraph& graph, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& s : graph.snapshots) save_snapshot(s, dir / (s.as_of.iso() + ".json"));
}

TemporalHeteroGraph load_graph(const std::filesystem::path& dir, int hop_bound, int time_bound) {
  if (!std::filesystem::is_directory(dir)) throw IoError("graph directory not found: " + dir.string());
  TemporalHeteroGraph graph;
  graph.hop_bound = hop_bound;
  graph.time_bound = time_bound;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") graph.snapshots.push_back(load_snapshot(entry.path()));
  }
  std::sort(graph.snapshots.begin(), graph.snapshots.end(),
            [](const RelationSnapshot& a, const RelationSnapshot& b) { return a.as_of < b.as_of; });
  return graph;
}

}  // namespace stockgraph
