// Copyright 2026 The surfent Authors.
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

#include "surfent/mi_graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace surfent {

namespace {

// Union-find over subset indices for Kruskal's construction.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[a] = b;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

struct CandidateEdge {
  double weight = 0.0;
  SurfacePair pair;
  bool synthetic = false;
};

// Deterministic Kruskal order: heavier first, ties by pair name, measured
// edges before chain substitutes.
void sort_candidates(std::vector<CandidateEdge>& candidates) {
  std::sort(candidates.begin(), candidates.end(),
            [](const CandidateEdge& x, const CandidateEdge& y) {
              if (x.weight != y.weight) return x.weight > y.weight;
              if (x.pair != y.pair) return x.pair < y.pair;
              return x.synthetic < y.synthetic;
            });
}

std::map<SurfaceId, std::size_t> index_subset(
    const MiGraph& graph, const std::set<SurfaceId>& subset) {
  std::map<SurfaceId, std::size_t> index;
  for (const auto& id : subset) {
    if (!graph.has_node(id)) {
      throw std::invalid_argument("unknown surface: " + id);
    }
    index.emplace(id, index.size());
  }
  return index;
}

std::vector<SurfacePair> kruskal(
    const std::map<SurfaceId, std::size_t>& index,
    std::vector<CandidateEdge> candidates) {
  sort_candidates(candidates);
  DisjointSets sets(index.size());
  std::vector<SurfacePair> forest;
  for (const auto& cand : candidates) {
    if (sets.unite(index.at(cand.pair.first), index.at(cand.pair.second))) {
      forest.push_back(cand.pair);
    }
  }
  return forest;
}

}  // namespace

void MiGraph::add_node(const SurfaceId& id, const EntropyEstimate& estimate,
                       std::optional<double> entropy_override) {
  if (id.empty()) throw std::invalid_argument("empty surface id");
  GraphNode node;
  node.entropy = estimate;
  node.entropy_override = entropy_override;
  nodes_[id] = node;
}

void MiGraph::add_edge(const SurfaceId& a, const SurfaceId& b,
                       const MiEstimate& estimate) {
  if (a == b) throw std::invalid_argument("self-edge: " + a);
  if (!has_node(a)) throw std::invalid_argument("unknown surface: " + a);
  if (!has_node(b)) throw std::invalid_argument("unknown surface: " + b);
  GraphEdge edge;
  edge.mi = estimate;
  const double min_h = std::min(node_entropy_bits(a), node_entropy_bits(b));
  edge.inconsistent = estimate.ci_low > min_h + 1e-9;
  edges_[canonical_pair(a, b)] = edge;
}

void MiGraph::remove_edge(const SurfaceId& a, const SurfaceId& b) {
  edges_.erase(canonical_pair(a, b));
}

double MiGraph::node_entropy_bits(const SurfaceId& id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) throw std::invalid_argument("unknown surface: " + id);
  return it->second.entropy_bits();
}

const GraphEdge* MiGraph::find_edge(const SurfaceId& a,
                                    const SurfaceId& b) const {
  const auto it = edges_.find(canonical_pair(a, b));
  return it == edges_.end() ? nullptr : &it->second;
}

double MiGraph::edge_weight_bits(const SurfaceId& a, const SurfaceId& b) const {
  const GraphEdge* edge = find_edge(a, b);
  if (edge == nullptr) throw std::invalid_argument("no edge: " + a + "," + b);
  const double min_h = std::min(node_entropy_bits(a), node_entropy_bits(b));
  return std::min(edge->mi.point, min_h);
}

std::vector<SurfacePair> max_spanning_forest(const MiGraph& graph,
                                             const std::set<SurfaceId>& subset) {
  const auto index = index_subset(graph, subset);
  std::vector<CandidateEdge> candidates;
  for (const auto& [pair, edge] : graph.edges()) {
    if (!subset.contains(pair.first) || !subset.contains(pair.second)) continue;
    if (!edge.mi.reliable) continue;
    candidates.push_back(
        {graph.edge_weight_bits(pair.first, pair.second), pair, false});
  }
  return kruskal(index, std::move(candidates));
}

EntropyBound chow_liu_upper_bound(const MiGraph& graph,
                                  const std::set<SurfaceId>& subset,
                                  const BoundOptions& options) {
  if (subset.empty()) throw std::invalid_argument("empty subset");
  const auto index = index_subset(graph, subset);

  std::vector<CandidateEdge> candidates;
  std::size_t omitted = 0;
  std::set<SurfacePair> measured_reliable;
  for (const auto& [pair, edge] : graph.edges()) {
    if (!subset.contains(pair.first) || !subset.contains(pair.second)) continue;
    if (!edge.mi.reliable) {
      ++omitted;
      continue;
    }
    measured_reliable.insert(pair);
    candidates.push_back(
        {graph.edge_weight_bits(pair.first, pair.second), pair, false});
  }

  std::map<SurfacePair, double> chain_weights;
  if (options.use_chain_bounds) {
    // Substitute chains for every subset pair lacking a reliable direct
    // edge. Chains may route through surfaces outside the subset: the
    // resulting value lower-bounds the true pairwise MI either way.
    for (auto a = subset.begin(); a != subset.end(); ++a) {
      for (auto b = std::next(a); b != subset.end(); ++b) {
        const SurfacePair pair = MiGraph::canonical_pair(*a, *b);
        if (measured_reliable.contains(pair)) continue;
        const double w = best_chain_weight(graph, *a, *b);
        if (w > 0.0) {
          candidates.push_back({w, pair, true});
          chain_weights.emplace(pair, w);
        }
      }
    }
  }

  EntropyBound bound;
  bound.method = BoundMethod::kChowLiu;
  bound.omitted_edges = omitted;
  bound.tree_edges = kruskal(index, std::move(candidates));

  double total = 0.0;
  for (const auto& id : subset) total += graph.node_entropy_bits(id);
  for (const auto& pair : bound.tree_edges) {
    const auto chain_it = chain_weights.find(pair);
    if (chain_it != chain_weights.end() && !measured_reliable.contains(pair)) {
      total -= chain_it->second;
      ++bound.chain_edges_used;
    } else {
      total -= graph.edge_weight_bits(pair.first, pair.second);
    }
  }
  if (total < 0.0) {
    bound.clamped = true;
    total = 0.0;
  }
  bound.upper_bits = total;
  return bound;
}

EntropyBound naive_upper_bound(const MiGraph& graph,
                               const std::set<SurfaceId>& subset) {
  if (subset.empty()) throw std::invalid_argument("empty subset");
  EntropyBound bound;
  bound.method = BoundMethod::kNaiveSum;
  double total = 0.0;
  for (const auto& id : subset) {
    if (!graph.has_node(id)) {
      throw std::invalid_argument("unknown surface: " + id);
    }
    total += graph.node_entropy_bits(id);
  }
  bound.upper_bits = total;
  return bound;
}

EntropyBound upper_bound_with_tree(const MiGraph& graph,
                                   const std::set<SurfaceId>& subset,
                                   const std::vector<SurfacePair>& edges) {
  if (subset.empty()) throw std::invalid_argument("empty subset");
  const auto index = index_subset(graph, subset);
  DisjointSets sets(index.size());
  EntropyBound bound;
  bound.method = BoundMethod::kChowLiu;
  double total = 0.0;
  for (const auto& id : subset) total += graph.node_entropy_bits(id);
  for (const auto& raw : edges) {
    const SurfacePair pair = MiGraph::canonical_pair(raw.first, raw.second);
    if (!subset.contains(pair.first) || !subset.contains(pair.second)) {
      throw std::invalid_argument("edge outside subset: " + pair.first + "," +
                                  pair.second);
    }
    if (!sets.unite(index.at(pair.first), index.at(pair.second))) {
      throw std::invalid_argument("edges do not form a forest");
    }
    bound.tree_edges.push_back(pair);
    // Unmeasured or unreliable tree edges contribute nothing, matching
    // their treatment in the greedy construction.
    const GraphEdge* edge = graph.find_edge(pair.first, pair.second);
    if (edge != nullptr && edge->mi.reliable) {
      total -= graph.edge_weight_bits(pair.first, pair.second);
    }
  }
  if (total < 0.0) {
    bound.clamped = true;
    total = 0.0;
  }
  bound.upper_bits = total;
  return bound;
}

double chain_lower_bound(const MiGraph& graph,
                         const std::vector<SurfaceId>& path) {
  if (path.size() < 2) throw std::invalid_argument("path too short");
  double value = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const GraphEdge* edge = graph.find_edge(path[i], path[i + 1]);
    if (edge == nullptr || !edge->mi.reliable) {
      throw std::runtime_error("chain broken");
    }
    value += graph.edge_weight_bits(path[i], path[i + 1]);
  }
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    value -= graph.node_entropy_bits(path[i]);
  }
  return std::max(0.0, value);
}

double best_chain_weight(const MiGraph& graph, const SurfaceId& a,
                         const SurfaceId& b) {
  if (a == b) throw std::invalid_argument("self-chain: " + a);
  if (!graph.has_node(a)) throw std::invalid_argument("unknown surface: " + a);
  if (!graph.has_node(b)) throw std::invalid_argument("unknown surface: " + b);

  // Best-value chain search. Because each extension appends
  // w(v,u) - H(v) <= 0 (weights are capped at endpoint entropies), values
  // along any chain are non-increasing, so a max-first Dijkstra sweep is
  // exact and walks never beat simple paths.
  std::map<SurfaceId, std::vector<std::pair<SurfaceId, double>>> adjacency;
  for (const auto& [pair, edge] : graph.edges()) {
    if (!edge.mi.reliable) continue;
    const double w = graph.edge_weight_bits(pair.first, pair.second);
    adjacency[pair.first].emplace_back(pair.second, w);
    adjacency[pair.second].emplace_back(pair.first, w);
  }

  std::map<SurfaceId, double> best;
  std::priority_queue<std::pair<double, SurfaceId>> queue;
  const auto start_it = adjacency.find(a);
  if (start_it == adjacency.end()) return 0.0;
  for (const auto& [u, w] : start_it->second) {
    const auto it = best.find(u);
    if (it == best.end() || w > it->second) {
      best[u] = w;
      queue.emplace(w, u);
    }
  }
  while (!queue.empty()) {
    const auto [value, v] = queue.top();
    queue.pop();
    const auto best_it = best.find(v);
    if (best_it == best.end() || value < best_it->second) continue;  // stale
    if (v == b) return std::max(0.0, value);
    const auto adj_it = adjacency.find(v);
    if (adj_it == adjacency.end()) continue;
    const double interior_h = graph.node_entropy_bits(v);
    for (const auto& [u, w] : adj_it->second) {
      if (u == a) continue;
      const double candidate = value + w - interior_h;
      const auto it = best.find(u);
      if (it == best.end() || candidate > it->second) {
        best[u] = candidate;
        queue.emplace(candidate, u);
      }
    }
  }
  return 0.0;
}

nlohmann::ordered_json mi_graph_to_json(const MiGraph& graph) {
  nlohmann::ordered_json j;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& [id, node] : graph.nodes()) {
    nlohmann::ordered_json n;
    n["surface"] = id;
    n["h_bits"] = node.entropy.point;
    n["ci"] = {node.entropy.ci_low, node.entropy.ci_high};
    n["reliable"] = node.entropy.reliable;
    if (node.entropy_override) n["entropy_override"] = *node.entropy_override;
    j["nodes"].push_back(std::move(n));
  }
  j["edges"] = nlohmann::ordered_json::array();
  for (const auto& [pair, edge] : graph.edges()) {
    nlohmann::ordered_json e;
    e["a"] = pair.first;
    e["b"] = pair.second;
    e["mi_bits"] = edge.mi.point;
    e["ci"] = {edge.mi.ci_low, edge.mi.ci_high};
    e["reliable"] = edge.mi.reliable;
    e["n"] = edge.mi.n;
    j["edges"].push_back(std::move(e));
  }
  return j;
}

MiGraph mi_graph_from_json(const nlohmann::json& j) {
  MiGraph graph;
  for (const auto& n : j.at("nodes")) {
    EntropyEstimate est;
    est.point = n.at("h_bits").get<double>();
    est.ci_low = n.at("ci").at(0).get<double>();
    est.ci_high = n.at("ci").at(1).get<double>();
    est.reliable = n.at("reliable").get<bool>();
    std::optional<double> override_bits;
    if (n.contains("entropy_override")) {
      override_bits = n.at("entropy_override").get<double>();
    }
    graph.add_node(n.at("surface").get<SurfaceId>(), est, override_bits);
  }
  for (const auto& e : j.at("edges")) {
    MiEstimate est;
    est.point = e.at("mi_bits").get<double>();
    est.ci_low = e.at("ci").at(0).get<double>();
    est.ci_high = e.at("ci").at(1).get<double>();
    est.reliable = e.at("reliable").get<bool>();
    est.n = e.at("n").get<std::uint64_t>();
    graph.add_edge(e.at("a").get<SurfaceId>(), e.at("b").get<SurfaceId>(), est);
  }
  return graph;
}

}  // namespace surfent
