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

#include "surfent/structure.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace surfent {

namespace {

void check_square_symmetric(const AdjacencyMatrix& adj) {
  const std::size_t n = adj.order.size();
  if (adj.cells.size() != n) {
    throw std::invalid_argument("matrix size does not match order");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (adj.cells[i].size() != n) {
      throw std::invalid_argument("matrix is not square");
    }
    if (adj.cells[i][i]) throw std::invalid_argument("nonzero diagonal");
    for (std::size_t j = i + 1; j < n; ++j) {
      if (adj.cells[i][j] != adj.cells[j][i]) {
        throw std::invalid_argument("matrix is not symmetric");
      }
    }
  }
}

}  // namespace

AdjacencyMatrix adjacency_from_verdicts(const VerdictMatrix& matrix) {
  AdjacencyMatrix adj;
  adj.order = matrix.surfaces;
  const std::size_t n = adj.order.size();
  adj.cells.assign(n, std::vector<bool>(n, false));
  std::map<SurfaceId, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[adj.order[i]] = i;
  for (const auto& [pair, verdict] : matrix.verdicts) {
    if (verdict.verdict != Verdict::kCorrelated) continue;
    const std::size_t i = index.at(pair.first);
    const std::size_t j = index.at(pair.second);
    adj.cells[i][j] = true;
    adj.cells[j][i] = true;
  }
  return adj;
}

std::size_t matrix_bandwidth(const AdjacencyMatrix& adj,
                             const std::vector<SurfaceId>& ordering) {
  check_square_symmetric(adj);
  if (ordering.size() != adj.order.size()) {
    throw std::invalid_argument("ordering is not a permutation");
  }
  std::map<SurfaceId, std::size_t> position;
  for (std::size_t i = 0; i < ordering.size(); ++i) {
    if (!position.emplace(ordering[i], i).second) {
      throw std::invalid_argument("ordering is not a permutation");
    }
  }
  std::size_t band = 0;
  for (std::size_t i = 0; i < adj.order.size(); ++i) {
    const auto pi = position.find(adj.order[i]);
    if (pi == position.end()) {
      throw std::invalid_argument("ordering is not a permutation");
    }
    for (std::size_t j = i + 1; j < adj.order.size(); ++j) {
      if (!adj.cells[i][j]) continue;
      const std::size_t pj = position.at(adj.order[j]);
      const std::size_t d = pi->second > pj ? pi->second - pj : pj - pi->second;
      band = std::max(band, d);
    }
  }
  return band;
}

std::vector<SurfaceId> cuthill_mckee_order(const AdjacencyMatrix& adj) {
  check_square_symmetric(adj);
  const std::size_t n = adj.order.size();
  if (n == 0) return {};

  std::vector<std::size_t> degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (adj.cells[i][j]) ++degree[i];
    }
  }
  const auto visit_rank = [&](std::size_t a, std::size_t b) {
    if (degree[a] != degree[b]) return degree[a] < degree[b];
    return a < b;  // fall back to input position
  };

  std::vector<bool> visited(n, false);
  std::vector<std::size_t> result;
  result.reserve(n);
  // Seed order: all vertices by (degree, input position); unvisited seeds
  // start new components, so isolated vertices appear in input order.
  std::vector<std::size_t> seeds(n);
  std::iota(seeds.begin(), seeds.end(), 0);
  std::sort(seeds.begin(), seeds.end(), visit_rank);

  for (const std::size_t seed : seeds) {
    if (visited[seed]) continue;
    std::queue<std::size_t> frontier;
    frontier.push(seed);
    visited[seed] = true;
    while (!frontier.empty()) {
      const std::size_t v = frontier.front();
      frontier.pop();
      result.push_back(v);
      std::vector<std::size_t> neighbors;
      for (std::size_t u = 0; u < n; ++u) {
        if (adj.cells[v][u] && !visited[u]) neighbors.push_back(u);
      }
      std::sort(neighbors.begin(), neighbors.end(), visit_rank);
      for (const std::size_t u : neighbors) {
        visited[u] = true;
        frontier.push(u);
      }
    }
  }

  std::vector<SurfaceId> ordering(n);
  for (std::size_t i = 0; i < n; ++i) ordering[i] = adj.order[result[i]];
  // Bandwidth guard: a breadth-first numbering usually narrows the band
  // but is not guaranteed to; keep the input order when it does not help.
  if (matrix_bandwidth(adj, ordering) > matrix_bandwidth(adj, adj.order)) {
    return adj.order;
  }
  return ordering;
}

ClusterResult single_linkage_clusters(const MiGraph& graph,
                                      const ClusterCut& cut) {
  if (graph.nodes().empty()) throw std::invalid_argument("empty graph");
  if (cut.num_clusters && cut.mi_threshold) {
    throw std::invalid_argument("both cut parameters given");
  }
  if (!cut.num_clusters && !cut.mi_threshold) {
    throw std::invalid_argument("no cut parameter given");
  }
  if (cut.num_clusters && *cut.num_clusters == 0) {
    throw std::invalid_argument("num_clusters must be >= 1");
  }

  ClusterResult result;
  for (const auto& [id, node] : graph.nodes()) {
    result.tree.leaves.push_back(id);
  }
  const std::size_t n = result.tree.leaves.size();
  std::map<SurfaceId, std::size_t> leaf_index;
  for (std::size_t i = 0; i < n; ++i) leaf_index[result.tree.leaves[i]] = i;

  // Sorted reliable edges: weight descending, ties by pair name. With
  // single linkage, agglomerative merging is exactly Kruskal's sweep.
  struct WeightedEdge {
    double weight;
    SurfacePair pair;
  };
  std::vector<WeightedEdge> edges;
  for (const auto& [pair, edge] : graph.edges()) {
    if (!edge.mi.reliable) continue;
    edges.push_back({graph.edge_weight_bits(pair.first, pair.second), pair});
  }
  std::sort(edges.begin(), edges.end(),
            [](const WeightedEdge& x, const WeightedEdge& y) {
              if (x.weight != y.weight) return x.weight > y.weight;
              return x.pair < y.pair;
            });

  // cluster_of[leaf] tracks the current cluster id containing that leaf;
  // cluster ids n..2n-2 are created by merges.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::size_t> cluster_id(n);
  std::iota(cluster_id.begin(), cluster_id.end(), 0);
  const std::function<std::size_t(std::size_t)> find =
      [&](std::size_t x) -> std::size_t {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t next_cluster = n;
  const auto merge_roots = [&](std::size_t ra, std::size_t rb, double w,
                               bool from_edge) {
    Merge m;
    m.left = cluster_id[ra];
    m.right = cluster_id[rb];
    m.weight = w;
    m.from_edge = from_edge;
    result.tree.merges.push_back(m);
    parent[ra] = rb;
    cluster_id[rb] = next_cluster++;
  };

  for (const auto& e : edges) {
    const std::size_t ra = find(leaf_index.at(e.pair.first));
    const std::size_t rb = find(leaf_index.at(e.pair.second));
    if (ra != rb) merge_roots(ra, rb, e.weight, /*from_edge=*/true);
  }
  // Complete the tree: join remaining components at zero similarity, in
  // leaf order, so the merge count is always n-1.
  std::size_t anchor = find(0);
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t r = find(i);
    if (r != anchor) {
      merge_roots(anchor, r, 0.0, /*from_edge=*/false);
      anchor = find(i);
    }
  }

  // Flat cut: replay merges against a fresh union-find, applying a merge
  // when it passes the cut rule.
  std::vector<std::size_t> flat_parent(n);
  std::iota(flat_parent.begin(), flat_parent.end(), 0);
  const std::function<std::size_t(std::size_t)> flat_find =
      [&](std::size_t x) -> std::size_t {
    while (flat_parent[x] != x) x = flat_parent[x] = flat_parent[flat_parent[x]];
    return x;
  };
  // Rebuild the leaf pairs each merge joined by replaying the same edge
  // sweep; simpler: replay edges (for threshold) or merges-in-order (for
  // count).
  if (cut.mi_threshold) {
    for (const auto& e : edges) {
      if (e.weight < *cut.mi_threshold) break;
      const std::size_t ra = flat_find(leaf_index.at(e.pair.first));
      const std::size_t rb = flat_find(leaf_index.at(e.pair.second));
      if (ra != rb) flat_parent[ra] = rb;
    }
  } else {
    std::size_t clusters = n;
    for (const auto& e : edges) {
      if (clusters <= *cut.num_clusters) break;
      const std::size_t ra = flat_find(leaf_index.at(e.pair.first));
      const std::size_t rb = flat_find(leaf_index.at(e.pair.second));
      if (ra != rb) {
        flat_parent[ra] = rb;
        --clusters;
      }
    }
    // If the target is below the number of components, zero-weight joins
    // finish the job in leaf order.
    for (std::size_t i = 1; i < n && clusters > *cut.num_clusters; ++i) {
      const std::size_t ra = flat_find(0);
      const std::size_t rb = flat_find(i);
      if (ra != rb) {
        flat_parent[ra] = rb;
        --clusters;
      }
    }
  }

  std::map<std::size_t, std::vector<SurfaceId>> groups;
  for (std::size_t i = 0; i < n; ++i) {
    groups[flat_find(i)].push_back(result.tree.leaves[i]);
  }
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end());
    result.flat.push_back(std::move(members));
  }
  std::sort(result.flat.begin(), result.flat.end());
  return result;
}

nlohmann::ordered_json cluster_tree_to_json(const ClusterTree& tree) {
  const std::size_t n = tree.leaves.size();
  std::vector<nlohmann::ordered_json> nodes(n + tree.merges.size());
  for (std::size_t i = 0; i < n; ++i) {
    nodes[i] = nlohmann::ordered_json{{"surface", tree.leaves[i]}};
  }
  for (std::size_t m = 0; m < tree.merges.size(); ++m) {
    const Merge& merge = tree.merges[m];
    nlohmann::ordered_json node;
    node["weight"] = merge.weight;
    node["children"] = {nodes.at(merge.left), nodes.at(merge.right)};
    nodes[n + m] = std::move(node);
  }
  if (nodes.empty()) return nlohmann::ordered_json::object();
  return nodes.back();
}

}  // namespace surfent
