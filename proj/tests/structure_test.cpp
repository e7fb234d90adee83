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

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "surfent/rng.hpp"
#include "surfent/structure.hpp"

namespace surfent {
namespace {

AdjacencyMatrix make_matrix(const std::vector<SurfaceId>& order,
                            const std::vector<std::pair<int, int>>& edges) {
  AdjacencyMatrix adj;
  adj.order = order;
  adj.cells.assign(order.size(), std::vector<bool>(order.size(), false));
  for (const auto& [i, j] : edges) {
    adj.cells[i][j] = true;
    adj.cells[j][i] = true;
  }
  return adj;
}

// Exhaustive minimum bandwidth over all permutations; only for tiny n.
std::size_t brute_force_min_bandwidth(const AdjacencyMatrix& adj) {
  std::vector<SurfaceId> perm = adj.order;
  std::sort(perm.begin(), perm.end());
  std::size_t best = adj.order.size();
  do {
    best = std::min(best, matrix_bandwidth(adj, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

EntropyEstimate exact_node(double h_bits) {
  EntropyEstimate est;
  est.point = h_bits;
  est.ci_low = h_bits;
  est.ci_high = h_bits;
  est.reliable = true;
  return est;
}

MiEstimate exact_edge(double mi_bits, bool reliable = true) {
  MiEstimate est;
  est.point = mi_bits;
  est.ci_low = mi_bits;
  est.ci_high = mi_bits;
  est.n = 100000;
  est.reliable = reliable;
  return est;
}

// Brute-force flat-cluster oracle: connected components over edges with
// weight >= threshold.
std::vector<std::vector<SurfaceId>> threshold_components(
    const MiGraph& graph, double threshold) {
  std::map<SurfaceId, std::vector<SurfaceId>> adjacency;
  for (const auto& [id, node] : graph.nodes()) adjacency[id];
  for (const auto& [pair, edge] : graph.edges()) {
    if (!edge.mi.reliable) continue;
    if (graph.edge_weight_bits(pair.first, pair.second) < threshold) continue;
    adjacency[pair.first].push_back(pair.second);
    adjacency[pair.second].push_back(pair.first);
  }
  std::set<SurfaceId> seen;
  std::vector<std::vector<SurfaceId>> components;
  for (const auto& [start, neighbors] : adjacency) {
    if (seen.contains(start)) continue;
    std::vector<SurfaceId> component;
    std::queue<SurfaceId> frontier;
    frontier.push(start);
    seen.insert(start);
    while (!frontier.empty()) {
      const SurfaceId v = frontier.front();
      frontier.pop();
      component.push_back(v);
      for (const auto& u : adjacency.at(v)) {
        if (seen.insert(u).second) frontier.push(u);
      }
    }
    std::sort(component.begin(), component.end());
    components.push_back(std::move(component));
  }
  std::sort(components.begin(), components.end());
  return components;
}

TEST_SUITE("structure") {

TEST_CASE("scrambled path reorders to bandwidth 1") {
  // Path c-e-a-d-b handed over in scrambled input order.
  const auto adj = make_matrix({"c", "e", "a", "d", "b"},
                               {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  const auto ordering = cuthill_mckee_order(adj);
  CHECK(matrix_bandwidth(adj, ordering) == 1);
  CHECK(brute_force_min_bandwidth(adj) == 1);
}

TEST_CASE("edgeless matrix keeps input order") {
  const auto adj = make_matrix({"zeta", "alpha", "mid"}, {});
  const auto ordering = cuthill_mckee_order(adj);
  CHECK(ordering == std::vector<SurfaceId>{"zeta", "alpha", "mid"});
  CHECK(matrix_bandwidth(adj, ordering) == 0);
}

TEST_CASE("complete graph bandwidth is permutation invariant") {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < 5; ++i) {
    for (int j = i + 1; j < 5; ++j) edges.push_back({i, j});
  }
  const auto adj = make_matrix({"a", "b", "c", "d", "e"}, edges);
  const auto ordering = cuthill_mckee_order(adj);
  CHECK(matrix_bandwidth(adj, ordering) == 4);
  // Output is a permutation of the input ids.
  auto sorted = ordering;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<SurfaceId>{"a", "b", "c", "d", "e"});
}

TEST_CASE("ordering never increases bandwidth") {
  Rng rng(derive_seed(6060, "cm-fuzz"));
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.next_index(9);
    std::vector<SurfaceId> order;
    for (std::size_t i = 0; i < n; ++i) {
      order.push_back("s" + std::to_string(i));
    }
    for (std::size_t i = n; i > 1; --i) {
      std::swap(order[i - 1], order[rng.next_index(i)]);
    }
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (rng.next_double() < 0.3) {
          edges.push_back({static_cast<int>(i), static_cast<int>(j)});
        }
      }
    }
    const auto adj = make_matrix(order, edges);
    const auto ordering = cuthill_mckee_order(adj);
    auto sorted_out = ordering;
    auto sorted_in = order;
    std::sort(sorted_out.begin(), sorted_out.end());
    std::sort(sorted_in.begin(), sorted_in.end());
    CHECK(sorted_out == sorted_in);  // bijectivity
    CHECK(matrix_bandwidth(adj, ordering) <= matrix_bandwidth(adj, adj.order));
  }
}

TEST_CASE("verdict matrix converts to adjacency") {
  VerdictMatrix matrix;
  matrix.surfaces = {"a", "b", "c"};
  PairVerdict ab;
  ab.verdict = Verdict::kCorrelated;
  matrix.verdicts[{"a", "b"}] = ab;
  PairVerdict bc;
  bc.verdict = Verdict::kInsufficient;
  matrix.verdicts[{"b", "c"}] = bc;
  const auto adj = adjacency_from_verdicts(matrix);
  CHECK(adj.cells[0][1]);
  CHECK(adj.cells[1][0]);
  CHECK_FALSE(adj.cells[1][2]);
  CHECK_FALSE(adj.cells[0][0]);
}

TEST_CASE("coupled pair clusters together, independent surface alone") {
  MiGraph g;
  g.add_node("a", exact_node(1.0));
  g.add_node("b", exact_node(1.0));
  g.add_node("c", exact_node(1.0));
  g.add_edge("a", "b", exact_edge(1.0));
  g.add_edge("a", "c", exact_edge(0.0));
  g.add_edge("b", "c", exact_edge(0.0));

  ClusterCut cut;
  cut.mi_threshold = 0.5;
  const auto result = single_linkage_clusters(g, cut);
  CHECK(result.flat == std::vector<std::vector<SurfaceId>>{{"a", "b"}, {"c"}});
  CHECK(result.tree.merges.size() == 2);
  // Merge weights are non-increasing.
  CHECK(result.tree.merges[0].weight >= result.tree.merges[1].weight);
}

TEST_CASE("equal weights collapse to one cluster below that weight") {
  MiGraph g;
  for (const auto* id : {"p", "q", "r", "s"}) g.add_node(id, exact_node(2.0));
  g.add_edge("p", "q", exact_edge(0.7));
  g.add_edge("q", "r", exact_edge(0.7));
  g.add_edge("r", "s", exact_edge(0.7));
  ClusterCut cut;
  cut.mi_threshold = 0.5;
  const auto result = single_linkage_clusters(g, cut);
  CHECK(result.flat ==
        std::vector<std::vector<SurfaceId>>{{"p", "q", "r", "s"}});
}

TEST_CASE("cluster count cut") {
  MiGraph g;
  g.add_node("a", exact_node(1.0));
  g.add_node("b", exact_node(1.0));
  g.add_node("c", exact_node(1.0));
  g.add_edge("a", "b", exact_edge(0.9));
  g.add_edge("b", "c", exact_edge(0.5));
  ClusterCut cut;
  cut.num_clusters = 2;
  const auto result = single_linkage_clusters(g, cut);
  CHECK(result.flat == std::vector<std::vector<SurfaceId>>{{"a", "b"}, {"c"}});

  cut.num_clusters = 1;
  CHECK(single_linkage_clusters(g, cut).flat.size() == 1);
  cut.num_clusters = 5;  // more than leaves: all singletons
  CHECK(single_linkage_clusters(g, cut).flat.size() == 3);
}

TEST_CASE("cut parameter validation") {
  MiGraph g;
  g.add_node("a", exact_node(1.0));
  ClusterCut both;
  both.num_clusters = 2;
  both.mi_threshold = 0.5;
  CHECK_THROWS_WITH_AS(single_linkage_clusters(g, both),
                       "both cut parameters given", std::invalid_argument);
  ClusterCut neither;
  CHECK_THROWS_AS(single_linkage_clusters(g, neither), std::invalid_argument);
}

TEST_CASE("threshold cut equals thresholded connected components") {
  Rng rng(derive_seed(6060, "cluster-fuzz"));
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.next_index(11);  // up to 12 leaves
    MiGraph g;
    std::vector<SurfaceId> ids;
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("s" + std::to_string(i));
      g.add_node(ids.back(), exact_node(3.0));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (rng.next_double() < 0.35) {
          // Occasional unreliable edges must be ignored by both sides.
          g.add_edge(ids[i], ids[j],
                     exact_edge(3.0 * rng.next_double(),
                                /*reliable=*/rng.next_double() < 0.85));
        }
      }
    }
    const double threshold = 3.0 * rng.next_double();
    ClusterCut cut;
    cut.mi_threshold = threshold;
    const auto result = single_linkage_clusters(g, cut);
    CHECK(result.flat == threshold_components(g, threshold));
    CHECK(result.tree.merges.size() == n - 1);
    for (std::size_t m = 1; m < result.tree.merges.size(); ++m) {
      CHECK(result.tree.merges[m - 1].weight >=
            result.tree.merges[m].weight - 1e-12);
    }
  }
}

TEST_CASE("singletons survive at positive thresholds") {
  MiGraph g;
  g.add_node("loner", exact_node(2.0));
  g.add_node("x", exact_node(1.0));
  g.add_node("y", exact_node(1.0));
  g.add_edge("x", "y", exact_edge(0.8));
  g.add_edge("loner", "x", exact_edge(0.9, /*reliable=*/false));
  ClusterCut cut;
  cut.mi_threshold = 0.1;
  const auto result = single_linkage_clusters(g, cut);
  CHECK(result.flat ==
        std::vector<std::vector<SurfaceId>>{{"loner"}, {"x", "y"}});
}

TEST_CASE("dendrogram json shape") {
  MiGraph g;
  g.add_node("a", exact_node(1.0));
  g.add_node("b", exact_node(1.0));
  g.add_node("c", exact_node(1.0));
  g.add_edge("a", "b", exact_edge(0.9));
  ClusterCut cut;
  cut.mi_threshold = 0.5;
  const auto result = single_linkage_clusters(g, cut);
  const auto j = cluster_tree_to_json(result.tree);
  // Root is the final zero-weight merge; its children cover all leaves.
  CHECK(j.at("weight").get<double>() == 0.0);
  CHECK(j.at("children").size() == 2);
  CHECK(j.dump().find("\"surface\":\"a\"") != std::string::npos);
  CHECK(j.dump().find("\"surface\":\"c\"") != std::string::npos);
}

}  // TEST_SUITE

}  // namespace
}  // namespace surfent
