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
//
// Structure views over pairwise results: a Cuthill-McKee reordering of the
// correlation matrix that pulls correlated surfaces toward the diagonal,
// and a single-linkage agglomerative clustering of surfaces under
// mutual-information similarity.

#ifndef SURFENT_STRUCTURE_HPP_
#define SURFENT_STRUCTURE_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "surfent/independence.hpp"
#include "surfent/mi_graph.hpp"

namespace surfent {

// Symmetric boolean correlation matrix with a zero diagonal, in an
// explicit input order.
struct AdjacencyMatrix {
  std::vector<SurfaceId> order;
  std::vector<std::vector<bool>> cells;
};

// True cells for pairs classified Correlated.
AdjacencyMatrix adjacency_from_verdicts(const VerdictMatrix& matrix);

// Maximum |pos(u) - pos(v)| over true cells under the given ordering;
// 0 for an edgeless matrix. The ordering must be a permutation of
// adj.order.
std::size_t matrix_bandwidth(const AdjacencyMatrix& adj,
                             const std::vector<SurfaceId>& ordering);

// Plain (unreversed) Cuthill-McKee: breadth-first numbering from a
// minimum-degree seed, neighbors visited by ascending (degree, input
// position). Ties fall back to input position, so an edgeless matrix
// passes through unchanged. If the BFS ordering would widen the band, the
// input order is returned instead — the result never has larger bandwidth
// than the input.
std::vector<SurfaceId> cuthill_mckee_order(const AdjacencyMatrix& adj);

// One agglomerative merge. Leaves are numbered 0..n-1 in graph node order;
// the i-th merge creates cluster n+i. Merges driven by measured edges are
// flagged; the remaining zero-weight merges only complete the tree across
// disconnected components.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double weight = 0.0;
  bool from_edge = false;
};

struct ClusterTree {
  std::vector<SurfaceId> leaves;
  std::vector<Merge> merges;  // n-1 entries, weights non-increasing
};

// Exactly one of the two must be set.
struct ClusterCut {
  std::optional<std::size_t> num_clusters;
  std::optional<double> mi_threshold;
};

struct ClusterResult {
  ClusterTree tree;
  // Each cluster sorted by id; clusters ordered by their first member.
  std::vector<std::vector<SurfaceId>> flat;
};

// Single linkage under MI similarity: repeatedly merge the two clusters
// joined by the heaviest remaining reliable edge (capped weights, ties by
// pair name). Cutting at a threshold t yields exactly the connected
// components of edges with weight >= t; surfaces with no reliable edges
// stay singletons at any positive threshold.
ClusterResult single_linkage_clusters(const MiGraph& graph,
                                      const ClusterCut& cut);

// Nested dendrogram JSON: leaves as {"surface": id}, internal nodes as
// {"weight": w, "children": [left, right]}.
nlohmann::ordered_json cluster_tree_to_json(const ClusterTree& tree);

}  // namespace surfent

#endif  // SURFENT_STRUCTURE_HPP_
