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
// Joint-entropy upper bounds over a mutual-information graph.
//
// For any tree (or forest) T over a surface set S,
//     H(X_S)  <=  sum_s H(X_s)  -  sum_{(s,s') in T} I(X_s; X_{s'}),
// so the tightest such bound uses a maximum-weight spanning forest. Edges
// flagged unreliable are treated as absent (weight 0), which only loosens
// the bound and never invalidates it. Optionally, a missing or unreliable
// edge (a,b) can be replaced by a chain substitute
//     I(a;b)  >=  sum_i I(x_i; x_{i+1})  -  sum_{interior} H(x_i)
// over a fully reliable chain a = x_1, ..., x_m = b; being a lower bound on
// the true MI, the substitute also keeps the upper bound valid.

#ifndef SURFENT_MI_GRAPH_HPP_
#define SURFENT_MI_GRAPH_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "surfent/estimation.hpp"

namespace surfent {

using SurfacePair = std::pair<SurfaceId, SurfaceId>;

struct GraphNode {
  EntropyEstimate entropy;
  // When set, replaces entropy.point in every bound computation (hook for
  // externally supplied per-surface entropy values).
  std::optional<double> entropy_override;

  double entropy_bits() const {
    return entropy_override ? *entropy_override : entropy.point;
  }
};

struct GraphEdge {
  MiEstimate mi;
  // True when even the MI lower-confidence bound exceeds the smaller
  // endpoint entropy: the measurements are mutually contradictory beyond
  // interval slack. The weight cap still applies either way.
  bool inconsistent = false;
};

enum class BoundMethod { kChowLiu, kNaiveSum };

struct EntropyBound {
  double upper_bits = 0.0;
  std::vector<SurfacePair> tree_edges;
  // Subset-internal edges excluded because their estimate was unreliable.
  std::size_t omitted_edges = 0;
  BoundMethod method = BoundMethod::kChowLiu;
  // Guard flag: the raw sum went below zero and was clamped (cannot happen
  // once weights are capped, but recorded if it ever does).
  bool clamped = false;
  // Number of tree edges that came from chain substitutes rather than
  // direct measurements.
  std::size_t chain_edges_used = 0;
};

struct BoundOptions {
  // Replace missing/unreliable subset edges with the best chain substitute
  // when a fully reliable connecting chain exists anywhere in the graph.
  bool use_chain_bounds = false;
};

// Nodes are surfaces with entropy estimates; edges carry pairwise MI
// estimates. Immutable once built (aside from explicit edge removal, used
// to study bound degradation); safe to query from multiple threads.
class MiGraph {
 public:
  static SurfacePair canonical_pair(const SurfaceId& a, const SurfaceId& b) {
    return a < b ? SurfacePair{a, b} : SurfacePair{b, a};
  }

  void add_node(const SurfaceId& id, const EntropyEstimate& estimate,
                std::optional<double> entropy_override = std::nullopt);
  void add_edge(const SurfaceId& a, const SurfaceId& b,
                const MiEstimate& estimate);
  void remove_edge(const SurfaceId& a, const SurfaceId& b);

  bool has_node(const SurfaceId& id) const { return nodes_.contains(id); }
  const std::map<SurfaceId, GraphNode>& nodes() const { return nodes_; }
  const std::map<SurfacePair, GraphEdge>& edges() const { return edges_; }

  // Entropy used in bounds: override when present, else the point estimate.
  double node_entropy_bits(const SurfaceId& id) const;

  // nullptr when the pair has no measured edge.
  const GraphEdge* find_edge(const SurfaceId& a, const SurfaceId& b) const;

  // Tree weight: MI point estimate capped at the smaller endpoint entropy
  // (the analytic ceiling I <= min(H); anything above is estimation noise).
  double edge_weight_bits(const SurfaceId& a, const SurfaceId& b) const;

 private:
  std::map<SurfaceId, GraphNode> nodes_;
  std::map<SurfacePair, GraphEdge> edges_;
};

// Maximum-weight spanning forest over the reliable edges inside `subset`,
// by greedy edge selection (weight descending, ties by lexicographic pair).
// Components that no reliable edge connects stay separate.
std::vector<SurfacePair> max_spanning_forest(const MiGraph& graph,
                                             const std::set<SurfaceId>& subset);

EntropyBound chow_liu_upper_bound(const MiGraph& graph,
                                  const std::set<SurfaceId>& subset,
                                  const BoundOptions& options = {});

// Plain sum of node entropies.
EntropyBound naive_upper_bound(const MiGraph& graph,
                               const std::set<SurfaceId>& subset);

// Bound for an explicitly chosen forest (used to compare tree choices).
// Edges must lie within the subset and form a forest.
EntropyBound upper_bound_with_tree(const MiGraph& graph,
                                   const std::set<SurfaceId>& subset,
                                   const std::vector<SurfacePair>& edges);

// max(0, sum of consecutive capped MI - sum of interior entropies) along an
// explicit path; every consecutive pair must have a reliable edge.
double chain_lower_bound(const MiGraph& graph,
                         const std::vector<SurfaceId>& path);

// Value of the best chain substitute between two surfaces over reliable
// edges anywhere in the graph, or 0 when no chain attains a positive value.
double best_chain_weight(const MiGraph& graph, const SurfaceId& a,
                         const SurfaceId& b);

nlohmann::ordered_json mi_graph_to_json(const MiGraph& graph);
MiGraph mi_graph_from_json(const nlohmann::json& j);

}  // namespace surfent

#endif  // SURFENT_MI_GRAPH_HPP_
