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
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "surfent/mi_graph.hpp"
#include "surfent/rng.hpp"

namespace surfent {
namespace {

EntropyEstimate exact_node(double h_bits) {
  EntropyEstimate est;
  est.point = h_bits;
  est.ci_low = h_bits;
  est.ci_high = h_bits;
  est.delta = 0.1;
  est.n = 1000000;
  est.k_effective = 2;
  est.reliable = true;
  return est;
}

MiEstimate exact_edge(double mi_bits, bool reliable = true) {
  MiEstimate est;
  est.point = mi_bits;
  est.ci_low = mi_bits;
  est.ci_high = mi_bits;
  est.n = 1000000;
  est.k1 = 2;
  est.k2 = 2;
  est.reliable = reliable;
  return est;
}

// Test-local closed forms, independent of the library's entropy code.
double h2(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

TEST_SUITE("mi_graph") {

TEST_CASE("spanning forest basics") {
  MiGraph g;
  g.add_node("a", exact_node(2.0));
  g.add_node("b", exact_node(2.0));
  g.add_node("c", exact_node(2.0));
  g.add_edge("a", "b", exact_edge(1.0));
  g.add_edge("b", "c", exact_edge(0.8));
  g.add_edge("a", "c", exact_edge(0.2));

  CHECK(max_spanning_forest(g, {"a"}).empty());

  const auto forest = max_spanning_forest(g, {"a", "b", "c"});
  REQUIRE(forest.size() == 2);
  CHECK(forest[0] == SurfacePair{"a", "b"});
  CHECK(forest[1] == SurfacePair{"b", "c"});

  // Brute-force oracle: of the three spanning trees of the triangle, the
  // greedy choice must give the smallest bound.
  const std::vector<std::vector<SurfacePair>> trees = {
      {{"a", "b"}, {"b", "c"}}, {{"a", "b"}, {"a", "c"}},
      {{"b", "c"}, {"a", "c"}}};
  const double greedy = chow_liu_upper_bound(g, {"a", "b", "c"}).upper_bits;
  double brute = 1e99;
  for (const auto& tree : trees) {
    brute = std::min(brute,
                     upper_bound_with_tree(g, {"a", "b", "c"}, tree).upper_bits);
  }
  CHECK(greedy == doctest::Approx(brute).epsilon(1e-12));
  CHECK(greedy == doctest::Approx(6.0 - 1.8).epsilon(1e-12));
}

TEST_CASE("equal weights break ties by pair name") {
  MiGraph g;
  g.add_node("a", exact_node(1.0));
  g.add_node("b", exact_node(1.0));
  g.add_node("c", exact_node(1.0));
  g.add_edge("a", "b", exact_edge(0.5));
  g.add_edge("a", "c", exact_edge(0.5));
  g.add_edge("b", "c", exact_edge(0.5));
  const auto forest = max_spanning_forest(g, {"a", "b", "c"});
  REQUIRE(forest.size() == 2);
  CHECK(forest[0] == SurfacePair{"a", "b"});
  CHECK(forest[1] == SurfacePair{"a", "c"});
}

TEST_CASE("unreliable edges are treated as absent") {
  MiGraph g;
  g.add_node("a", exact_node(1.0));
  g.add_node("b", exact_node(1.0));
  g.add_edge("a", "b", exact_edge(0.9, /*reliable=*/false));

  CHECK(max_spanning_forest(g, {"a", "b"}).empty());
  const auto bound = chow_liu_upper_bound(g, {"a", "b"});
  CHECK(bound.upper_bits == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(bound.omitted_edges == 1);
  CHECK(bound.tree_edges.empty());
}

TEST_CASE("bound special cases") {
  MiGraph g;
  g.add_node("solo", exact_node(2.3));
  CHECK(chow_liu_upper_bound(g, {"solo"}).upper_bits ==
        doctest::Approx(2.3).epsilon(1e-12));

  g.add_node("x", exact_node(1.0));
  g.add_node("y", exact_node(1.0));
  g.add_edge("x", "y", exact_edge(1.0));
  CHECK(chow_liu_upper_bound(g, {"x", "y"}).upper_bits ==
        doctest::Approx(1.0).epsilon(1e-12));

  MiGraph indep;
  indep.add_node("p", exact_node(1.0));
  indep.add_node("q", exact_node(1.0));
  indep.add_node("r", exact_node(1.0));
  const auto cl = chow_liu_upper_bound(indep, {"p", "q", "r"});
  const auto naive = naive_upper_bound(indep, {"p", "q", "r"});
  CHECK(cl.upper_bits == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(naive.upper_bits == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(naive.method == BoundMethod::kNaiveSum);

  CHECK_THROWS_AS(chow_liu_upper_bound(g, {}), std::invalid_argument);
  CHECK_THROWS_AS(chow_liu_upper_bound(g, {"missing"}), std::invalid_argument);
  CHECK_THROWS_AS(naive_upper_bound(g, {}), std::invalid_argument);
}

TEST_CASE("mi weights are capped at endpoint entropies") {
  MiGraph g;
  g.add_node("a", exact_node(1.0));
  g.add_node("b", exact_node(1.0));
  MiEstimate noisy = exact_edge(1.5);
  noisy.ci_low = 1.2;  // even the interval floor contradicts min(H)=1
  g.add_edge("a", "b", noisy);
  CHECK(g.edge_weight_bits("a", "b") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.find_edge("a", "b")->inconsistent);
  CHECK(chow_liu_upper_bound(g, {"a", "b"}).upper_bits ==
        doctest::Approx(1.0).epsilon(1e-12));

  MiEstimate sane = exact_edge(0.4);
  g.add_edge("a", "b", sane);
  CHECK_FALSE(g.find_edge("a", "b")->inconsistent);
}

MiGraph random_graph(Rng& rng, const std::vector<SurfaceId>& ids,
                     double edge_prob) {
  MiGraph g;
  for (const auto& id : ids) {
    g.add_node(id, exact_node(0.5 + 2.5 * rng.next_double()));
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (std::size_t j = i + 1; j < ids.size(); ++j) {
      if (rng.next_double() < edge_prob) {
        const double cap = std::min(g.node_entropy_bits(ids[i]),
                                    g.node_entropy_bits(ids[j]));
        g.add_edge(ids[i], ids[j], exact_edge(cap * rng.next_double()));
      }
    }
  }
  return g;
}

TEST_CASE("naive bound dominates the tree bound") {
  Rng rng(derive_seed(5151, "naive-vs-cl"));
  const std::vector<SurfaceId> ids = {"s0", "s1", "s2", "s3", "s4", "s5"};
  const std::set<SurfaceId> subset(ids.begin(), ids.end());
  for (int trial = 0; trial < 100; ++trial) {
    const MiGraph g = random_graph(rng, ids, 0.6);
    const double cl = chow_liu_upper_bound(g, subset).upper_bits;
    const double naive = naive_upper_bound(g, subset).upper_bits;
    CHECK(cl <= naive + 1e-9);
    CHECK(cl >= 0.0);
  }
}

TEST_CASE("greedy forest beats random spanning trees") {
  Rng rng(derive_seed(5151, "random-trees"));
  const std::vector<SurfaceId> ids = {"s0", "s1", "s2", "s3", "s4", "s5", "s6"};
  const std::set<SurfaceId> subset(ids.begin(), ids.end());
  const MiGraph g = random_graph(rng, ids, 0.8);
  const double greedy = chow_liu_upper_bound(g, subset).upper_bits;
  for (int trial = 0; trial < 100; ++trial) {
    // Random spanning tree by randomized Kruskal over the complete graph;
    // edges missing from the MI graph simply contribute weight zero.
    std::vector<SurfacePair> all_pairs;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = i + 1; j < ids.size(); ++j) {
        all_pairs.push_back({ids[i], ids[j]});
      }
    }
    for (std::size_t i = all_pairs.size(); i > 1; --i) {
      std::swap(all_pairs[i - 1], all_pairs[rng.next_index(i)]);
    }
    std::vector<SurfacePair> tree;
    std::map<SurfaceId, SurfaceId> root;
    for (const auto& id : ids) root[id] = id;
    const std::function<SurfaceId(SurfaceId)> find = [&](SurfaceId x) {
      while (root[x] != x) x = root[x] = root[root[x]];
      return x;
    };
    for (const auto& pair : all_pairs) {
      const auto ra = find(pair.first);
      const auto rb = find(pair.second);
      if (ra != rb) {
        root[ra] = rb;
        tree.push_back(pair);
      }
    }
    const double other = upper_bound_with_tree(g, subset, tree).upper_bits;
    CHECK(greedy <= other + 1e-9);
  }
}

TEST_CASE("removing an edge never tightens the bound") {
  Rng rng(derive_seed(5151, "edge-removal"));
  const std::vector<SurfaceId> ids = {"s0", "s1", "s2", "s3", "s4"};
  const std::set<SurfaceId> subset(ids.begin(), ids.end());
  for (int trial = 0; trial < 50; ++trial) {
    const MiGraph g = random_graph(rng, ids, 0.7);
    const double base = chow_liu_upper_bound(g, subset).upper_bits;
    for (const auto& [pair, edge] : g.edges()) {
      MiGraph pruned = g;
      pruned.remove_edge(pair.first, pair.second);
      CHECK(chow_liu_upper_bound(pruned, subset).upper_bits >= base - 1e-9);
    }
  }
}

TEST_CASE("exact two-step chain model: bound is tight") {
  // Binary chain: X1 ~ Bernoulli(0.3); X2 flips X1 with prob 0.1; X3 flips
  // X2 with prob 0.2. All quantities below are test-local closed forms.
  const double h1 = h2(0.3);
  const double p2 = 0.3 * 0.9 + 0.7 * 0.1;
  const double p3 = p2 * 0.8 + (1.0 - p2) * 0.2;
  const double h2_bits = h2(p2);
  const double h3 = h2(p3);
  const double true_joint = h2(0.3) + h2(0.1) + h2(0.2);
  const double i12 = h1 + h2_bits - (h2(0.3) + h2(0.1));
  const double i23 = h3 - h2(0.2);
  // Two-step flip channel from X1 to X3 flips with prob 0.9*0.2 + 0.1*0.8.
  const double i13 = h3 - h2(0.9 * 0.2 + 0.1 * 0.8);

  MiGraph g;
  g.add_node("x1", exact_node(h1));
  g.add_node("x2", exact_node(h2_bits));
  g.add_node("x3", exact_node(h3));
  g.add_edge("x1", "x2", exact_edge(i12));
  g.add_edge("x2", "x3", exact_edge(i23));
  g.add_edge("x1", "x3", exact_edge(i13));

  const std::set<SurfaceId> all = {"x1", "x2", "x3"};
  const double cl = chow_liu_upper_bound(g, all).upper_bits;
  const double naive = naive_upper_bound(g, all).upper_bits;
  // Information shrinks along the chain, so the greedy forest picks the
  // true structure and the bound collapses to the exact joint entropy.
  CHECK(i13 < std::min(i12, i23));
  CHECK(cl == doctest::Approx(true_joint).epsilon(1e-9));
  CHECK(true_joint <= cl + 1e-9);
  CHECK(cl <= naive + 1e-9);

  // The chain substitute never exceeds the true endpoint MI or either
  // endpoint entropy.
  const double chain = chain_lower_bound(g, {"x1", "x2", "x3"});
  CHECK(chain <= i13 + 1e-9);
  CHECK(chain <= std::min(h1, h3) + 1e-9);
}

TEST_CASE("chain bound closed-form cases") {
  MiGraph g;
  g.add_node("a", exact_node(1.0));
  g.add_node("b", exact_node(1.0));
  g.add_node("c", exact_node(1.0));
  g.add_edge("a", "b", exact_edge(1.0));
  g.add_edge("b", "c", exact_edge(1.0));
  CHECK(chain_lower_bound(g, {"a", "b", "c"}) ==
        doctest::Approx(1.0).epsilon(1e-12));

  MiGraph indep;
  indep.add_node("a", exact_node(1.0));
  indep.add_node("b", exact_node(1.0));
  indep.add_node("c", exact_node(1.0));
  indep.add_edge("a", "b", exact_edge(0.0));
  indep.add_edge("b", "c", exact_edge(0.0));
  CHECK(chain_lower_bound(indep, {"a", "b", "c"}) == 0.0);

  CHECK_THROWS_WITH_AS(chain_lower_bound(g, {"a", "c"}), "chain broken",
                       std::runtime_error);
  MiGraph shaky = g;
  shaky.add_edge("b", "c", exact_edge(1.0, /*reliable=*/false));
  CHECK_THROWS_WITH_AS(chain_lower_bound(shaky, {"a", "b", "c"}),
                       "chain broken", std::runtime_error);
  CHECK_THROWS_AS(chain_lower_bound(g, {"a"}), std::invalid_argument);
}

TEST_CASE("chain substitutes tighten bounds for unmeasured pairs") {
  // Four identical uniform bits in a path; the (a,d) edge was never
  // measured. The chain substitute recovers I(a;d) = 1 bit exactly.
  MiGraph g;
  for (const auto* id : {"a", "b", "c", "d"}) g.add_node(id, exact_node(1.0));
  g.add_edge("a", "b", exact_edge(1.0));
  g.add_edge("b", "c", exact_edge(1.0));
  g.add_edge("c", "d", exact_edge(1.0));

  CHECK(best_chain_weight(g, "a", "d") == doctest::Approx(1.0).epsilon(1e-12));

  const std::set<SurfaceId> ends = {"a", "d"};
  const auto plain = chow_liu_upper_bound(g, ends);
  CHECK(plain.upper_bits == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(plain.chain_edges_used == 0);

  BoundOptions options;
  options.use_chain_bounds = true;
  const auto chained = chow_liu_upper_bound(g, ends, options);
  CHECK(chained.upper_bits == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chained.chain_edges_used == 1);
  REQUIRE(chained.tree_edges.size() == 1);
  CHECK(chained.tree_edges[0] == SurfacePair{"a", "d"});
}

TEST_CASE("json round trip preserves bounds and schema") {
  MiGraph g;
  g.add_node("alpha", exact_node(1.5));
  g.add_node("beta", exact_node(2.5), /*entropy_override=*/3.25);
  g.add_edge("alpha", "beta", exact_edge(0.75));

  const auto j = mi_graph_to_json(g);
  REQUIRE(j.at("nodes").size() == 2);
  REQUIRE(j.at("edges").size() == 1);
  CHECK(j.at("nodes").at(0).at("surface") == "alpha");
  CHECK(j.at("nodes").at(0).at("h_bits").get<double>() == 1.5);
  CHECK(j.at("nodes").at(0).at("ci").size() == 2);
  CHECK(j.at("nodes").at(1).at("entropy_override").get<double>() == 3.25);
  CHECK(j.at("edges").at(0).at("a") == "alpha");
  CHECK(j.at("edges").at(0).at("b") == "beta");
  CHECK(j.at("edges").at(0).at("mi_bits").get<double>() == 0.75);
  CHECK(j.at("edges").at(0).at("n").get<std::uint64_t>() == 1000000);

  const MiGraph back = mi_graph_from_json(j);
  CHECK(back.node_entropy_bits("beta") == 3.25);  // override survives
  const std::set<SurfaceId> subset = {"alpha", "beta"};
  CHECK(chow_liu_upper_bound(back, subset).upper_bits ==
        doctest::Approx(chow_liu_upper_bound(g, subset).upper_bits)
            .epsilon(1e-12));

  CHECK(j.dump() == mi_graph_to_json(mi_graph_from_json(j)).dump());
}

TEST_CASE("edge validation") {
  MiGraph g;
  g.add_node("a", exact_node(1.0));
  CHECK_THROWS_AS(g.add_edge("a", "a", exact_edge(0.1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(g.add_edge("a", "ghost", exact_edge(0.1)),
                  std::invalid_argument);
}

}  // TEST_SUITE

}  // namespace
}  // namespace surfent
