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

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "surfent/distribution.hpp"
#include "surfent/independence.hpp"
#include "surfent/rng.hpp"

namespace surfent {
namespace {

JointDistribution joint_from_cells(
    const std::vector<std::vector<std::uint64_t>>& cells) {
  JointDistribution j;
  for (std::size_t a = 0; a < cells.size(); ++a) {
    for (std::size_t b = 0; b < cells[a].size(); ++b) {
      if (cells[a][b] > 0) {
        j.add("x" + std::to_string(a), "y" + std::to_string(b), cells[a][b]);
      }
    }
  }
  return j;
}

// Draws n samples of a binary pair with cell probabilities
//   {pq + e, p(1-q) - e, (1-p)q - e, (1-p)(1-q) + e},
// which keeps the marginals at (p, q) while the true TV from independence
// is exactly 2e.
JointDistribution sample_binary_pair(Rng& rng, double p, double q, double e,
                                     std::uint64_t n) {
  const std::vector<double> cell_probs = {
      p * q + e, p * (1.0 - q) - e, (1.0 - p) * q - e,
      (1.0 - p) * (1.0 - q) + e};
  const AliasTable table(cell_probs);
  JointDistribution joint;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint32_t cell = table.sample(rng);
    joint.add(cell / 2 == 0 ? "a0" : "a1", cell % 2 == 0 ? "b0" : "b1");
  }
  return joint;
}

TEST_SUITE("independence") {

TEST_CASE("total variation closed forms") {
  // Exact product: 40*60 split on both coordinates.
  CHECK(total_variation_from_independence(
            joint_from_cells({{16, 24}, {24, 36}})) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // Perfectly coupled uniform bit: each diagonal cell contributes
  // |0.5 - 0.25| and each off-diagonal |0 - 0.25|.
  CHECK(total_variation_from_independence(
            joint_from_cells({{50, 0}, {0, 50}})) ==
        doctest::Approx(0.5).epsilon(1e-12));

  JointDistribution empty;
  CHECK_THROWS_WITH_AS(total_variation_from_independence(empty), "no samples",
                       std::invalid_argument);
}

TEST_CASE("total variation stays in range and ignores names") {
  Rng rng(derive_seed(9090, "tv-range"));
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k1 = 2 + rng.next_index(4);
    const std::size_t k2 = 2 + rng.next_index(4);
    std::vector<std::vector<std::uint64_t>> cells(
        k1, std::vector<std::uint64_t>(k2));
    for (auto& row : cells) {
      for (auto& c : row) c = rng.next_below(30);
    }
    cells[0][0] += 1;
    const auto joint = joint_from_cells(cells);
    const double tv = total_variation_from_independence(joint);
    CHECK(tv >= 0.0);
    CHECK(tv <= 1.0);

    // Renaming: prefix every token; the statistic cannot move.
    JointDistribution renamed;
    for (const auto& [cell, c] : joint.counts) {
      renamed.add("R" + cell.first, "R" + cell.second, c);
    }
    CHECK(total_variation_from_independence(renamed) ==
          doctest::Approx(tv).epsilon(1e-12));
  }
}

TEST_CASE("serial and parallel bootstrap agree exactly") {
  Rng rng(derive_seed(9090, "boot-agree"));
  const auto joint = sample_binary_pair(rng, 0.5, 0.5, 0.1, 2000);
  const auto serial = bootstrap_tv_distribution_serial(joint, 64, 12345);
  const auto parallel = bootstrap_tv_distribution(joint, 64, 12345);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i] == parallel[i]);
  }
}

TEST_CASE("classifier verdicts on clear-cut pairs") {
  ClassifyOptions options;
  options.bootstrap_rounds = 300;
  options.seed = 777;

  // X = Y uniform bit: TV = 0.5, far above the 0.05 threshold.
  const auto coupled =
      classify_pair(joint_from_cells({{5000, 0}, {0, 5000}}), options);
  CHECK(coupled.verdict == Verdict::kCorrelated);
  CHECK(coupled.tv_estimate == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(coupled.tv_ci_low >= 0.05);

  // Independent uniform bits at n = 10000: the statistic concentrates
  // near zero.
  Rng rng(derive_seed(9090, "clear-indep"));
  const auto indep =
      classify_pair(sample_binary_pair(rng, 0.5, 0.5, 0.0, 10000), options);
  CHECK(indep.verdict == Verdict::kIndependent);
  CHECK(indep.tv_ci_high < 0.05);

  // Ten samples of a weakly correlated pair cannot separate the
  // hypotheses: the interval straddles the threshold.
  const auto tiny = classify_pair(joint_from_cells({{3, 2}, {2, 3}}), options);
  CHECK(tiny.verdict == Verdict::kInsufficient);
  CHECK(tiny.tv_ci_low < 0.05);
  CHECK(tiny.tv_ci_high >= 0.05);

  JointDistribution empty;
  CHECK_THROWS_WITH_AS(classify_pair(empty, options), "no samples",
                       std::invalid_argument);
}

TEST_CASE("classification is exactly symmetric under coordinate swap") {
  Rng rng(derive_seed(9090, "swap"));
  ClassifyOptions options;
  options.bootstrap_rounds = 100;
  options.seed = 42;
  for (int trial = 0; trial < 10; ++trial) {
    const auto joint = sample_binary_pair(rng, 0.4, 0.6, 0.04, 500);
    const auto direct = classify_pair(joint, options);
    const auto swapped = classify_pair(transpose(joint), options);
    CHECK(direct.verdict == swapped.verdict);
    CHECK(direct.tv_estimate == swapped.tv_estimate);
    CHECK(direct.tv_ci_low == swapped.tv_ci_low);
    CHECK(direct.tv_ci_high == swapped.tv_ci_high);
  }
}

TEST_CASE("error rates on synthetic pair batches") {
  ClassifyOptions options;
  options.bootstrap_rounds = 200;
  options.seed = 99;

  // False-Correlated rate on exactly independent pairs.
  int false_correlated = 0;
  const int batch = 50;
  for (int i = 0; i < batch; ++i) {
    Rng rng(derive_seed(31337, "type1", i));
    const double p = 0.3 + 0.4 * rng.next_double();
    const double q = 0.3 + 0.4 * rng.next_double();
    const auto joint = sample_binary_pair(rng, p, q, 0.0, 10000);
    if (classify_pair(joint, options).verdict == Verdict::kCorrelated) {
      ++false_correlated;
    }
  }
  CHECK(static_cast<double>(false_correlated) / batch <= 0.10);

  // Detection rate on pairs whose true TV is 0.10.
  int detected = 0;
  for (int i = 0; i < batch; ++i) {
    Rng rng(derive_seed(31337, "power", i));
    const auto joint = sample_binary_pair(rng, 0.5, 0.5, 0.05, 10000);
    if (classify_pair(joint, options).verdict == Verdict::kCorrelated) {
      ++detected;
    }
  }
  CHECK(static_cast<double>(detected) / batch >= 0.90);
}

TEST_CASE("verdict matrix serialization") {
  ClassifyOptions options;
  options.bootstrap_rounds = 100;
  options.seed = 5;

  std::map<SurfacePair, JointDistribution> joints;
  joints[{"a", "b"}] = joint_from_cells({{5000, 0}, {0, 5000}});  // coupled
  joints[{"b", "c"}] = joint_from_cells({{3, 2}, {2, 3}});        // tiny n

  const auto matrix = classify_pairs({"a", "b", "c"}, joints, options);
  REQUIRE(matrix.verdicts.size() == 2);
  CHECK(matrix.verdicts.at({"a", "b"}).verdict == Verdict::kCorrelated);
  CHECK(matrix.verdicts.at({"b", "c"}).verdict == Verdict::kInsufficient);

  CHECK(verdict_matrix_csv(matrix) ==
        ",a,b,c\n"
        "a,C,C,\n"
        "b,C,C,?\n"
        "c,,?,C\n");

  const auto j = verdict_matrix_to_json(matrix);
  CHECK(j.at("surfaces").size() == 3);
  CHECK(j.at("pairs").at(0).at("a") == "a");
  CHECK(j.at("pairs").at(0).at("verdict") == "C");
  CHECK(j.at("pairs").at(1).at("verdict") == "?");
  CHECK(j.at("pairs").at(0).at("n").get<std::uint64_t>() == 10000);

  std::map<SurfacePair, JointDistribution> bad;
  bad[{"a", "ghost"}] = joint_from_cells({{1, 1}, {1, 1}});
  CHECK_THROWS_AS(classify_pairs({"a", "b"}, bad, options),
                  std::invalid_argument);
}

}  // TEST_SUITE

}  // namespace
}  // namespace surfent
