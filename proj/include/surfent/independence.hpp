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
// Pairwise independence classification. The statistic is the total
// variation distance between the observed joint distribution and the
// product of its marginals; a nonparametric bootstrap percentile interval
// turns it into a three-way verdict:
//   Correlated    — interval lower bound at or above the threshold,
//   Independent   — interval upper bound below the threshold,
//   Insufficient  — the interval straddles the threshold.

#ifndef SURFENT_INDEPENDENCE_HPP_
#define SURFENT_INDEPENDENCE_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "surfent/distribution.hpp"
#include "surfent/mi_graph.hpp"

namespace surfent {

enum class Verdict { kCorrelated, kIndependent, kInsufficient };

// "C", "I", or "?" — the cell alphabet of the verdict matrix.
std::string verdict_code(Verdict v);

struct PairVerdict {
  SurfaceId a;  // set by the batch API; empty for bare classify_pair calls
  SurfaceId b;
  Verdict verdict = Verdict::kInsufficient;
  double tv_estimate = 0.0;
  double tv_ci_low = 0.0;
  double tv_ci_high = 0.0;
  double confidence = 0.0;
  std::uint64_t n = 0;
};

struct ClassifyOptions {
  double threshold = 0.05;
  double confidence = 0.90;
  int bootstrap_rounds = 1000;
  std::uint64_t seed = 0;
};

// (1/2) sum over the full observed product domain of
// |p(x,y) - p(x) p(y)|, including cells with zero joint count.
double total_variation_from_independence(const JointDistribution& joint);

// One bootstrap TV value per round: resample n observations from the
// empirical joint, recompute the statistic. Each round draws from its own
// seed stream, so results are independent of evaluation order. The two
// variants return identical vectors; the second distributes rounds across
// OpenMP threads when available.
std::vector<double> bootstrap_tv_distribution_serial(
    const JointDistribution& joint, int rounds, std::uint64_t seed);
std::vector<double> bootstrap_tv_distribution(const JointDistribution& joint,
                                              int rounds, std::uint64_t seed);

// Deterministic given (joint, options). Exactly symmetric under swapping
// the pair's coordinates: the joint is brought to a canonical orientation
// before any randomness is consumed.
PairVerdict classify_pair(const JointDistribution& joint,
                          const ClassifyOptions& options = {});

struct VerdictMatrix {
  std::vector<SurfaceId> surfaces;
  std::map<SurfacePair, PairVerdict> verdicts;
};

// Classify every provided pair; per-pair seeds are derived from
// options.seed and the pair name, so the result is independent of map
// iteration order and of which pairs are present.
VerdictMatrix classify_pairs(
    const std::vector<SurfaceId>& surfaces,
    const std::map<SurfacePair, JointDistribution>& joints,
    const ClassifyOptions& options = {});

// Square CSV: header row of surface ids, one row per surface. Cells hold
// C/I/? for classified pairs, C on the diagonal (a surface determines
// itself), and are empty for pairs never measured.
std::string verdict_matrix_csv(const VerdictMatrix& matrix);

nlohmann::ordered_json verdict_matrix_to_json(const VerdictMatrix& matrix);
VerdictMatrix verdict_matrix_from_json(const nlohmann::json& j);

}  // namespace surfent

#endif  // SURFENT_INDEPENDENCE_HPP_
