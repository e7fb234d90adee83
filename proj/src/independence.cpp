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

#include "surfent/independence.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "surfent/rng.hpp"
#include "surfent/stats.hpp"

namespace surfent {

namespace {

// Dense row-major cell matrix with token indices taken in sorted order, so
// every sum below runs in one deterministic order.
struct DenseJoint {
  std::vector<ValueToken> rows;
  std::vector<ValueToken> cols;
  std::vector<std::uint64_t> cells;  // rows.size() * cols.size()
  std::uint64_t n = 0;
};

DenseJoint densify(const JointDistribution& joint) {
  DenseJoint dense;
  dense.n = joint.n;
  std::set<ValueToken> row_set, col_set;
  for (const auto& [cell, c] : joint.counts) {
    row_set.insert(cell.first);
    col_set.insert(cell.second);
  }
  dense.rows.assign(row_set.begin(), row_set.end());
  dense.cols.assign(col_set.begin(), col_set.end());
  std::map<ValueToken, std::size_t> row_index, col_index;
  for (std::size_t i = 0; i < dense.rows.size(); ++i) {
    row_index[dense.rows[i]] = i;
  }
  for (std::size_t j = 0; j < dense.cols.size(); ++j) {
    col_index[dense.cols[j]] = j;
  }
  dense.cells.assign(dense.rows.size() * dense.cols.size(), 0);
  for (const auto& [cell, c] : joint.counts) {
    dense.cells[row_index[cell.first] * dense.cols.size() +
                col_index[cell.second]] += c;
  }
  return dense;
}

double tv_from_counts(const std::vector<std::uint64_t>& cells, std::size_t k1,
                      std::size_t k2, std::uint64_t n) {
  std::vector<std::uint64_t> row_sum(k1, 0), col_sum(k2, 0);
  for (std::size_t i = 0; i < k1; ++i) {
    for (std::size_t j = 0; j < k2; ++j) {
      row_sum[i] += cells[i * k2 + j];
      col_sum[j] += cells[i * k2 + j];
    }
  }
  const double nd = static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < k1; ++i) {
    const double pr = static_cast<double>(row_sum[i]) / nd;
    for (std::size_t j = 0; j < k2; ++j) {
      const double joint_p = static_cast<double>(cells[i * k2 + j]) / nd;
      const double prod_p = pr * (static_cast<double>(col_sum[j]) / nd);
      acc += std::abs(joint_p - prod_p);
    }
  }
  return 0.5 * acc;
}

// Swap-symmetric canonical form: keep whichever of the joint and its
// transpose has the lexicographically smaller cell sequence. Both
// orientations of the same pair then take the identical code path,
// consuming randomness in the identical order.
JointDistribution canonical_orientation(const JointDistribution& joint) {
  JointDistribution t = transpose(joint);
  if (t.counts < joint.counts) return t;
  return joint;
}

double bootstrap_round(const DenseJoint& dense, const AliasTable& table,
                       std::uint64_t round_seed) {
  Rng rng(round_seed);
  std::vector<std::uint64_t> counts(dense.cells.size(), 0);
  for (std::uint64_t i = 0; i < dense.n; ++i) ++counts[table.sample(rng)];
  return tv_from_counts(counts, dense.rows.size(), dense.cols.size(), dense.n);
}

std::vector<double> bootstrap_impl(const JointDistribution& joint, int rounds,
                                   std::uint64_t seed, bool parallel) {
  if (joint.n == 0) throw std::invalid_argument("no samples");
  if (rounds < 1) throw std::invalid_argument("bootstrap rounds must be >= 1");
  const DenseJoint dense = densify(joint);
  std::vector<double> weights(dense.cells.size());
  for (std::size_t i = 0; i < dense.cells.size(); ++i) {
    weights[i] = static_cast<double>(dense.cells[i]);
  }
  const AliasTable table(weights);
  std::vector<double> out(rounds);
  if (parallel) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
#endif
    for (int r = 0; r < rounds; ++r) {
      out[r] = bootstrap_round(dense, table, derive_seed(seed, "tv-boot", r));
    }
  } else {
    for (int r = 0; r < rounds; ++r) {
      out[r] = bootstrap_round(dense, table, derive_seed(seed, "tv-boot", r));
    }
  }
  return out;
}

}  // namespace

std::string verdict_code(Verdict v) {
  switch (v) {
    case Verdict::kCorrelated:
      return "C";
    case Verdict::kIndependent:
      return "I";
    case Verdict::kInsufficient:
      return "?";
  }
  return "?";
}

double total_variation_from_independence(const JointDistribution& joint) {
  if (joint.n == 0) throw std::invalid_argument("no samples");
  const DenseJoint dense = densify(joint);
  return tv_from_counts(dense.cells, dense.rows.size(), dense.cols.size(),
                        dense.n);
}

std::vector<double> bootstrap_tv_distribution_serial(
    const JointDistribution& joint, int rounds, std::uint64_t seed) {
  return bootstrap_impl(joint, rounds, seed, /*parallel=*/false);
}

std::vector<double> bootstrap_tv_distribution(const JointDistribution& joint,
                                              int rounds, std::uint64_t seed) {
  return bootstrap_impl(joint, rounds, seed, /*parallel=*/true);
}

PairVerdict classify_pair(const JointDistribution& joint,
                          const ClassifyOptions& options) {
  if (joint.n == 0) throw std::invalid_argument("no samples");
  if (!(options.threshold > 0.0 && options.threshold < 1.0)) {
    throw std::invalid_argument("threshold must be in (0, 1)");
  }
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) {
    throw std::invalid_argument("confidence must be in (0, 1)");
  }
  const JointDistribution canonical = canonical_orientation(joint);

  PairVerdict verdict;
  verdict.tv_estimate = total_variation_from_independence(canonical);
  verdict.confidence = options.confidence;
  verdict.n = joint.n;

  std::vector<double> tv_samples = bootstrap_tv_distribution(
      canonical, options.bootstrap_rounds, options.seed);
  std::sort(tv_samples.begin(), tv_samples.end());
  const double tail = (1.0 - options.confidence) / 2.0;
  verdict.tv_ci_low = percentile_sorted(tv_samples, 100.0 * tail);
  verdict.tv_ci_high = percentile_sorted(tv_samples, 100.0 * (1.0 - tail));

  if (verdict.tv_ci_low >= options.threshold) {
    verdict.verdict = Verdict::kCorrelated;
  } else if (verdict.tv_ci_high < options.threshold) {
    verdict.verdict = Verdict::kIndependent;
  } else {
    verdict.verdict = Verdict::kInsufficient;
  }
  return verdict;
}

VerdictMatrix classify_pairs(
    const std::vector<SurfaceId>& surfaces,
    const std::map<SurfacePair, JointDistribution>& joints,
    const ClassifyOptions& options) {
  const std::set<SurfaceId> known(surfaces.begin(), surfaces.end());
  VerdictMatrix matrix;
  matrix.surfaces = surfaces;
  for (const auto& [pair, joint] : joints) {
    if (!known.contains(pair.first)) {
      throw std::invalid_argument("unknown surface: " + pair.first);
    }
    if (!known.contains(pair.second)) {
      throw std::invalid_argument("unknown surface: " + pair.second);
    }
    ClassifyOptions pair_options = options;
    pair_options.seed = derive_seed(
        options.seed, "classify:" + pair.first + "\x1f" + pair.second);
    PairVerdict verdict = classify_pair(joint, pair_options);
    verdict.a = pair.first;
    verdict.b = pair.second;
    matrix.verdicts[MiGraph::canonical_pair(pair.first, pair.second)] =
        std::move(verdict);
  }
  return matrix;
}

std::string verdict_matrix_csv(const VerdictMatrix& matrix) {
  std::ostringstream out;
  for (const auto& id : matrix.surfaces) out << ',' << id;
  out << '\n';
  for (const auto& row : matrix.surfaces) {
    out << row;
    for (const auto& col : matrix.surfaces) {
      out << ',';
      if (row == col) {
        out << 'C';  // a surface determines itself
        continue;
      }
      const auto it = matrix.verdicts.find(MiGraph::canonical_pair(row, col));
      if (it != matrix.verdicts.end()) out << verdict_code(it->second.verdict);
    }
    out << '\n';
  }
  return out.str();
}

nlohmann::ordered_json verdict_matrix_to_json(const VerdictMatrix& matrix) {
  nlohmann::ordered_json j;
  j["surfaces"] = matrix.surfaces;
  j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& [pair, verdict] : matrix.verdicts) {
    nlohmann::ordered_json p;
    p["a"] = pair.first;
    p["b"] = pair.second;
    p["verdict"] = verdict_code(verdict.verdict);
    p["tv"] = verdict.tv_estimate;
    p["ci"] = {verdict.tv_ci_low, verdict.tv_ci_high};
    p["confidence"] = verdict.confidence;
    p["n"] = verdict.n;
    j["pairs"].push_back(std::move(p));
  }
  return j;
}

VerdictMatrix verdict_matrix_from_json(const nlohmann::json& j) {
  VerdictMatrix matrix;
  matrix.surfaces = j.at("surfaces").get<std::vector<SurfaceId>>();
  for (const auto& p : j.at("pairs")) {
    PairVerdict v;
    v.a = p.at("a").get<SurfaceId>();
    v.b = p.at("b").get<SurfaceId>();
    const std::string code = p.at("verdict").get<std::string>();
    if (code == "C") {
      v.verdict = Verdict::kCorrelated;
    } else if (code == "I") {
      v.verdict = Verdict::kIndependent;
    } else if (code == "?") {
      v.verdict = Verdict::kInsufficient;
    } else {
      throw std::invalid_argument("unknown verdict code: " + code);
    }
    v.tv_estimate = p.at("tv").get<double>();
    v.tv_ci_low = p.at("ci").at(0).get<double>();
    v.tv_ci_high = p.at("ci").at(1).get<double>();
    v.confidence = p.at("confidence").get<double>();
    v.n = p.at("n").get<std::uint64_t>();
    matrix.verdicts[MiGraph::canonical_pair(v.a, v.b)] = v;
  }
  return matrix;
}

}  // namespace surfent
