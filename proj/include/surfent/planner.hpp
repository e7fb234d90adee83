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
// Greedy surface-subset assignment: hand each client group a surface
// subset L so that every surface pair (i,j) accumulates its required
// joint-sample count n_ij, while no group's subset exceeds a per-client
// entropy budget H. Each round selects the subset maximizing the still-
// outstanding pair demand
//     s(L) = sum over residual pairs inside L of n_ij,
// subject to h(L) = sum of marginal entropies <= H (a conservative stand-in
// for the subset's joint entropy), assigns m = the largest residual inside
// L*, and zeroes every pair L* covers.

#ifndef SURFENT_PLANNER_HPP_
#define SURFENT_PLANNER_HPP_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "surfent/mi_graph.hpp"

namespace surfent {

struct PlanningInput {
  std::vector<SurfaceId> surfaces;
  std::map<SurfaceId, double> h;  // marginal entropies, bits
  std::map<SurfacePair, std::uint64_t> n_required;
  double budget = 0.0;  // bits per client
  std::uint64_t pool_size = 0;
};

struct PlanRound {
  std::vector<SurfaceId> subset;  // L*, sorted
  std::uint64_t clients = 0;      // m(L*)
};

struct AssignmentPlan {
  std::vector<PlanRound> rounds;
  std::map<SurfacePair, std::uint64_t> residual;  // all zero on success
  std::uint64_t total_clients = 0;
};

// Raised when the client pool runs out mid-plan; carries the partial plan
// with honest residual accounting for the truncated final round.
class PoolExhaustedError : public std::runtime_error {
 public:
  PoolExhaustedError(const std::string& message, AssignmentPlan partial)
      : std::runtime_error(message), partial_(std::move(partial)) {}

  const AssignmentPlan& partial_plan() const { return partial_; }

 private:
  AssignmentPlan partial_;
};

struct PlanReport {
  bool ok = false;
  std::vector<std::string> failures;
  std::uint64_t total_clients = 0;
  std::map<SurfacePair, std::uint64_t> delivered;
};

// Runs the greedy loop to completion. Throws std::invalid_argument naming
// the pair when some demanded pair cannot fit any budget-respecting subset,
// and PoolExhaustedError when pool_size clients are not enough.
AssignmentPlan greedy_assign(const PlanningInput& input);

// One inner maximization step over the residual demand. Exact enumeration
// when at most 15 surfaces carry outstanding demand; a seeded greedy
// grower with one-swap refinement beyond that. Throws std::runtime_error
// when no feasible subset has positive demand.
std::vector<SurfaceId> select_subset(
    const PlanningInput& input,
    const std::map<SurfacePair, std::uint64_t>& residual);

// Independent re-check of both plan constraints plus the delivered
// per-pair totals; never throws on plan defects (verdict in the report).
PlanReport verify_plan(const PlanningInput& input, const AssignmentPlan& plan);

nlohmann::ordered_json planning_input_to_json(const PlanningInput& input);
PlanningInput planning_input_from_json(const nlohmann::json& j);
nlohmann::ordered_json plan_to_json(const AssignmentPlan& plan);
AssignmentPlan plan_from_json(const nlohmann::json& j);

}  // namespace surfent

#endif  // SURFENT_PLANNER_HPP_
