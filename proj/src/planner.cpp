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

#include "surfent/planner.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace surfent {

namespace {

constexpr double kBudgetSlack = 1e-9;  // absorbs floating-point entropy sums
constexpr std::size_t kExactLimit = 15;

void validate_input(const PlanningInput& input) {
  if (input.budget <= 0.0) throw std::invalid_argument("budget must be > 0");
  const std::set<SurfaceId> known(input.surfaces.begin(),
                                  input.surfaces.end());
  for (const auto& id : input.surfaces) {
    const auto it = input.h.find(id);
    if (it == input.h.end()) {
      throw std::invalid_argument("missing entropy for surface: " + id);
    }
    if (it->second < 0.0) {
      throw std::invalid_argument("negative entropy for surface: " + id);
    }
  }
  for (const auto& [pair, n] : input.n_required) {
    if (pair.first == pair.second) {
      throw std::invalid_argument("self-pair: " + pair.first);
    }
    if (!known.contains(pair.first)) {
      throw std::invalid_argument("unknown surface: " + pair.first);
    }
    if (!known.contains(pair.second)) {
      throw std::invalid_argument("unknown surface: " + pair.second);
    }
    (void)n;
  }
}

double subset_h(const PlanningInput& input,
                const std::vector<SurfaceId>& subset) {
  double total = 0.0;
  for (const auto& id : subset) total += input.h.at(id);
  return total;
}

std::uint64_t subset_demand(const std::map<SurfacePair, std::uint64_t>& residual,
                            const std::set<SurfaceId>& members) {
  std::uint64_t s = 0;
  for (const auto& [pair, n] : residual) {
    if (n > 0 && members.contains(pair.first) &&
        members.contains(pair.second)) {
      s += n;
    }
  }
  return s;
}

// Surfaces that participate in at least one outstanding pair, sorted.
std::vector<SurfaceId> demanded_surfaces(
    const std::map<SurfacePair, std::uint64_t>& residual) {
  std::set<SurfaceId> ids;
  for (const auto& [pair, n] : residual) {
    if (n > 0) {
      ids.insert(pair.first);
      ids.insert(pair.second);
    }
  }
  return {ids.begin(), ids.end()};
}

struct Candidate {
  std::uint64_t demand = 0;
  double h = std::numeric_limits<double>::infinity();
  std::vector<SurfaceId> subset;

  // Deterministic preference: more demand, then lower entropy load, then
  // fewer surfaces, then name order.
  bool better_than(const Candidate& other) const {
    if (demand != other.demand) return demand > other.demand;
    if (h != other.h) return h < other.h;
    if (subset.size() != other.subset.size()) {
      return subset.size() < other.subset.size();
    }
    return subset < other.subset;
  }
};

Candidate exact_select(const PlanningInput& input,
                       const std::map<SurfacePair, std::uint64_t>& residual,
                       const std::vector<SurfaceId>& candidates) {
  const std::size_t k = candidates.size();
  std::vector<double> h(k);
  for (std::size_t i = 0; i < k; ++i) h[i] = input.h.at(candidates[i]);
  // Residual demand between candidate indices.
  std::vector<std::vector<std::uint64_t>> demand(
      k, std::vector<std::uint64_t>(k, 0));
  std::map<SurfaceId, std::size_t> index;
  for (std::size_t i = 0; i < k; ++i) index[candidates[i]] = i;
  for (const auto& [pair, n] : residual) {
    if (n == 0) continue;
    demand[index.at(pair.first)][index.at(pair.second)] = n;
    demand[index.at(pair.second)][index.at(pair.first)] = n;
  }

  Candidate best;
  for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
    double mask_h = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      if (mask & (1u << i)) mask_h += h[i];
    }
    if (mask_h > input.budget + kBudgetSlack) continue;
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (!(mask & (1u << i))) continue;
      for (std::size_t j = i + 1; j < k; ++j) {
        if (mask & (1u << j)) s += demand[i][j];
      }
    }
    if (s == 0) continue;
    Candidate cand;
    cand.demand = s;
    cand.h = mask_h;
    for (std::size_t i = 0; i < k; ++i) {
      if (mask & (1u << i)) cand.subset.push_back(candidates[i]);
    }
    if (cand.better_than(best)) best = std::move(cand);
  }
  return best;
}

Candidate greedy_select(const PlanningInput& input,
                        const std::map<SurfacePair, std::uint64_t>& residual,
                        const std::vector<SurfaceId>& candidates) {
  const auto evaluate = [&](const std::set<SurfaceId>& members) {
    Candidate cand;
    cand.demand = subset_demand(residual, members);
    cand.subset.assign(members.begin(), members.end());
    cand.h = subset_h(input, cand.subset);
    return cand;
  };

  // Seed: the feasible demanded pair with the largest requirement.
  Candidate best;
  for (const auto& [pair, n] : residual) {
    if (n == 0) continue;
    const double pair_h = input.h.at(pair.first) + input.h.at(pair.second);
    if (pair_h > input.budget + kBudgetSlack) continue;
    Candidate cand;
    cand.demand = n;
    cand.h = pair_h;
    cand.subset = {pair.first, pair.second};
    std::sort(cand.subset.begin(), cand.subset.end());
    if (cand.better_than(best)) best = cand;
  }
  if (best.subset.empty()) return best;

  std::set<SurfaceId> members(best.subset.begin(), best.subset.end());
  // Grow: add the surface with the largest demand gain that still fits.
  for (;;) {
    Candidate grown = evaluate(members);
    Candidate next = grown;
    for (const auto& id : candidates) {
      if (members.contains(id)) continue;
      if (grown.h + input.h.at(id) > input.budget + kBudgetSlack) continue;
      std::set<SurfaceId> trial = members;
      trial.insert(id);
      const Candidate cand = evaluate(trial);
      if (cand.demand > grown.demand && cand.better_than(next)) next = cand;
    }
    if (next.subset == grown.subset) break;
    members = {next.subset.begin(), next.subset.end()};
  }

  // One-swap refinement: replace a member with an outsider when that
  // strictly raises the covered demand.
  for (int pass = 0; pass < 50; ++pass) {
    const Candidate current = evaluate(members);
    Candidate improved = current;
    for (const auto& out : current.subset) {
      for (const auto& in : candidates) {
        if (members.contains(in)) continue;
        std::set<SurfaceId> trial = members;
        trial.erase(out);
        trial.insert(in);
        Candidate cand = evaluate(trial);
        if (cand.h > input.budget + kBudgetSlack) continue;
        if (cand.demand > current.demand && cand.better_than(improved)) {
          improved = std::move(cand);
        }
      }
    }
    if (improved.subset == current.subset) break;
    members = {improved.subset.begin(), improved.subset.end()};
  }
  return evaluate(members);
}

}  // namespace

std::vector<SurfaceId> select_subset(
    const PlanningInput& input,
    const std::map<SurfacePair, std::uint64_t>& residual) {
  const std::vector<SurfaceId> candidates = demanded_surfaces(residual);
  Candidate best;
  if (candidates.size() <= kExactLimit) {
    best = exact_select(input, residual, candidates);
  } else {
    best = greedy_select(input, residual, candidates);
  }
  if (best.subset.empty() || best.demand == 0) {
    throw std::runtime_error("no feasible subset with positive demand");
  }
  return best.subset;
}

AssignmentPlan greedy_assign(const PlanningInput& input) {
  validate_input(input);
  AssignmentPlan plan;
  for (const auto& [pair, n] : input.n_required) {
    if (n == 0) continue;
    const SurfacePair canonical =
        MiGraph::canonical_pair(pair.first, pair.second);
    plan.residual[canonical] += n;
    const double pair_h = input.h.at(pair.first) + input.h.at(pair.second);
    if (pair_h > input.budget + kBudgetSlack) {
      throw std::invalid_argument("unsatisfiable pair: " + canonical.first +
                                  "," + canonical.second);
    }
  }

  while (true) {
    std::uint64_t outstanding = 0;
    for (const auto& [pair, n] : plan.residual) outstanding += n;
    if (outstanding == 0) break;

    const std::vector<SurfaceId> subset = select_subset(input, plan.residual);
    const std::set<SurfaceId> members(subset.begin(), subset.end());

    std::uint64_t m = 0;
    for (const auto& [pair, n] : plan.residual) {
      if (members.contains(pair.first) && members.contains(pair.second)) {
        m = std::max(m, n);
      }
    }

    const std::uint64_t available = input.pool_size - plan.total_clients;
    const std::uint64_t assigned = std::min(m, available);
    if (assigned > 0) {
      PlanRound round;
      round.subset = subset;
      round.clients = assigned;
      plan.rounds.push_back(round);
      plan.total_clients += assigned;
      for (auto& [pair, n] : plan.residual) {
        if (members.contains(pair.first) && members.contains(pair.second)) {
          n = n > assigned ? n - assigned : 0;
        }
      }
    }
    if (assigned < m) {
      throw PoolExhaustedError("client pool exhausted", std::move(plan));
    }
  }
  return plan;
}

PlanReport verify_plan(const PlanningInput& input, const AssignmentPlan& plan) {
  PlanReport report;
  for (std::size_t r = 0; r < plan.rounds.size(); ++r) {
    const PlanRound& round = plan.rounds[r];
    const double h = subset_h(input, round.subset);
    if (h > input.budget + kBudgetSlack) {
      report.failures.push_back("round " + std::to_string(r) +
                                " over budget: h=" + std::to_string(h));
    }
    report.total_clients += round.clients;
    const std::set<SurfaceId> members(round.subset.begin(),
                                      round.subset.end());
    for (auto a = members.begin(); a != members.end(); ++a) {
      for (auto b = std::next(a); b != members.end(); ++b) {
        report.delivered[MiGraph::canonical_pair(*a, *b)] += round.clients;
      }
    }
  }
  for (const auto& [pair, n] : input.n_required) {
    if (n == 0) continue;
    const SurfacePair canonical =
        MiGraph::canonical_pair(pair.first, pair.second);
    const auto it = report.delivered.find(canonical);
    const std::uint64_t got = it == report.delivered.end() ? 0 : it->second;
    if (got < n) {
      report.failures.push_back("pair " + canonical.first + "," +
                                canonical.second + " undercovered: " +
                                std::to_string(got) + " < " +
                                std::to_string(n));
    }
  }
  if (report.total_clients > input.pool_size) {
    report.failures.push_back("plan exceeds client pool");
  }
  report.ok = report.failures.empty();
  return report;
}

nlohmann::ordered_json planning_input_to_json(const PlanningInput& input) {
  nlohmann::ordered_json j;
  j["surfaces"] = input.surfaces;
  j["h"] = nlohmann::ordered_json::object();
  for (const auto& [id, bits] : input.h) j["h"][id] = bits;
  j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& [pair, n] : input.n_required) {
    j["pairs"].push_back(
        {{"a", pair.first}, {"b", pair.second}, {"n", n}});
  }
  j["budget"] = input.budget;
  j["pool"] = input.pool_size;
  return j;
}

PlanningInput planning_input_from_json(const nlohmann::json& j) {
  PlanningInput input;
  input.surfaces = j.at("surfaces").get<std::vector<SurfaceId>>();
  for (const auto& [id, bits] : j.at("h").items()) {
    input.h[id] = bits.get<double>();
  }
  for (const auto& pair : j.at("pairs")) {
    input.n_required[MiGraph::canonical_pair(
        pair.at("a").get<SurfaceId>(), pair.at("b").get<SurfaceId>())] =
        pair.at("n").get<std::uint64_t>();
  }
  input.budget = j.at("budget").get<double>();
  input.pool_size = j.at("pool").get<std::uint64_t>();
  return input;
}

nlohmann::ordered_json plan_to_json(const AssignmentPlan& plan) {
  nlohmann::ordered_json j;
  j["rounds"] = nlohmann::ordered_json::array();
  for (const auto& round : plan.rounds) {
    j["rounds"].push_back(
        {{"subset", round.subset}, {"clients", round.clients}});
  }
  j["total_clients"] = plan.total_clients;
  j["residual"] = nlohmann::ordered_json::array();
  for (const auto& [pair, n] : plan.residual) {
    if (n > 0) {
      j["residual"].push_back(
          {{"a", pair.first}, {"b", pair.second}, {"n", n}});
    }
  }
  return j;
}

AssignmentPlan plan_from_json(const nlohmann::json& j) {
  AssignmentPlan plan;
  for (const auto& round : j.at("rounds")) {
    PlanRound r;
    r.subset = round.at("subset").get<std::vector<SurfaceId>>();
    r.clients = round.at("clients").get<std::uint64_t>();
    plan.rounds.push_back(std::move(r));
    plan.total_clients += plan.rounds.back().clients;
  }
  for (const auto& pair : j.at("residual")) {
    plan.residual[MiGraph::canonical_pair(pair.at("a").get<SurfaceId>(),
                                          pair.at("b").get<SurfaceId>())] =
        pair.at("n").get<std::uint64_t>();
  }
  return plan;
}

}  // namespace surfent
