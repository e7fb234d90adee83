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

#include "surfent/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "surfent/estimation.hpp"
#include "surfent/rng.hpp"

namespace surfent {
namespace {

constexpr double kRowSumTolerance = 1e-12;
constexpr std::uint64_t kMaxEnumeration = 1u << 20;

std::string client_name(std::size_t index) {
  return "c" + std::to_string(index);
}

// Shared visit loop: one seeded stream per client, one site draw per visit,
// one call draw per surface per visit. The callback sees each call event;
// first_only restricts it to the first call of each surface.
template <typename OnCall>
void replay_visits(const Population& population, std::uint64_t seed,
                   std::string_view stream_tag, bool first_only,
                   OnCall&& on_call) {
  const PopulationModel& model = population.model;
  const std::size_t num_surfaces = model.surfaces.size();
  std::vector<char> seen(num_surfaces);
  for (std::size_t c = 0; c < population.num_clients(); ++c) {
    Rng rng(derive_seed(seed, stream_tag, c));
    std::fill(seen.begin(), seen.end(), 0);
    for (std::uint32_t visit = 0; visit < model.visits_per_client; ++visit) {
      const std::string& site = model.sites[rng.next_index(model.sites.size())];
      for (std::size_t s = 0; s < num_surfaces; ++s) {
        if (rng.next_double() >= model.surfaces[s].call_probability) continue;
        if (first_only) {
          if (seen[s]) continue;
          seen[s] = 1;
        }
        on_call(c, s, site, visit, rng);
      }
    }
  }
}

}  // namespace

std::size_t PopulationModel::surface_index(const SurfaceId& id) const {
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    if (surfaces[i].id == id) return i;
  }
  throw std::invalid_argument("unknown surface: " + id);
}

std::vector<std::size_t> PopulationModel::sampling_order() const {
  // Breadth-first from the roots along parent links; anything unreachable
  // sits on a cycle.
  std::vector<std::vector<std::size_t>> children(surfaces.size());
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    if (surfaces[i].parent) {
      children[*surfaces[i].parent].push_back(i);
    } else {
      order.push_back(i);
    }
  }
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (const std::size_t child : children[order[head]]) {
      order.push_back(child);
    }
  }
  if (order.size() != surfaces.size()) {
    throw std::invalid_argument("dependency forest has a cycle");
  }
  return order;
}

void PopulationModel::validate() const {
  if (surfaces.empty()) throw std::invalid_argument("model has no surfaces");
  if (sites.empty()) throw std::invalid_argument("model has no sites");
  if (visits_per_client == 0) {
    throw std::invalid_argument("visits_per_client must be positive");
  }
  std::set<SurfaceId> ids;
  const std::set<std::string> family_set(families.begin(), families.end());
  for (const SurfaceSpec& s : surfaces) {
    if (s.id.empty()) throw std::invalid_argument("surface with empty id");
    if (!ids.insert(s.id).second) {
      throw std::invalid_argument("duplicate surface id: " + s.id);
    }
    if (s.domain.empty()) {
      throw std::invalid_argument("empty domain for surface " + s.id);
    }
    if (std::set<ValueToken>(s.domain.begin(), s.domain.end()).size() !=
        s.domain.size()) {
      throw std::invalid_argument("duplicate domain value for surface " +
                                  s.id);
    }
    if (family_set.find(s.family) == family_set.end()) {
      throw std::invalid_argument("unknown family for surface " + s.id +
                                  ": " + s.family);
    }
    if (!(s.call_probability >= 0.0 && s.call_probability <= 1.0)) {
      throw std::invalid_argument("call probability out of [0,1] for surface " +
                                  s.id);
    }
    const auto check_row = [&](const std::vector<double>& row,
                               std::size_t want) {
      if (row.size() != want) return false;
      double sum = 0.0;
      for (const double p : row) {
        if (!(p >= 0.0)) return false;
        sum += p;
      }
      return std::abs(sum - 1.0) <= kRowSumTolerance;
    };
    if (s.parent) {
      if (*s.parent >= surfaces.size()) {
        throw std::invalid_argument("parent index out of range for surface " +
                                    s.id);
      }
      if (!s.marginal.empty()) {
        throw std::invalid_argument("surface " + s.id +
                                    " has both a parent and a marginal");
      }
      const std::size_t parent_domain = surfaces[*s.parent].domain.size();
      if (s.conditional.size() != parent_domain) {
        throw std::invalid_argument("invalid conditional table for surface " +
                                    s.id + ": need one row per parent value");
      }
      for (const auto& row : s.conditional) {
        if (!check_row(row, s.domain.size())) {
          throw std::invalid_argument("invalid conditional table for surface " +
                                      s.id);
        }
      }
    } else {
      if (!s.conditional.empty()) {
        throw std::invalid_argument("surface " + s.id +
                                    " has a conditional table but no parent");
      }
      if (!check_row(s.marginal, s.domain.size())) {
        throw std::invalid_argument("invalid marginal for surface " + s.id);
      }
    }
  }
  sampling_order();  // throws on parent cycles
}

namespace {

Population population_impl(const PopulationModel& model,
                           std::size_t num_clients, std::uint64_t seed,
                           bool parallel) {
  model.validate();
  const std::vector<std::size_t> order = model.sampling_order();
  Population population;
  population.model = model;
  population.values.assign(num_clients,
                           std::vector<std::uint32_t>(model.surfaces.size()));

  const auto draw_client = [&](std::size_t c) {
    Rng rng(derive_seed(seed, "population", c));
    std::vector<std::uint32_t>& row = population.values[c];
    for (const std::size_t s : order) {
      const SurfaceSpec& spec = model.surfaces[s];
      if (spec.parent) {
        row[s] = sample_categorical(rng, spec.conditional[row[*spec.parent]]);
      } else {
        row[s] = sample_categorical(rng, spec.marginal);
      }
    }
  };

  if (parallel) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(num_clients); ++c) {
      draw_client(static_cast<std::size_t>(c));
    }
    return population;
#endif
  }
  for (std::size_t c = 0; c < num_clients; ++c) draw_client(c);
  return population;
}

}  // namespace

Population generate_population(const PopulationModel& model,
                               std::size_t num_clients, std::uint64_t seed) {
  return population_impl(model, num_clients, seed, true);
}

Population generate_population_serial(const PopulationModel& model,
                                      std::size_t num_clients,
                                      std::uint64_t seed) {
  return population_impl(model, num_clients, seed, false);
}

double exact_joint_entropy(const PopulationModel& model,
                           const std::vector<SurfaceId>& subset) {
  if (subset.empty()) return 0.0;
  model.validate();

  // Close the query under ancestors: the joint over the closure factorizes
  // along parent links, so enumerating it is exact.
  std::set<std::size_t> closure;
  for (const SurfaceId& id : subset) {
    std::size_t cursor = model.surface_index(id);
    while (closure.insert(cursor).second && model.surfaces[cursor].parent) {
      cursor = *model.surfaces[cursor].parent;
    }
  }

  std::vector<std::size_t> enum_order;  // parents before children
  for (const std::size_t s : model.sampling_order()) {
    if (closure.count(s)) enum_order.push_back(s);
  }
  std::uint64_t assignments = 1;
  for (const std::size_t s : enum_order) {
    assignments *= model.surfaces[s].domain.size();
    if (assignments > kMaxEnumeration) {
      throw std::invalid_argument("domain too large");
    }
  }

  // Mixed-radix odometer over the closure; accumulate probability mass per
  // subset assignment.
  std::vector<std::size_t> position(model.surfaces.size(), 0);
  std::vector<std::size_t> subset_index;
  std::uint64_t subset_cells = 1;
  for (const SurfaceId& id : subset) {
    const std::size_t s = model.surface_index(id);
    subset_index.push_back(s);
    subset_cells *= model.surfaces[s].domain.size();
  }
  std::vector<double> mass(subset_cells, 0.0);
  std::vector<std::uint32_t> value(model.surfaces.size(), 0);
  for (std::uint64_t it = 0; it < assignments; ++it) {
    // Decode the odometer into per-surface values along enum_order.
    std::uint64_t rest = it;
    for (const std::size_t s : enum_order) {
      const std::size_t d = model.surfaces[s].domain.size();
      value[s] = static_cast<std::uint32_t>(rest % d);
      rest /= d;
    }
    double p = 1.0;
    for (const std::size_t s : enum_order) {
      const SurfaceSpec& spec = model.surfaces[s];
      p *= spec.parent ? spec.conditional[value[*spec.parent]][value[s]]
                       : spec.marginal[value[s]];
      if (p == 0.0) break;
    }
    if (p == 0.0) continue;
    std::uint64_t cell = 0;
    std::uint64_t stride = 1;
    for (const std::size_t s : subset_index) {
      cell += stride * value[s];
      stride *= model.surfaces[s].domain.size();
    }
    mass[cell] += p;
  }

  double h = 0.0;
  for (const double p : mass) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(0.0, h / kLn2);
}

std::map<std::string, std::vector<SurfaceId>> family_partition(
    const PopulationModel& model) {
  std::map<std::string, std::vector<SurfaceId>> partition;
  for (const SurfaceSpec& s : model.surfaces) {
    partition[s.family].push_back(s.id);
  }
  for (auto& [family, members] : partition) {
    std::sort(members.begin(), members.end());
  }
  return partition;
}

std::map<std::string, double> expected_family_calls(
    const PopulationModel& model) {
  // Probability a surface runs at least once over the horizon is
  // 1 - (1 - q)^visits; summing over the family gives the expected number
  // of distinct surfaces observed.
  std::map<std::string, double> expectation;
  for (const SurfaceSpec& s : model.surfaces) {
    const double miss = std::pow(1.0 - s.call_probability,
                                 static_cast<double>(model.visits_per_client));
    expectation[s.family] += 1.0 - miss;
  }
  return expectation;
}

std::vector<PresenceRecord> run_phase1(const Population& population,
                                       std::uint64_t seed) {
  std::vector<PresenceRecord> stream;
  replay_visits(population, seed, "presence", /*first_only=*/false,
                [&](std::size_t c, std::size_t s, const std::string& site,
                    std::uint32_t visit, Rng&) {
                  stream.push_back({client_name(c), site,
                                    population.model.surfaces[s].id, visit});
                });
  return stream;
}

Phase2Result run_phase2(const Population& population,
                        const std::map<std::string, std::vector<SurfaceId>>&
                            families,
                        const std::map<std::string, double>& expected_calls,
                        std::uint64_t seed) {
  const PopulationModel& model = population.model;

  // The family map must partition the surfaces: every surface in exactly
  // one family.
  std::set<SurfaceId> assigned;
  for (const auto& [family, members] : families) {
    for (const SurfaceId& id : members) {
      model.surface_index(id);
      if (!assigned.insert(id).second) {
        throw std::invalid_argument("families do not partition the surfaces");
      }
    }
  }
  if (assigned.size() != model.surfaces.size()) {
    throw std::invalid_argument("families do not partition the surfaces");
  }

  std::vector<std::string> family_names;
  for (const auto& [family, members] : families) {
    const auto it = expected_calls.find(family);
    if (it == expected_calls.end() || !(it->second > 0.0)) {
      throw std::invalid_argument("expected calls must be positive for family " +
                                  family);
    }
    family_names.push_back(family);
  }

  Phase2Result result;
  result.clients.reserve(population.num_clients());

  // Per-client family pick and per-observation report draws all come from
  // the client's own streams, consumed in a fixed order, so the outcome is
  // independent of how clients are interleaved.
  for (std::size_t c = 0; c < population.num_clients(); ++c) {
    Rng pick(derive_seed(seed, "family-pick", c));
    const std::string& family = family_names[pick.next_index(
        family_names.size())];
    ClientState state;
    state.client_id = client_name(c);
    state.assigned_list = families.at(family);
    std::sort(state.assigned_list.begin(), state.assigned_list.end());
    state.reporting_probability =
        std::min(1.0, static_cast<double>(kValueReportCap) /
                          expected_calls.at(family));
    result.clients.push_back(std::move(state));
  }

  replay_visits(
      population, seed, "capped", /*first_only=*/true,
      [&](std::size_t c, std::size_t s, const std::string& site,
          std::uint32_t visit, Rng& rng) {
        ClientState& state = result.clients[c];
        // Record-then-filter: the visit loop observes every surface that
        // runs; membership in the assigned list is checked only here, at
        // emission time, so emitted records are always a subset of L_c.
        const SurfaceId& id = population.model.surfaces[s].id;
        const bool member = std::binary_search(state.assigned_list.begin(),
                                               state.assigned_list.end(), id);
        if (!member) return;
        if (rng.next_double() >= state.reporting_probability) return;
        result.records.push_back(
            {state.client_id, id, population.token(c, s), site, visit});
        if (++state.reported_count >= kValueReportCap) {
          state.reporting_probability = 0.0;  // cap reached: report no more
        }
      });

  // Cap safety is re-checked on every run, not just in tests.
  for (const ClientState& state : result.clients) {
    if (state.reported_count > kValueReportCap) {
      throw std::logic_error("report cap violated");
    }
  }
  return result;
}

Phase3Result run_phase3(const Population& population,
                        const AssignmentPlan& plan, std::uint64_t seed,
                        double budget_bits) {
  const PopulationModel& model = population.model;
  Phase3Result result;

  // Refuse over-budget subsets before emitting anything.
  std::map<std::vector<SurfaceId>, double> subset_bits;
  for (const PlanRound& round : plan.rounds) {
    if (!subset_bits.count(round.subset)) {
      const double bits = exact_joint_entropy(model, round.subset);
      if (bits > budget_bits + 1e-9) {
        std::string joined;
        for (const SurfaceId& id : round.subset) {
          if (!joined.empty()) joined += ",";
          joined += id;
        }
        throw std::invalid_argument(
            "subset exceeds per-client information budget: {" + joined + "}");
      }
      subset_bits[round.subset] = bits;
      result.max_subset_bits = std::max(result.max_subset_bits, bits);
    }
  }
  if (population.num_clients() < plan.total_clients) {
    throw std::invalid_argument("population smaller than plan");
  }

  std::size_t cursor = 0;
  for (std::size_t r = 0; r < plan.rounds.size(); ++r) {
    const PlanRound& round = plan.rounds[r];
    std::vector<std::size_t> member_index;
    for (const SurfaceId& id : round.subset) {
      member_index.push_back(model.surface_index(id));
    }
    for (std::uint64_t i = 0; i < round.clients; ++i, ++cursor) {
      Rng rng(derive_seed(seed, "targeted", cursor));
      const std::string& site = model.sites[rng.next_index(model.sites.size())];
      ClientState state;
      state.client_id = "p3-" + std::to_string(cursor);  // disjoint pool
      state.assigned_list = round.subset;
      state.reporting_probability = 1.0;
      for (const std::size_t s : member_index) {
        result.records.push_back({state.client_id, model.surfaces[s].id,
                                  population.token(cursor, s), site, r});
        ++state.reported_count;
      }
      result.clients.push_back(std::move(state));
    }
  }
  return result;
}

std::vector<ReportRecord> hash_values(const std::vector<ReportRecord>& records,
                                      std::uint64_t salt, unsigned bits) {
  if (bits == 0 || bits > 64) {
    throw std::invalid_argument("digest width must be in [1,64] bits");
  }
  const std::uint64_t mask =
      bits == 64 ? ~0ull : ((1ull << bits) - 1);
  std::map<std::uint64_t, ValueToken> preimage;
  std::vector<ReportRecord> hashed;
  hashed.reserve(records.size());
  for (const ReportRecord& record : records) {
    const std::uint64_t digest =
        mix_seed(salt, fnv1a64(record.value)) & mask;
    const auto [it, inserted] = preimage.emplace(digest, record.value);
    if (!inserted && it->second != record.value) {
      throw std::runtime_error("hash collision detected; re-salt");
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx",
                  static_cast<unsigned long long>(digest));
    ReportRecord out = record;
    out.value = std::string("h") + buffer;
    hashed.push_back(std::move(out));
  }
  return hashed;
}

std::map<ValueKey, std::uint64_t> distinct_client_counts(
    const std::vector<ReportRecord>& records) {
  std::map<ValueKey, std::set<std::string>> clients;
  for (const ReportRecord& record : records) {
    clients[{record.surface, record.value}].insert(record.client_id);
  }
  std::map<ValueKey, std::uint64_t> counts;
  for (const auto& [key, ids] : clients) {
    counts[key] = ids.size();
  }
  return counts;
}

KAnonymityResult k_anonymity_filter(
    const std::map<ValueKey, std::uint64_t>& counts, std::uint64_t threshold) {
  KAnonymityResult result;
  for (const auto& [key, count] : counts) {
    (count < threshold ? result.dropped : result.kept)[key] = count;
  }
  return result;
}

std::vector<ReportRecord> filter_reports(
    const std::vector<ReportRecord>& records, std::uint64_t threshold) {
  const KAnonymityResult verdicts =
      k_anonymity_filter(distinct_client_counts(records), threshold);
  std::vector<ReportRecord> kept;
  for (const ReportRecord& record : records) {
    if (verdicts.kept.count({record.surface, record.value})) {
      kept.push_back(record);
    }
  }
  return kept;
}

namespace {

// First report per (client, surface) wins; repeat reports of the same
// surface by one client carry no extra information.
std::map<std::string, ValueToken> first_values(
    const std::vector<ReportRecord>& records, const SurfaceId& surface) {
  std::map<std::string, ValueToken> first;
  for (const ReportRecord& record : records) {
    if (record.surface == surface) {
      first.emplace(record.client_id, record.value);
    }
  }
  return first;
}

}  // namespace

EmpiricalDistribution distribution_from_reports(
    const std::vector<ReportRecord>& records, const SurfaceId& surface) {
  EmpiricalDistribution dist;
  for (const auto& [client, value] : first_values(records, surface)) {
    dist.add(value, 1);
  }
  return dist;
}

JointDistribution joint_from_reports(const std::vector<ReportRecord>& records,
                                     const SurfaceId& a, const SurfaceId& b) {
  const auto left = first_values(records, a);
  const auto right = first_values(records, b);
  JointDistribution joint;
  for (const auto& [client, value] : left) {
    const auto other = right.find(client);
    if (other != right.end()) joint.add(value, other->second, 1);
  }
  return joint;
}

nlohmann::ordered_json model_to_json(const PopulationModel& model) {
  nlohmann::ordered_json j;
  j["seed"] = model.seed;
  j["visits_per_client"] = model.visits_per_client;
  j["families"] = model.families;
  j["sites"] = model.sites;
  j["surfaces"] = nlohmann::ordered_json::array();
  for (const SurfaceSpec& s : model.surfaces) {
    nlohmann::ordered_json spec;
    spec["id"] = s.id;
    spec["family"] = s.family;
    spec["domain"] = s.domain;
    spec["call_probability"] = s.call_probability;
    if (s.parent) {
      spec["parent"] = model.surfaces[*s.parent].id;
      spec["conditional"] = s.conditional;
    } else {
      spec["marginal"] = s.marginal;
    }
    j["surfaces"].push_back(std::move(spec));
  }
  return j;
}

PopulationModel model_from_json(const nlohmann::json& j) {
  PopulationModel model;
  model.seed = j.value("seed", 0ull);
  model.visits_per_client = j.value("visits_per_client", 1u);
  if (j.contains("sites")) {
    model.sites = j.at("sites").get<std::vector<std::string>>();
  } else {
    model.sites = {"site-0"};
  }
  std::vector<SurfaceId> parent_of;  // by surface position; empty = root
  for (const auto& spec : j.at("surfaces")) {
    SurfaceSpec s;
    s.id = spec.at("id").get<SurfaceId>();
    s.family = spec.value("family", std::string("default"));
    s.domain = spec.at("domain").get<std::vector<ValueToken>>();
    s.call_probability = spec.value("call_probability", 1.0);
    if (spec.contains("parent")) {
      parent_of.push_back(spec.at("parent").get<SurfaceId>());
      s.conditional =
          spec.at("conditional").get<std::vector<std::vector<double>>>();
    } else {
      parent_of.push_back("");
      s.marginal = spec.at("marginal").get<std::vector<double>>();
    }
    model.surfaces.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < parent_of.size(); ++i) {
    if (!parent_of[i].empty()) {
      model.surfaces[i].parent = model.surface_index(parent_of[i]);
    }
  }
  if (j.contains("families")) {
    model.families = j.at("families").get<std::vector<std::string>>();
  } else {
    std::set<std::string> labels;
    for (const SurfaceSpec& s : model.surfaces) labels.insert(s.family);
    model.families.assign(labels.begin(), labels.end());
  }
  model.validate();
  return model;
}

namespace {

template <typename Record, typename Parse>
std::vector<Record> read_jsonl(std::istream& in, Parse&& parse) {
  std::vector<Record> records;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    try {
      records.push_back(parse(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("bad report line " +
                               std::to_string(line_number) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace

void write_reports_jsonl(std::ostream& out,
                         const std::vector<ReportRecord>& records) {
  for (const ReportRecord& r : records) {
    nlohmann::ordered_json j;
    j["client"] = r.client_id;
    j["surface"] = r.surface;
    j["value"] = r.value;
    j["site"] = r.site;
    j["t"] = r.timestamp;
    out << j.dump() << '\n';
  }
}

std::vector<ReportRecord> read_reports_jsonl(std::istream& in) {
  return read_jsonl<ReportRecord>(in, [](const nlohmann::json& j) {
    return ReportRecord{j.at("client").get<std::string>(),
                        j.at("surface").get<SurfaceId>(),
                        j.at("value").get<ValueToken>(),
                        j.at("site").get<std::string>(),
                        j.at("t").get<std::uint64_t>()};
  });
}

void write_presence_jsonl(std::ostream& out,
                          const std::vector<PresenceRecord>& records) {
  for (const PresenceRecord& r : records) {
    nlohmann::ordered_json j;
    j["client"] = r.client_id;
    j["site"] = r.site;
    j["surface"] = r.surface;
    j["t"] = r.timestamp;
    out << j.dump() << '\n';
  }
}

std::vector<PresenceRecord> read_presence_jsonl(std::istream& in) {
  return read_jsonl<PresenceRecord>(in, [](const nlohmann::json& j) {
    return PresenceRecord{j.at("client").get<std::string>(),
                          j.at("site").get<std::string>(),
                          j.at("surface").get<SurfaceId>(),
                          j.at("t").get<std::uint64_t>()};
  });
}

}  // namespace surfent
