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
// Synthetic client populations drawn from tree-structured generative models,
// plus a three-phase telemetry replay that produces the report streams the
// estimators consume. Ground truth stays exactly computable: every model is a
// dependency forest, so joint entropies follow from closed-form enumeration
// and estimator output can be checked against the truth.
//
// The phases mirror a staged measurement protocol:
//   phase 1  presence only - which surfaces ran, never their values;
//   phase 2  capped value sampling - each client reports values from one
//            surface family, at most kValueReportCap reports per client;
//   phase 3  targeted joint sampling - planner-chosen subsets with full
//            reporting, refused outright if a subset's exact joint entropy
//            exceeds kJointBudgetBits.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "surfent/distribution.hpp"
#include "surfent/planner.hpp"

namespace surfent {

// One surface of the generative model. Roots carry a marginal distribution
// over their domain; non-roots carry one conditional row per parent value.
struct SurfaceSpec {
  SurfaceId id;
  std::string family;
  std::vector<ValueToken> domain;
  double call_probability = 1.0;  // chance the surface runs on a given visit
  std::optional<std::size_t> parent;  // index into PopulationModel::surfaces
  std::vector<double> marginal;
  std::vector<std::vector<double>> conditional;  // [parent value][own value]
};

// A dependency forest over surfaces together with the visit process used to
// replay telemetry. Parent links never form a cycle, so sampling and exact
// entropy evaluation both run in topological order.
struct PopulationModel {
  std::vector<SurfaceSpec> surfaces;
  std::vector<std::string> families;  // the configured family label set
  std::vector<std::string> sites;
  std::uint32_t visits_per_client = 1;
  std::uint64_t seed = 0;

  std::size_t surface_index(const SurfaceId& id) const;

  // Surface indices ordered parents-before-children. Throws
  // std::invalid_argument if the parent links contain a cycle.
  std::vector<std::size_t> sampling_order() const;

  // Full structural check: domains, distribution rows, parent links,
  // family labels, visit process. Throws std::invalid_argument on the
  // first violation.
  void validate() const;
};

// A drawn population: one value index per (client, surface).
struct Population {
  PopulationModel model;
  std::vector<std::vector<std::uint32_t>> values;  // [client][surface index]

  std::size_t num_clients() const { return values.size(); }
  const ValueToken& token(std::size_t client, std::size_t surface) const {
    return model.surfaces[surface].domain[values[client][surface]];
  }
};

// Per-client protocol state. reported_count never exceeds the phase cap and
// reporting_probability drops to zero the moment the cap is reached.
struct ClientState {
  std::string client_id;
  std::vector<SurfaceId> assigned_list;  // the only surfaces ever emitted
  double reporting_probability = 1.0;
  std::uint32_t reported_count = 0;
};

// Presence tuple: carries no value token by construction.
struct PresenceRecord {
  std::string client_id;
  std::string site;
  SurfaceId surface;
  std::uint64_t timestamp = 0;
};

// A reported surface value, possibly hashed.
struct ReportRecord {
  std::string client_id;
  SurfaceId surface;
  ValueToken value;
  std::string site;
  std::uint64_t timestamp = 0;
};

inline constexpr std::uint32_t kValueReportCap = 40;
inline constexpr double kJointBudgetBits = 20.0;
inline constexpr std::uint64_t kAnonymityThreshold = 50;

// Draws num_clients rows from the model, one independent seeded stream per
// client so the result is identical however the loop is scheduled. The
// default entry point parallelizes across clients when OpenMP is enabled;
// the _serial variant is the reference implementation and produces
// bit-identical output.
Population generate_population(const PopulationModel& model,
                               std::size_t num_clients, std::uint64_t seed);
Population generate_population_serial(const PopulationModel& model,
                                      std::size_t num_clients,
                                      std::uint64_t seed);

// Exact joint entropy (bits) of the given surfaces under the model, computed
// by enumerating the joint domain of the surfaces plus their ancestors.
// Throws std::invalid_argument("domain too large") when that enumeration
// would exceed 2^20 assignments.
double exact_joint_entropy(const PopulationModel& model,
                           const std::vector<SurfaceId>& subset);

// Groups the model's surfaces by family label, sorted both ways.
std::map<std::string, std::vector<SurfaceId>> family_partition(
    const PopulationModel& model);

// Model-implied expected number of distinct surfaces per family that run at
// least once over the visit horizon; feeds the phase-2 reporting probability.
std::map<std::string, double> expected_family_calls(
    const PopulationModel& model);

// Phase 1: every client, every visit, emits which surfaces ran. No values.
std::vector<PresenceRecord> run_phase1(const Population& population,
                                       std::uint64_t seed);

struct Phase2Result {
  std::vector<ReportRecord> records;
  std::vector<ClientState> clients;  // final L_c / p_c / k_c per client
};

// Phase 2: each client is assigned one family uniformly at random and reports
// each first-observed in-family value with probability min(1, 40/n), where n
// is that family's expected_calls entry. Hard cap: kValueReportCap reports
// per client, enforced and re-checked before returning. Clients observe
// every surface and filter to the assigned list only at emission time, so
// emitted records are always a subset of L_c.
Phase2Result run_phase2(const Population& population,
                        const std::map<std::string, std::vector<SurfaceId>>&
                            families,
                        const std::map<std::string, double>& expected_calls,
                        std::uint64_t seed);

struct Phase3Result {
  std::vector<ReportRecord> records;
  std::vector<ClientState> clients;
  double max_subset_bits = 0.0;  // largest per-client exact exposure
};

// Phase 3: consumes a sampling plan round by round, assigning each round's
// subset to fresh clients (ids prefixed "p3-", a pool disjoint from phase 2)
// with reporting probability 1. Every subset's exact joint entropy is checked
// against budget_bits up front; any subset over budget is refused with
// std::invalid_argument before a single record is emitted.
Phase3Result run_phase3(const Population& population,
                        const AssignmentPlan& plan, std::uint64_t seed,
                        double budget_bits = kJointBudgetBits);

// Replaces every value token with a salted 64-bit digest rendered as hex,
// optionally truncated to the low `bits` bits. Equal values map to equal
// tokens; a collision between distinct values raises std::runtime_error so
// the caller can re-salt.
std::vector<ReportRecord> hash_values(const std::vector<ReportRecord>& records,
                                      std::uint64_t salt, unsigned bits = 64);

using ValueKey = std::pair<SurfaceId, ValueToken>;

// Distinct-client counts per (surface, value); the k-anonymity unit.
std::map<ValueKey, std::uint64_t> distinct_client_counts(
    const std::vector<ReportRecord>& records);

struct KAnonymityResult {
  std::map<ValueKey, std::uint64_t> kept;
  std::map<ValueKey, std::uint64_t> dropped;  // removal log
};

// Drops every (surface, value) row seen by fewer than `threshold` distinct
// clients. Strict: a row at exactly the threshold is kept.
KAnonymityResult k_anonymity_filter(
    const std::map<ValueKey, std::uint64_t>& counts,
    std::uint64_t threshold = kAnonymityThreshold);

// Stream-level variant: removes records whose (surface, value) fails the
// distinct-client threshold.
std::vector<ReportRecord> filter_reports(
    const std::vector<ReportRecord>& records,
    std::uint64_t threshold = kAnonymityThreshold);

// Per-surface value counts from a report stream; when a client reports the
// same surface more than once only the first record counts, so each client
// contributes one sample.
EmpiricalDistribution distribution_from_reports(
    const std::vector<ReportRecord>& records, const SurfaceId& surface);

// Paired counts over clients that reported both surfaces.
JointDistribution joint_from_reports(const std::vector<ReportRecord>& records,
                                     const SurfaceId& a, const SurfaceId& b);

nlohmann::ordered_json model_to_json(const PopulationModel& model);
PopulationModel model_from_json(const nlohmann::json& j);

// Line-delimited JSON: one record object per line. Readers reject malformed
// lines with std::runtime_error naming the line number.
void write_reports_jsonl(std::ostream& out,
                         const std::vector<ReportRecord>& records);
std::vector<ReportRecord> read_reports_jsonl(std::istream& in);
void write_presence_jsonl(std::ostream& out,
                          const std::vector<PresenceRecord>& records);
std::vector<PresenceRecord> read_presence_jsonl(std::istream& in);

}  // namespace surfent
