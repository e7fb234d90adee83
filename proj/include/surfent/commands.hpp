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
// Command implementations behind the surfent CLI. Each command is a plain
// function over an options struct plus output streams, so tests drive them
// in-process; the binary entry point only parses flags and dispatches.
//
// Conventions shared by every command:
//   - return 0 on success, 1 on any error, with a single "error: ..."
//     line on the error stream;
//   - file outputs are deterministic byte-for-byte given the same inputs
//     and seed (ordered JSON, fixed float formatting);
//   - all randomness flows from the command seed through named sub-streams;
//   - the only environment input is SURFENT_LOG (error|warn|info|debug),
//     which controls diagnostic verbosity on the error stream.

#ifndef SURFENT_COMMANDS_HPP_
#define SURFENT_COMMANDS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "surfent/independence.hpp"
#include "surfent/mi_graph.hpp"
#include "surfent/simulator.hpp"

namespace surfent {

inline constexpr const char* kToolName = "surfent";
inline constexpr const char* kToolVersion = "0.1.0";

// Per-surface entropy estimates plus pairwise MI estimates for every pair
// observed jointly at least twice, assembled from a value-report stream.
// Shared by cmd_estimate and the pipeline stages.
MiGraph estimate_graph(const std::vector<ReportRecord>& records, double delta);

// Joint distributions for every surface pair with at least two paired
// observations (one sample per client, first report wins).
std::map<SurfacePair, JointDistribution> build_joints(
    const std::vector<ReportRecord>& records,
    const std::vector<SurfaceId>& surfaces);

struct EstimateCommand {
  std::string reports_path;
  std::string out_path;  // empty: print JSON to the output stream
  double delta = 0.05;
};
int cmd_estimate(const EstimateCommand& cmd, std::ostream& out,
                 std::ostream& err);

struct BoundCommand {
  std::string graph_path;
  std::vector<SurfaceId> subset;
  bool use_chains = false;
  std::string out_path;  // empty: print JSON to the output stream
};
int cmd_bound(const BoundCommand& cmd, std::ostream& out, std::ostream& err);

struct ClassifyCommand {
  std::string reports_path;
  std::string out_path;
  std::string matrix_path;  // optional CSV verdict matrix
  double threshold = 0.05;
  double confidence = 0.90;
  int rounds = 1000;
  std::uint64_t seed = 0;
};
int cmd_classify(const ClassifyCommand& cmd, std::ostream& out,
                 std::ostream& err);

struct ClusterCommand {
  std::string graph_path;
  std::string out_path;
  std::optional<double> threshold;       // exactly one of the two
  std::optional<std::size_t> clusters;
};
int cmd_cluster(const ClusterCommand& cmd, std::ostream& out,
                std::ostream& err);

struct OrderCommand {
  std::string verdicts_path;
  std::string out_path;
};
int cmd_order(const OrderCommand& cmd, std::ostream& out, std::ostream& err);

struct PlanCommand {
  std::string input_path;
  std::string out_path;
};
int cmd_plan(const PlanCommand& cmd, std::ostream& out, std::ostream& err);

struct SimulateCommand {
  std::string model_path;
  int phase = 2;
  std::uint64_t clients = 0;  // phase 3 defaults to the plan's total
  std::uint64_t seed = 0;
  std::string out_path;  // JSONL records
  std::string plan_path;  // required for phase 3
  double budget_bits = kJointBudgetBits;
  std::optional<std::uint64_t> hash_salt;  // hash value tokens when set
  std::uint64_t anonymity = 0;  // distinct-client floor; 0 disables
};
int cmd_simulate(const SimulateCommand& cmd, std::ostream& out,
                 std::ostream& err);

struct SessionsCommand {
  std::string events_path;
  std::string graph_path;
  std::string out_path;
  std::string verticals_path;   // optional JSON {site: vertical}
  std::string families_path;    // optional JSON {family: [surfaces]}
  std::string thresholds_path;  // required with families_path
  double missing_bits = 0.0;
  std::uint64_t min_sites = 0;
  std::size_t signature_buckets = 10;
};
int cmd_sessions(const SessionsCommand& cmd, std::ostream& out,
                 std::ostream& err);

struct HistogramCommand {
  std::string events_path;
  std::string graph_path;
  double bucket_width = 1.0;
  std::string out_path;  // CSV
  std::string svg_path;  // optional plot
  double missing_bits = 0.0;
};
int cmd_histogram(const HistogramCommand& cmd, std::ostream& out,
                  std::ostream& err);

struct BlockImpactCommand {
  std::string events_path;
  std::string graph_path;
  std::string blocklist_path;  // one host per line, '#' comments
  bool signature_block = false;
  double bucket_width = 1.0;
  std::string out_path;  // JSON
  std::string svg_path;  // optional delta plot
  double missing_bits = 0.0;
};
int cmd_block_impact(const BlockImpactCommand& cmd, std::ostream& out,
                     std::ostream& err);

struct PipelineCommand {
  std::string config_path;
  std::string out_dir;
};
int cmd_pipeline(const PipelineCommand& cmd, std::ostream& out,
                 std::ostream& err);

}  // namespace surfent

#endif  // SURFENT_COMMANDS_HPP_
