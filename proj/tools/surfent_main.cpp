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
// CLI entry point: flag parsing and dispatch only. All behavior lives in
// the cmd_* functions so tests can drive them in-process.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "surfent/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "surfent - entropy measurement and reporting over Web API surfaces"};
  app.set_version_flag("--version",
                       std::string(surfent::kToolName) + " " +
                           surfent::kToolVersion);
  app.require_subcommand(1);
  int rc = 0;

  // estimate ----------------------------------------------------------------
  surfent::EstimateCommand estimate;
  auto* sub_estimate = app.add_subcommand(
      "estimate", "Per-surface entropy and pairwise MI estimates from "
                  "value reports");
  sub_estimate->add_option("--reports", estimate.reports_path,
                           "Value-report JSONL file")
      ->required();
  sub_estimate->add_option("--out", estimate.out_path,
                           "Output graph JSON (default: stdout)");
  sub_estimate->add_option("--delta", estimate.delta,
                           "Confidence parameter in (0, 1)")
      ->capture_default_str();
  sub_estimate->callback(
      [&] { rc = surfent::cmd_estimate(estimate, std::cout, std::cerr); });

  // bound -------------------------------------------------------------------
  surfent::BoundCommand bound;
  auto* sub_bound = app.add_subcommand(
      "bound", "Joint-entropy upper bound for a surface subset");
  sub_bound->add_option("--graph", bound.graph_path, "Estimate graph JSON")
      ->required();
  sub_bound->add_option("--subset", bound.subset,
                        "Comma-separated surface ids")
      ->required()
      ->delimiter(',');
  sub_bound->add_flag("--chains", bound.use_chains,
                      "Substitute chain lower bounds for missing edges");
  sub_bound->add_option("--out", bound.out_path,
                        "Output JSON (default: stdout)");
  sub_bound->callback(
      [&] { rc = surfent::cmd_bound(bound, std::cout, std::cerr); });

  // classify ----------------------------------------------------------------
  surfent::ClassifyCommand classify;
  auto* sub_classify = app.add_subcommand(
      "classify", "Pairwise independence verdicts via bootstrap TV");
  sub_classify->add_option("--reports", classify.reports_path,
                           "Value-report JSONL file")
      ->required();
  sub_classify->add_option("--out", classify.out_path,
                           "Verdict JSON (default: stdout)");
  sub_classify->add_option("--matrix", classify.matrix_path,
                           "Optional verdict matrix CSV");
  sub_classify->add_option("--threshold", classify.threshold,
                           "TV distance threshold")
      ->capture_default_str();
  sub_classify->add_option("--confidence", classify.confidence,
                           "Bootstrap interval confidence")
      ->capture_default_str();
  sub_classify->add_option("--rounds", classify.rounds, "Bootstrap rounds")
      ->capture_default_str();
  sub_classify->add_option("--seed", classify.seed, "Master seed")
      ->required();
  sub_classify->callback(
      [&] { rc = surfent::cmd_classify(classify, std::cout, std::cerr); });

  // cluster -----------------------------------------------------------------
  surfent::ClusterCommand cluster;
  double cluster_threshold = 0.0;
  std::size_t cluster_count = 0;
  auto* sub_cluster = app.add_subcommand(
      "cluster", "Single-linkage surface clusters under MI similarity");
  sub_cluster->add_option("--graph", cluster.graph_path,
                          "Estimate graph JSON")
      ->required();
  sub_cluster->add_option("--out", cluster.out_path,
                          "Cluster JSON (default: stdout)");
  auto* cluster_threshold_opt = sub_cluster->add_option(
      "--threshold", cluster_threshold, "Cut at this MI (bits)");
  auto* cluster_count_opt = sub_cluster->add_option(
      "--clusters", cluster_count, "Cut into this many clusters");
  cluster_threshold_opt->excludes(cluster_count_opt);
  sub_cluster->callback([&] {
    if (cluster_threshold_opt->count() > 0)
      cluster.threshold = cluster_threshold;
    if (cluster_count_opt->count() > 0) cluster.clusters = cluster_count;
    rc = surfent::cmd_cluster(cluster, std::cout, std::cerr);
  });

  // order -------------------------------------------------------------------
  surfent::OrderCommand order;
  auto* sub_order = app.add_subcommand(
      "order", "Cuthill-McKee ordering of the correlation matrix");
  sub_order->add_option("--verdicts", order.verdicts_path,
                        "Verdict JSON from classify")
      ->required();
  sub_order->add_option("--out", order.out_path,
                        "Order JSON (default: stdout)");
  sub_order->callback(
      [&] { rc = surfent::cmd_order(order, std::cout, std::cerr); });

  // plan --------------------------------------------------------------------
  surfent::PlanCommand plan;
  auto* sub_plan = app.add_subcommand(
      "plan", "Greedy subset assignment for joint sampling");
  sub_plan->add_option("--input", plan.input_path,
                       "Planning input JSON (surfaces, entropies, "
                       "pair demands, budget, pool)")
      ->required();
  sub_plan->add_option("--out", plan.out_path, "Plan JSON (default: stdout)");
  sub_plan->callback(
      [&] { rc = surfent::cmd_plan(plan, std::cout, std::cerr); });

  // simulate ----------------------------------------------------------------
  surfent::SimulateCommand simulate;
  std::uint64_t hash_salt = 0;
  auto* sub_simulate = app.add_subcommand(
      "simulate", "Replay one telemetry phase over a synthetic population");
  sub_simulate->add_option("--model", simulate.model_path,
                           "Population model JSON")
      ->required();
  sub_simulate->add_option("--phase", simulate.phase, "Telemetry phase")
      ->check(CLI::Range(1, 3))
      ->capture_default_str();
  sub_simulate->add_option("--clients", simulate.clients,
                           "Population size (phase 3: at least the plan "
                           "total)");
  sub_simulate->add_option("--seed", simulate.seed, "Master seed")
      ->required();
  sub_simulate->add_option("--out", simulate.out_path, "Output JSONL")
      ->required();
  sub_simulate->add_option("--plan", simulate.plan_path,
                           "Plan JSON (phase 3 only)");
  sub_simulate->add_option("--budget", simulate.budget_bits,
                           "Per-client budget in bits (phase 3)")
      ->capture_default_str();
  auto* salt_opt = sub_simulate->add_option(
      "--hash-salt", hash_salt, "Hash value tokens with this salt");
  sub_simulate->add_option("--anonymity", simulate.anonymity,
                           "Drop values below this distinct-client floor "
                           "(0 disables)")
      ->capture_default_str();
  sub_simulate->callback([&] {
    if (salt_opt->count() > 0) simulate.hash_salt = hash_salt;
    rc = surfent::cmd_simulate(simulate, std::cout, std::cerr);
  });

  // sessions ----------------------------------------------------------------
  surfent::SessionsCommand sessions;
  auto* sub_sessions = app.add_subcommand(
      "sessions", "Per-session entropy bounds and party-split reporting");
  sub_sessions->add_option("--events", sessions.events_path,
                           "Visit-event JSONL file")
      ->required();
  sub_sessions->add_option("--graph", sessions.graph_path,
                           "Estimate graph JSON")
      ->required();
  sub_sessions->add_option("--out", sessions.out_path,
                           "Session JSON (default: stdout)");
  sub_sessions->add_option("--verticals", sessions.verticals_path,
                           "JSON object mapping site to vertical label");
  sub_sessions->add_option("--families", sessions.families_path,
                           "JSON object mapping family to surface list");
  sub_sessions->add_option("--thresholds", sessions.thresholds_path,
                           "JSON object mapping family to call threshold");
  sub_sessions->add_option("--missing-bits", sessions.missing_bits,
                           "Bits charged per surface absent from the graph")
      ->capture_default_str();
  sub_sessions->add_option("--min-sites", sessions.min_sites,
                           "Drop party-split groups with fewer sites")
      ->capture_default_str();
  sub_sessions->add_option("--signature-buckets", sessions.signature_buckets,
                           "Buckets for the signature association table")
      ->capture_default_str();
  sub_sessions->callback(
      [&] { rc = surfent::cmd_sessions(sessions, std::cout, std::cerr); });

  // histogram ---------------------------------------------------------------
  surfent::HistogramCommand histogram;
  auto* sub_histogram = app.add_subcommand(
      "histogram", "Site-normalized per-session entropy histogram");
  sub_histogram->add_option("--events", histogram.events_path,
                            "Visit-event JSONL file")
      ->required();
  sub_histogram->add_option("--graph", histogram.graph_path,
                            "Estimate graph JSON")
      ->required();
  sub_histogram->add_option("--width", histogram.bucket_width,
                            "Bucket width in bits")
      ->capture_default_str();
  sub_histogram->add_option("--out", histogram.out_path, "Output CSV")
      ->required();
  sub_histogram->add_option("--svg", histogram.svg_path, "Optional SVG plot");
  sub_histogram->add_option("--missing-bits", histogram.missing_bits,
                            "Bits charged per surface absent from the graph")
      ->capture_default_str();
  sub_histogram->callback(
      [&] { rc = surfent::cmd_histogram(histogram, std::cout, std::cerr); });

  // block-impact ------------------------------------------------------------
  surfent::BlockImpactCommand block;
  auto* sub_block = app.add_subcommand(
      "block-impact", "Entropy histogram shift under a script blocklist");
  sub_block->add_option("--events", block.events_path,
                        "Visit-event JSONL file")
      ->required();
  sub_block->add_option("--graph", block.graph_path, "Estimate graph JSON")
      ->required();
  sub_block->add_option("--blocklist", block.blocklist_path,
                        "Host blocklist, one per line")
      ->required();
  sub_block->add_flag("--signatures", block.signature_block,
                      "Also block every script carrying a signature flag");
  sub_block->add_option("--width", block.bucket_width, "Bucket width in bits")
      ->capture_default_str();
  sub_block->add_option("--out", block.out_path,
                        "Impact JSON (default: stdout)");
  sub_block->add_option("--svg", block.svg_path, "Optional delta SVG plot");
  sub_block->add_option("--missing-bits", block.missing_bits,
                        "Bits charged per surface absent from the graph")
      ->capture_default_str();
  sub_block->callback(
      [&] { rc = surfent::cmd_block_impact(block, std::cout, std::cerr); });

  // pipeline ----------------------------------------------------------------
  surfent::PipelineCommand pipeline;
  auto* sub_pipeline = app.add_subcommand(
      "pipeline", "Full run: simulate, estimate, classify, cluster, order, "
                  "plan, resample, analyze");
  sub_pipeline->add_option("--config", pipeline.config_path,
                           "Pipeline config JSON")
      ->required();
  sub_pipeline->add_option("--out-dir", pipeline.out_dir,
                           "Artifact directory")
      ->required();
  sub_pipeline->callback(
      [&] { rc = surfent::cmd_pipeline(pipeline, std::cout, std::cerr); });

  CLI11_PARSE(app, argc, argv);
  return rc;
}
