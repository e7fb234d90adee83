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

#include "surfent/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "surfent/estimation.hpp"
#include "surfent/planner.hpp"
#include "surfent/rng.hpp"
#include "surfent/sessions.hpp"
#include "surfent/structure.hpp"
#include "surfent/svg.hpp"

namespace surfent {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Logging. SURFENT_LOG is the only environment input the tool reads.

int log_threshold() {
  const char* value = std::getenv("SURFENT_LOG");
  if (value == nullptr) return 1;  // warn
  const std::string level = value;
  if (level == "error") return 0;
  if (level == "warn") return 1;
  if (level == "info") return 2;
  if (level == "debug") return 3;
  return 1;
}

void log_info(std::ostream& err, const std::string& message) {
  if (log_threshold() >= 2) err << "[info] " << message << "\n";
}

// ---------------------------------------------------------------------------
// File plumbing.

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw std::runtime_error("cannot read " + path);
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  out.flush();
  if (!out.good()) throw std::runtime_error("cannot write " + path);
}

json parse_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string dump_json(const ordered_json& j) { return j.dump(2) + "\n"; }

// JSON goes to the output stream unless an explicit path was given; the
// summary line convention is the inverse, so piped output stays clean.
void emit_json(const std::string& out_path, std::ostream& out,
               const ordered_json& j) {
  if (out_path.empty()) {
    out << dump_json(j);
  } else {
    write_file(out_path, dump_json(j));
  }
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

// Fixed formatting for CSV cells, so identical data yields identical bytes.
std::string fmt_g(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    fn();
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

// ---------------------------------------------------------------------------
// Shared readers and JSON shapes.

std::vector<ReportRecord> read_reports_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto records = read_reports_jsonl(in);
  if (records.empty()) throw std::runtime_error("no records");
  return records;
}

MiGraph read_graph_file(const std::string& path) {
  return mi_graph_from_json(parse_json_file(path));
}

std::vector<VisitEvent> read_events_file(const std::string& path,
                                         std::uint64_t* skipped) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_events_jsonl(in, skipped);
}

std::set<std::string> read_blocklist_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::set<std::string> hosts;
  std::string line;
  while (std::getline(in, line)) {
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);
    if (line.empty() || line[0] == '#') continue;
    hosts.insert(line);
  }
  return hosts;
}

ordered_json box_stats_json(const BoxStats& stats) {
  ordered_json j;
  j["count"] = stats.count;
  j["min"] = stats.minimum;
  j["q1"] = stats.q1;
  j["median"] = stats.median;
  j["q3"] = stats.q3;
  j["max"] = stats.maximum;
  j["mean"] = stats.average;
  return j;
}

ordered_json histogram_json(const EntropyHistogram& hist) {
  ordered_json j;
  j["bucket_width"] = hist.bucket_width;
  j["mass"] = hist.mass;
  j["sessions"] = hist.sessions;
  j["sites"] = hist.sites;
  return j;
}

std::string histogram_csv(const EntropyHistogram& hist) {
  std::ostringstream csv;
  csv << "bucket_low,bucket_high,mass\n";
  for (std::size_t i = 0; i < hist.mass.size(); ++i) {
    csv << fmt_g(hist.bucket_width * static_cast<double>(i)) << ","
        << fmt_g(hist.bucket_width * static_cast<double>(i + 1)) << ","
        << fmt_g(hist.mass[i]) << "\n";
  }
  return csv.str();
}

ordered_json party_split_json(const std::vector<PartySplitRow>& rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json r;
    r["group"] = row.group;
    r["first_party_bits"] = row.first_party_bits;
    r["third_party_bits"] = row.third_party_bits;
    r["sessions"] = row.sessions;
    r["sites"] = row.sites;
    arr.push_back(std::move(r));
  }
  return arr;
}

std::map<std::string, std::string> read_verticals_file(
    const std::string& path) {
  if (path.empty()) return {};
  return parse_json_file(path).get<std::map<std::string, std::string>>();
}

}  // namespace

// ---------------------------------------------------------------------------
// Shared estimation helpers.

std::map<SurfacePair, JointDistribution> build_joints(
    const std::vector<ReportRecord>& records,
    const std::vector<SurfaceId>& surfaces) {
  std::map<SurfacePair, JointDistribution> joints;
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    for (std::size_t j = i + 1; j < surfaces.size(); ++j) {
      JointDistribution joint =
          joint_from_reports(records, surfaces[i], surfaces[j]);
      // A pair nobody reported jointly carries no measurement, and a single
      // shared observation cannot support an interval.
      if (joint.n >= 2) {
        joints[MiGraph::canonical_pair(surfaces[i], surfaces[j])] =
            std::move(joint);
      }
    }
  }
  return joints;
}

MiGraph estimate_graph(const std::vector<ReportRecord>& records,
                       double delta) {
  std::set<SurfaceId> ids;
  for (const auto& record : records) ids.insert(record.surface);
  const std::vector<SurfaceId> surfaces(ids.begin(), ids.end());

  MiGraph graph;
  for (const auto& id : surfaces) {
    const auto dist = distribution_from_reports(records, id);
    try {
      graph.add_node(id, entropy_estimate(dist, delta));
    } catch (const std::exception& e) {
      throw std::runtime_error("surface " + id + ": " + e.what());
    }
  }
  for (const auto& [pair, joint] : build_joints(records, surfaces)) {
    graph.add_edge(pair.first, pair.second, mi_estimate(joint, delta));
  }
  return graph;
}

// ---------------------------------------------------------------------------
// estimate

int cmd_estimate(const EstimateCommand& cmd, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    if (cmd.delta <= 0.0 || cmd.delta >= 1.0) {
      throw std::invalid_argument("--delta must lie in (0, 1)");
    }
    const auto records = read_reports_file(cmd.reports_path);
    const MiGraph graph = estimate_graph(records, cmd.delta);
    emit_json(cmd.out_path, out, mi_graph_to_json(graph));
    if (!cmd.out_path.empty()) {
      out << "surfaces: " << graph.nodes().size()
          << " edges: " << graph.edges().size() << " -> " << cmd.out_path
          << "\n";
    }
  });
}

// ---------------------------------------------------------------------------
// bound

int cmd_bound(const BoundCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cmd.subset.empty()) throw std::invalid_argument("subset is empty");
    const MiGraph graph = read_graph_file(cmd.graph_path);
    std::set<SurfaceId> subset;
    for (const auto& id : cmd.subset) {
      if (!graph.has_node(id)) {
        throw std::invalid_argument("unknown surface: " + id);
      }
      subset.insert(id);
    }
    BoundOptions options;
    options.use_chain_bounds = cmd.use_chains;
    const EntropyBound bound = chow_liu_upper_bound(graph, subset, options);
    const EntropyBound naive = naive_upper_bound(graph, subset);

    ordered_json j;
    j["subset"] = subset;
    j["upper_bits"] = bound.upper_bits;
    j["naive_bits"] = naive.upper_bits;
    ordered_json edges = ordered_json::array();
    for (const auto& [a, b] : bound.tree_edges) {
      edges.push_back(ordered_json::array({a, b}));
    }
    j["tree_edges"] = std::move(edges);
    j["omitted_edges"] = bound.omitted_edges;
    j["chain_edges_used"] = bound.chain_edges_used;
    j["clamped"] = bound.clamped;
    emit_json(cmd.out_path, out, j);
    if (!cmd.out_path.empty()) {
      out << "upper bound: " << bound.upper_bits << " bits (naive "
          << naive.upper_bits << ") -> " << cmd.out_path << "\n";
    }
  });
}

// ---------------------------------------------------------------------------
// classify

int cmd_classify(const ClassifyCommand& cmd, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    if (cmd.threshold <= 0.0 || cmd.threshold >= 1.0) {
      throw std::invalid_argument("--threshold must lie in (0, 1)");
    }
    if (cmd.confidence <= 0.0 || cmd.confidence >= 1.0) {
      throw std::invalid_argument("--confidence must lie in (0, 1)");
    }
    if (cmd.rounds <= 0) {
      throw std::invalid_argument("--rounds must be positive");
    }
    const auto records = read_reports_file(cmd.reports_path);
    std::set<SurfaceId> ids;
    for (const auto& record : records) ids.insert(record.surface);
    const std::vector<SurfaceId> surfaces(ids.begin(), ids.end());
    const auto joints = build_joints(records, surfaces);

    ClassifyOptions options;
    options.threshold = cmd.threshold;
    options.confidence = cmd.confidence;
    options.bootstrap_rounds = cmd.rounds;
    options.seed = cmd.seed;
    const VerdictMatrix matrix = classify_pairs(surfaces, joints, options);

    emit_json(cmd.out_path, out, verdict_matrix_to_json(matrix));
    if (!cmd.matrix_path.empty()) {
      write_file(cmd.matrix_path, verdict_matrix_csv(matrix));
    }
    if (!cmd.out_path.empty()) {
      std::size_t correlated = 0;
      for (const auto& [pair, verdict] : matrix.verdicts) {
        if (verdict.verdict == Verdict::kCorrelated) ++correlated;
      }
      out << "pairs: " << matrix.verdicts.size()
          << " correlated: " << correlated << " -> " << cmd.out_path << "\n";
    }
  });
}

// ---------------------------------------------------------------------------
// cluster

int cmd_cluster(const ClusterCommand& cmd, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    if (cmd.threshold.has_value() == cmd.clusters.has_value()) {
      throw std::invalid_argument(
          "exactly one of --threshold and --clusters must be given");
    }
    const MiGraph graph = read_graph_file(cmd.graph_path);
    ClusterCut cut;
    cut.mi_threshold = cmd.threshold;
    cut.num_clusters = cmd.clusters;
    const ClusterResult result = single_linkage_clusters(graph, cut);

    ordered_json j;
    if (cmd.threshold) {
      j["cut"] = ordered_json{{"mi_threshold", *cmd.threshold}};
    } else {
      j["cut"] = ordered_json{{"num_clusters", *cmd.clusters}};
    }
    j["clusters"] = result.flat;
    j["dendrogram"] = cluster_tree_to_json(result.tree);
    emit_json(cmd.out_path, out, j);
    if (!cmd.out_path.empty()) {
      out << "clusters: " << result.flat.size() << " -> " << cmd.out_path
          << "\n";
    }
  });
}

// ---------------------------------------------------------------------------
// order

int cmd_order(const OrderCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const VerdictMatrix matrix =
        verdict_matrix_from_json(parse_json_file(cmd.verdicts_path));
    const AdjacencyMatrix adj = adjacency_from_verdicts(matrix);
    const std::vector<SurfaceId> ordering = cuthill_mckee_order(adj);

    ordered_json j;
    j["order"] = ordering;
    j["bandwidth_input"] = matrix_bandwidth(adj, adj.order);
    j["bandwidth_ordered"] = matrix_bandwidth(adj, ordering);
    emit_json(cmd.out_path, out, j);
    if (!cmd.out_path.empty()) {
      out << "bandwidth: " << matrix_bandwidth(adj, adj.order) << " -> "
          << matrix_bandwidth(adj, ordering) << " (" << cmd.out_path << ")\n";
    }
  });
}

// ---------------------------------------------------------------------------
// plan

int cmd_plan(const PlanCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const PlanningInput input =
        planning_input_from_json(parse_json_file(cmd.input_path));
    AssignmentPlan plan;
    try {
      plan = greedy_assign(input);
    } catch (const PoolExhaustedError& e) {
      // The truncated plan is still honest accounting; keep it as an
      // artifact so callers can inspect what was covered before the pool
      // ran dry.
      emit_json(cmd.out_path, out, plan_to_json(e.partial_plan()));
      throw;
    }
    const PlanReport report = verify_plan(input, plan);
    if (!report.ok) {
      throw std::runtime_error("plan verification failed: " +
                               (report.failures.empty()
                                    ? std::string("unknown defect")
                                    : report.failures.front()));
    }
    emit_json(cmd.out_path, out, plan_to_json(plan));
    if (!cmd.out_path.empty()) {
      out << "rounds: " << plan.rounds.size()
          << " clients: " << plan.total_clients << " -> " << cmd.out_path
          << "\n";
    }
  });
}

// ---------------------------------------------------------------------------
// simulate

namespace {

std::vector<ReportRecord> finalize_records(std::vector<ReportRecord> records,
                                           const SimulateCommand& cmd) {
  if (cmd.hash_salt) records = hash_values(records, *cmd.hash_salt);
  if (cmd.anonymity > 0) records = filter_reports(records, cmd.anonymity);
  return records;
}

}  // namespace

int cmd_simulate(const SimulateCommand& cmd, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    if (cmd.phase < 1 || cmd.phase > 3) {
      throw std::invalid_argument("--phase must be 1, 2, or 3");
    }
    if (cmd.out_path.empty()) throw std::invalid_argument("--out is required");
    const PopulationModel model =
        model_from_json(parse_json_file(cmd.model_path));

    if (cmd.phase == 3) {
      if (cmd.plan_path.empty()) {
        throw std::invalid_argument("--plan is required for phase 3");
      }
      const AssignmentPlan plan =
          plan_from_json(parse_json_file(cmd.plan_path));
      const std::uint64_t clients =
          std::max<std::uint64_t>(cmd.clients, plan.total_clients);
      if (clients == 0) {
        throw std::invalid_argument("plan assigns no clients");
      }
      log_info(err, "phase 3: drawing " + std::to_string(clients) +
                        " clients");
      const Population population = generate_population(
          model, clients, derive_seed(cmd.seed, "population"));
      Phase3Result result = run_phase3(
          population, plan, derive_seed(cmd.seed, "phase3"), cmd.budget_bits);
      const auto records = finalize_records(std::move(result.records), cmd);
      std::ostringstream body;
      write_reports_jsonl(body, records);
      write_file(cmd.out_path, body.str());
      out << "clients: " << plan.total_clients << " reports: "
          << records.size() << " max subset bits: " << result.max_subset_bits
          << " -> " << cmd.out_path << "\n";
      return;
    }

    if (cmd.clients == 0) {
      throw std::invalid_argument("--clients must be positive");
    }
    const Population population = generate_population(
        model, cmd.clients, derive_seed(cmd.seed, "population"));

    if (cmd.phase == 1) {
      const auto presence =
          run_phase1(population, derive_seed(cmd.seed, "phase1"));
      std::ostringstream body;
      write_presence_jsonl(body, presence);
      write_file(cmd.out_path, body.str());
      out << "clients: " << cmd.clients << " presence records: "
          << presence.size() << " -> " << cmd.out_path << "\n";
      return;
    }

    Phase2Result result =
        run_phase2(population, family_partition(model),
                   expected_family_calls(model),
                   derive_seed(cmd.seed, "phase2"));
    const auto records = finalize_records(std::move(result.records), cmd);
    std::ostringstream body;
    write_reports_jsonl(body, records);
    write_file(cmd.out_path, body.str());
    out << "clients: " << cmd.clients << " reports: " << records.size()
        << " -> " << cmd.out_path << "\n";
  });
}

// ---------------------------------------------------------------------------
// sessions

int cmd_sessions(const SessionsCommand& cmd, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    if (cmd.families_path.empty() != cmd.thresholds_path.empty()) {
      throw std::invalid_argument(
          "--families and --thresholds must be given together");
    }
    std::uint64_t skipped = 0;
    const auto events = read_events_file(cmd.events_path, &skipped);
    SessionizeOptions sessionize_options;
    sessionize_options.site_verticals =
        read_verticals_file(cmd.verticals_path);
    const SessionizeResult grouped = sessionize(events, sessionize_options);
    const MiGraph graph = read_graph_file(cmd.graph_path);

    SessionEntropyOptions counted;
    counted.missing_surface_bits = cmd.missing_bits;
    std::uint64_t missing = 0;
    counted.missing_counter = &missing;
    const std::vector<double> bits =
        session_entropy_batch(grouped.sessions, graph, counted);

    // Re-using the counter here would tally the same observations again.
    SessionEntropyOptions plain;
    plain.missing_surface_bits = cmd.missing_bits;
    const auto split =
        party_split_report(grouped.sessions, graph, plain, cmd.min_sites);

    ordered_json j;
    j["events"] = events.size();
    j["skipped_events"] = skipped + grouped.skipped;
    j["missing_surface_observations"] = missing;
    ordered_json sessions = ordered_json::array();
    for (std::size_t i = 0; i < grouped.sessions.size(); ++i) {
      const SessionLog& s = grouped.sessions[i];
      ordered_json row;
      row["client"] = s.client_id;
      row["site"] = s.site;
      row["window_start"] = s.window_start;
      row["surfaces"] = s.surfaces.size();
      row["first_party"] = s.first_party.size();
      row["third_party"] = s.third_party.size();
      if (s.vertical) row["vertical"] = *s.vertical;
      row["signature"] = s.has_signature;
      row["bits"] = bits[i];
      sessions.push_back(std::move(row));
    }
    j["sessions"] = std::move(sessions);
    j["party_split"] = party_split_json(split);
    if (!grouped.sessions.empty()) {
      const auto sig = signature_association(grouped.sessions, graph, plain,
                                             cmd.signature_buckets);
      ordered_json buckets = ordered_json::array();
      for (const auto& bucket : sig) {
        ordered_json b;
        b["rate_low"] = bucket.rate_low;
        b["rate_high"] = bucket.rate_high;
        b["sites"] = bucket.sites;
        b["entropy"] = box_stats_json(bucket.entropy);
        buckets.push_back(std::move(b));
      }
      j["signature_buckets"] = std::move(buckets);
    }
    if (!cmd.families_path.empty()) {
      const auto families =
          parse_json_file(cmd.families_path)
              .get<std::map<std::string, std::vector<SurfaceId>>>();
      const auto thresholds =
          parse_json_file(cmd.thresholds_path)
              .get<std::map<std::string, std::uint32_t>>();
      const FamilyCallFrequency frequency =
          family_call_frequency(grouped.sessions, families, thresholds);
      ordered_json per_site = ordered_json::array();
      for (const auto& [key, fraction] : frequency.fraction) {
        per_site.push_back(ordered_json{{"family", key.first},
                                        {"site", key.second},
                                        {"fraction", fraction}});
      }
      ordered_json summary;
      for (const auto& [family, stats] : frequency.site_summary) {
        summary[family] = box_stats_json(stats);
      }
      j["family_frequency"] = ordered_json{{"per_site", std::move(per_site)},
                                           {"site_summary",
                                            std::move(summary)}};
    }
    emit_json(cmd.out_path, out, j);
    if (!cmd.out_path.empty()) {
      out << "sessions: " << grouped.sessions.size() << " -> " << cmd.out_path
          << "\n";
    }
  });
}

// ---------------------------------------------------------------------------
// histogram

int cmd_histogram(const HistogramCommand& cmd, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, [&] {
    if (cmd.out_path.empty()) throw std::invalid_argument("--out is required");
    std::uint64_t skipped = 0;
    const auto events = read_events_file(cmd.events_path, &skipped);
    const SessionizeResult grouped = sessionize(events, {});
    const MiGraph graph = read_graph_file(cmd.graph_path);
    SessionEntropyOptions options;
    options.missing_surface_bits = cmd.missing_bits;
    const EntropyHistogram hist = entropy_distribution(
        grouped.sessions, graph, cmd.bucket_width, options);
    write_file(cmd.out_path, histogram_csv(hist));
    if (!cmd.svg_path.empty()) {
      write_file(cmd.svg_path,
                 render_histogram_svg(hist.mass, hist.bucket_width,
                                      "Per-session identifying bits"));
    }
    out << "sessions: " << hist.sessions << " sites: " << hist.sites
        << " buckets: " << hist.mass.size() << " -> " << cmd.out_path << "\n";
  });
}

// ---------------------------------------------------------------------------
// block-impact

int cmd_block_impact(const BlockImpactCommand& cmd, std::ostream& out,
                     std::ostream& err) {
  return guarded(err, [&] {
    std::uint64_t skipped = 0;
    const auto events = read_events_file(cmd.events_path, &skipped);
    const MiGraph graph = read_graph_file(cmd.graph_path);
    const auto blocklist = read_blocklist_file(cmd.blocklist_path);
    SessionEntropyOptions options;
    options.missing_surface_bits = cmd.missing_bits;
    const BlocklistImpact impact =
        blocklist_impact(events, graph, blocklist, cmd.signature_block,
                         cmd.bucket_width, options, {});

    ordered_json j;
    j["blocked_hosts"] = blocklist.size();
    j["signature_block"] = cmd.signature_block;
    j["baseline"] = histogram_json(impact.baseline);
    j["intervention"] = histogram_json(impact.intervention);
    j["delta"] = impact.delta;
    emit_json(cmd.out_path, out, j);
    if (!cmd.svg_path.empty()) {
      write_file(cmd.svg_path,
                 render_delta_svg(impact.delta, cmd.bucket_width,
                                  "Blocklist impact (mass delta)"));
    }
    if (!cmd.out_path.empty()) {
      out << "baseline sessions: " << impact.baseline.sessions << " -> "
          << cmd.out_path << "\n";
    }
  });
}

// ---------------------------------------------------------------------------
// pipeline

namespace {

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::string model;
  std::uint64_t clients = 30000;
  double delta = 0.05;
  double tv_threshold = 0.05;
  double confidence = 0.90;
  int bootstrap_rounds = 200;
  std::uint64_t k_anonymity = kAnonymityThreshold;
  double cluster_threshold = 0.05;
  double bucket_width = 1.0;
  double phase3_budget_bits = kJointBudgetBits;
  std::uint64_t phase3_pool = 200000;
  std::map<std::string, std::string> verticals;
};

PipelineConfig parse_pipeline_config(const json& j) {
  static const std::set<std::string> known = {
      "seed",         "model",           "clients",
      "delta",        "tv_threshold",    "confidence",
      "bootstrap_rounds", "k_anonymity", "cluster_threshold",
      "bucket_width", "phase3_budget_bits", "phase3_pool",
      "verticals"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw std::invalid_argument("unknown config key: " + key);
    }
  }
  if (!j.contains("seed")) {
    throw std::invalid_argument("config: seed is required");
  }
  if (!j.contains("model")) {
    throw std::invalid_argument("config: model is required");
  }
  PipelineConfig config;
  try {
    config.seed = j.at("seed").get<std::uint64_t>();
    config.model = j.at("model").get<std::string>();
    config.clients = j.value("clients", config.clients);
    config.delta = j.value("delta", config.delta);
    config.tv_threshold = j.value("tv_threshold", config.tv_threshold);
    config.confidence = j.value("confidence", config.confidence);
    config.bootstrap_rounds =
        j.value("bootstrap_rounds", config.bootstrap_rounds);
    config.k_anonymity = j.value("k_anonymity", config.k_anonymity);
    config.cluster_threshold =
        j.value("cluster_threshold", config.cluster_threshold);
    config.bucket_width = j.value("bucket_width", config.bucket_width);
    config.phase3_budget_bits =
        j.value("phase3_budget_bits", config.phase3_budget_bits);
    config.phase3_pool = j.value("phase3_pool", config.phase3_pool);
    if (j.contains("verticals")) {
      config.verticals =
          j.at("verticals").get<std::map<std::string, std::string>>();
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (config.model.empty()) {
    throw std::invalid_argument("config: model path is empty");
  }
  if (config.clients == 0) {
    throw std::invalid_argument("config: clients must be positive");
  }
  if (config.delta <= 0.0 || config.delta >= 1.0) {
    throw std::invalid_argument("config: delta must lie in (0, 1)");
  }
  if (config.tv_threshold <= 0.0 || config.tv_threshold >= 1.0) {
    throw std::invalid_argument("config: tv_threshold must lie in (0, 1)");
  }
  if (config.confidence <= 0.0 || config.confidence >= 1.0) {
    throw std::invalid_argument("config: confidence must lie in (0, 1)");
  }
  if (config.bootstrap_rounds <= 0) {
    throw std::invalid_argument("config: bootstrap_rounds must be positive");
  }
  if (config.k_anonymity == 0) {
    throw std::invalid_argument("config: k_anonymity must be positive");
  }
  if (config.cluster_threshold <= 0.0) {
    throw std::invalid_argument("config: cluster_threshold must be positive");
  }
  if (config.bucket_width <= 0.0) {
    throw std::invalid_argument("config: bucket_width must be positive");
  }
  if (config.phase3_budget_bits <= 0.0) {
    throw std::invalid_argument(
        "config: phase3_budget_bits must be positive");
  }
  if (config.phase3_pool == 0) {
    throw std::invalid_argument("config: phase3_pool must be positive");
  }
  return config;
}

// One page visit per (client, site, day) presence group; every observation
// is attributed to the page itself, so downstream sessionization sees a
// purely first-party corpus.
std::vector<VisitEvent> events_from_presence(
    const std::vector<PresenceRecord>& presence) {
  std::map<std::tuple<std::string, std::string, std::uint64_t>,
           std::vector<SurfaceId>>
      visits;
  for (const auto& record : presence) {
    visits[{record.client_id, record.site, record.timestamp}].push_back(
        record.surface);
  }
  std::vector<VisitEvent> events;
  events.reserve(visits.size());
  for (auto& [key, surfaces] : visits) {
    VisitEvent event;
    event.client_id = std::get<0>(key);
    event.site = std::get<1>(key);
    event.document_origin = std::get<1>(key);
    event.day = std::get<2>(key);
    std::sort(surfaces.begin(), surfaces.end());
    for (const auto& surface : surfaces) {
      event.observations.push_back({surface, ""});
    }
    events.push_back(std::move(event));
  }
  return events;
}

const std::vector<std::string> kPipelineStages = {
    "simulate-phase2", "anonymize",       "estimate",
    "classify",        "cluster",         "order",
    "plan",            "simulate-phase3", "estimate-final",
    "events",          "sessions"};

}  // namespace

int cmd_pipeline(const PipelineCommand& cmd, std::ostream& out,
                 std::ostream& err) {
  return guarded(err, [&] {
    // Validation first: every input is read and checked before anything is
    // written, so a bad config or missing model leaves no trace on disk.
    const std::string config_text = read_file(cmd.config_path);
    json config_json;
    try {
      config_json = json::parse(config_text);
    } catch (const json::exception& e) {
      throw std::runtime_error(cmd.config_path + ": " + e.what());
    }
    const PipelineConfig config = parse_pipeline_config(config_json);
    fs::path model_path = config.model;
    if (model_path.is_relative()) {
      model_path = fs::path(cmd.config_path).parent_path() / model_path;
    }
    const std::string model_path_str = model_path.generic_string();
    const std::string model_text = read_file(model_path_str);
    PopulationModel model;
    try {
      model = model_from_json(json::parse(model_text));
    } catch (const json::exception& e) {
      throw std::runtime_error(model_path_str + ": " + e.what());
    }
    if (cmd.out_dir.empty()) {
      throw std::invalid_argument("--out-dir is required");
    }

    fs::create_directories(cmd.out_dir);

    struct StageStatus {
      std::string status = "skipped";
      std::string error;
    };
    std::map<std::string, StageStatus> stage_state;
    for (const auto& name : kPipelineStages) stage_state[name];
    struct Artifact {
      std::string name;
      std::string path;
      std::string hash;
    };
    std::vector<Artifact> artifacts;

    auto save_text = [&](const std::string& name, const std::string& relpath,
                         const std::string& content) {
      write_file((fs::path(cmd.out_dir) / relpath).string(), content);
      artifacts.push_back({name, relpath, hex64(fnv1a64(content))});
    };
    auto save_json = [&](const std::string& name, const std::string& relpath,
                         const ordered_json& j) {
      save_text(name, relpath, dump_json(j));
    };

    auto write_manifest = [&] {
      ordered_json m;
      m["tool"] = kToolName;
      m["version"] = kToolVersion;
      m["seed"] = config.seed;
      m["config"] = ordered_json{{"path", cmd.config_path},
                                 {"fnv1a64", hex64(fnv1a64(config_text))}};
      m["inputs"] = ordered_json::array(
          {ordered_json{{"path", model_path_str},
                        {"fnv1a64", hex64(fnv1a64(model_text))}}});
      ordered_json stages = ordered_json::array();
      for (const auto& name : kPipelineStages) {
        const StageStatus& state = stage_state.at(name);
        ordered_json s;
        s["name"] = name;
        s["status"] = state.status;
        if (state.status == "failed") s["error"] = state.error;
        stages.push_back(std::move(s));
      }
      m["stages"] = std::move(stages);
      ordered_json arts = ordered_json::array();
      for (const auto& artifact : artifacts) {
        arts.push_back(ordered_json{{"name", artifact.name},
                                    {"path", artifact.path},
                                    {"fnv1a64", artifact.hash}});
      }
      m["artifacts"] = std::move(arts);
      write_file((fs::path(cmd.out_dir) / "manifest.json").string(),
                 dump_json(m));
    };

    auto run_stage = [&](const std::string& name, auto&& body) {
      log_info(err, "stage " + name);
      StageStatus& state = stage_state.at(name);
      try {
        body();
        state.status = "ok";
      } catch (const std::exception& e) {
        state.status = "failed";
        state.error = e.what();
        write_manifest();
        throw std::runtime_error("stage " + name + " failed: " + e.what());
      }
    };

    // Shared stage state.
    Population population;
    Phase2Result phase2;
    std::vector<ReportRecord> filtered;
    MiGraph graph;
    std::vector<SurfaceId> surfaces;
    std::map<SurfacePair, JointDistribution> joints;
    VerdictMatrix verdicts;
    PlanningInput plan_input;
    AssignmentPlan plan;
    std::vector<ReportRecord> phase3_records;
    MiGraph graph_final;
    std::vector<VisitEvent> events;

    run_stage("simulate-phase2", [&] {
      population = generate_population(model, config.clients,
                                       derive_seed(config.seed, "population"));
      phase2 = run_phase2(population, family_partition(model),
                          expected_family_calls(model),
                          derive_seed(config.seed, "phase2"));
      std::ostringstream body;
      write_reports_jsonl(body, phase2.records);
      save_text("reports-phase2", "reports_phase2.jsonl", body.str());
    });

    run_stage("anonymize", [&] {
      filtered = filter_reports(phase2.records, config.k_anonymity);
      if (filtered.empty()) {
        throw std::runtime_error("no records survive the k-anonymity floor");
      }
      std::ostringstream body;
      write_reports_jsonl(body, filtered);
      save_text("reports-phase2-filtered", "reports_phase2_filtered.jsonl",
                body.str());
    });

    run_stage("estimate", [&] {
      graph = estimate_graph(filtered, config.delta);
      for (const auto& [id, node] : graph.nodes()) surfaces.push_back(id);
      joints = build_joints(filtered, surfaces);
      save_json("graph", "graph.json", mi_graph_to_json(graph));
    });

    run_stage("classify", [&] {
      ClassifyOptions options;
      options.threshold = config.tv_threshold;
      options.confidence = config.confidence;
      options.bootstrap_rounds = config.bootstrap_rounds;
      options.seed = derive_seed(config.seed, "classify");
      verdicts = classify_pairs(surfaces, joints, options);
      save_json("verdicts", "verdicts.json", verdict_matrix_to_json(verdicts));
      save_text("verdict-matrix", "verdict_matrix.csv",
                verdict_matrix_csv(verdicts));
    });

    run_stage("cluster", [&] {
      ClusterCut cut;
      cut.mi_threshold = config.cluster_threshold;
      const ClusterResult result = single_linkage_clusters(graph, cut);
      ordered_json j;
      j["cut"] = ordered_json{{"mi_threshold", config.cluster_threshold}};
      j["clusters"] = result.flat;
      j["dendrogram"] = cluster_tree_to_json(result.tree);
      save_json("clusters", "clusters.json", j);
    });

    run_stage("order", [&] {
      const AdjacencyMatrix adj = adjacency_from_verdicts(verdicts);
      const std::vector<SurfaceId> ordering = cuthill_mckee_order(adj);
      ordered_json j;
      j["order"] = ordering;
      j["bandwidth_input"] = matrix_bandwidth(adj, adj.order);
      j["bandwidth_ordered"] = matrix_bandwidth(adj, ordering);
      save_json("order", "order.json", j);
    });

    run_stage("plan", [&] {
      plan_input.surfaces = surfaces;
      for (const auto& id : surfaces) {
        plan_input.h[id] = graph.node_entropy_bits(id);
      }
      for (std::size_t i = 0; i < surfaces.size(); ++i) {
        for (std::size_t j = i + 1; j < surfaces.size(); ++j) {
          const SurfacePair pair{surfaces[i], surfaces[j]};
          const auto& node_a = graph.nodes().at(pair.first);
          const auto& node_b = graph.nodes().at(pair.second);
          const std::uint64_t k1 =
              std::max<std::uint64_t>(node_a.entropy.k_effective, 1);
          const std::uint64_t k2 =
              std::max<std::uint64_t>(node_b.entropy.k_effective, 1);
          const std::uint64_t need = required_samples(k1, k2);
          const auto it = joints.find(pair);
          const std::uint64_t have = it == joints.end() ? 0 : it->second.n;
          if (have < need) plan_input.n_required[pair] = need - have;
        }
      }
      plan_input.budget = config.phase3_budget_bits;
      plan_input.pool_size = config.phase3_pool;
      save_json("planning-input", "planning_input.json",
                planning_input_to_json(plan_input));
      try {
        plan = greedy_assign(plan_input);
      } catch (const PoolExhaustedError& e) {
        save_json("plan", "plan.json", plan_to_json(e.partial_plan()));
        throw;
      }
      const PlanReport report = verify_plan(plan_input, plan);
      if (!report.ok) {
        throw std::runtime_error(
            "plan verification failed: " +
            (report.failures.empty() ? std::string("unknown defect")
                                     : report.failures.front()));
      }
      save_json("plan", "plan.json", plan_to_json(plan));
    });

    run_stage("simulate-phase3", [&] {
      if (plan.rounds.empty()) {
        save_text("reports-phase3", "reports_phase3.jsonl", "");
        return;
      }
      const Population pool = generate_population(
          model, plan.total_clients,
          derive_seed(config.seed, "population-phase3"));
      Phase3Result result =
          run_phase3(pool, plan, derive_seed(config.seed, "phase3"),
                     config.phase3_budget_bits);
      phase3_records = std::move(result.records);
      std::ostringstream body;
      write_reports_jsonl(body, phase3_records);
      save_text("reports-phase3", "reports_phase3.jsonl", body.str());
    });

    run_stage("estimate-final", [&] {
      std::vector<ReportRecord> combined = filtered;
      combined.insert(combined.end(), phase3_records.begin(),
                      phase3_records.end());
      graph_final = estimate_graph(combined, config.delta);
      save_json("graph-final", "graph_final.json",
                mi_graph_to_json(graph_final));
    });

    run_stage("events", [&] {
      const auto presence =
          run_phase1(population, derive_seed(config.seed, "phase1"));
      events = events_from_presence(presence);
      std::ostringstream body;
      write_events_jsonl(body, events);
      save_text("events", "events.jsonl", body.str());
    });

    run_stage("sessions", [&] {
      SessionizeOptions sessionize_options;
      sessionize_options.site_verticals = config.verticals;
      const SessionizeResult grouped = sessionize(events, sessionize_options);
      SessionEntropyOptions counted;
      std::uint64_t missing = 0;
      counted.missing_counter = &missing;
      const std::vector<double> bits =
          session_entropy_batch(grouped.sessions, graph_final, counted);
      const SessionEntropyOptions plain;
      const EntropyHistogram hist = entropy_distribution(
          grouped.sessions, graph_final, config.bucket_width, plain);
      const auto split =
          party_split_report(grouped.sessions, graph_final, plain);

      double mean_bits = 0.0;
      double max_bits = 0.0;
      for (double b : bits) {
        mean_bits += b;
        max_bits = std::max(max_bits, b);
      }
      if (!bits.empty()) mean_bits /= static_cast<double>(bits.size());

      ordered_json j;
      j["sessions"] = grouped.sessions.size();
      j["sites"] = hist.sites;
      j["skipped_events"] = grouped.skipped;
      j["missing_surface_observations"] = missing;
      j["entropy_bits"] =
          ordered_json{{"mean", mean_bits}, {"max", max_bits}};
      j["party_split"] = party_split_json(split);
      save_json("sessions", "sessions.json", j);
      save_text("histogram", "histogram.csv", histogram_csv(hist));
      save_text("histogram-plot", "histogram.svg",
                render_histogram_svg(hist.mass, hist.bucket_width,
                                     "Per-session identifying bits"));
    });

    write_manifest();
    out << "pipeline complete: " << artifacts.size() << " artifacts in "
        << cmd.out_dir << "\n";
  });
}

}  // namespace surfent
