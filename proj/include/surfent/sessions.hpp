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
// Session-level analytics: visit events are grouped into fixed 28-day
// sessions keyed by (client, site, window), each session's identifying
// information is bounded through the tree decomposition over a measured MI
// graph, and the resulting per-session bounds feed site-normalized entropy
// histograms, first/third-party splits, family call-frequency reports,
// fingerprinting-signature association tables, blocklist what-if analysis,
// and stable-core surface selection.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "surfent/mi_graph.hpp"
#include "surfent/simulator.hpp"
#include "surfent/stats.hpp"

namespace surfent {

inline constexpr std::uint32_t kSessionWindowDays = 28;

// A script that ran during a visit, with the signature flags attached by an
// external detector. The host is what blocklists match against.
struct ScriptInfo {
  std::string id;
  std::string host;
  std::vector<std::string> signatures;
};

// One surface observation inside a visit, attributed to the script that made
// it; an empty script_id means the page itself touched the surface.
struct SurfaceObservation {
  SurfaceId surface;
  std::string script_id;
};

// One document's surface activity during one page visit.
struct VisitEvent {
  std::string client_id;
  std::string site;             // registrable domain of the top-level page
  std::string document_origin;  // origin of the observing document
  std::uint64_t day = 0;        // logical day stamp
  std::vector<SurfaceObservation> observations;
  std::vector<ScriptInfo> scripts;
};

// All of one client's activity on one site within one aligned 28-day window.
struct SessionLog {
  std::string client_id;
  std::string site;
  std::uint64_t window_start = 0;  // multiple of kSessionWindowDays
  std::set<SurfaceId> surfaces;    // union of the two party splits
  std::set<SurfaceId> first_party;
  std::set<SurfaceId> third_party;
  std::optional<std::string> vertical;
  bool has_signature = false;
};

// The registrable domain of a host or origin URL: scheme, path and port are
// stripped and the last two dot-separated labels kept. Hosts with fewer
// labels are returned unchanged.
std::string registrable_domain(std::string_view origin);

struct SessionizeOptions {
  std::map<std::string, std::string> site_verticals;  // opaque input labels
  // Keep sessions whose events observed no surfaces (used by blocklist
  // what-ifs, where blocking may empty a session that still happened).
  bool keep_empty = false;
};

struct SessionizeResult {
  std::vector<SessionLog> sessions;  // sorted by (client, site, window)
  std::uint64_t skipped = 0;         // malformed events dropped
};

// Groups events into aligned 28-day windows. An observation counts as
// first-party when the observing document's registrable domain equals the
// site's, third-party otherwise. Events missing a client or site - or, unless
// keep_empty is set, observing nothing - are skipped and counted.
SessionizeResult sessionize(const std::vector<VisitEvent>& events,
                            const SessionizeOptions& options = {});

struct SessionEntropyOptions {
  // Bits contributed by each session surface absent from the graph. The
  // measured graph cannot speak to them, so the default charges nothing;
  // the counter (when given) lets callers surface a warning.
  double missing_surface_bits = 0.0;
  std::uint64_t* missing_counter = nullptr;
  BoundOptions bound;
};

// Upper bound (bits) on the identifying information of one session: the tree
// bound over its surfaces that the graph knows, plus the configured default
// for surfaces it does not. Empty sessions score zero.
double session_entropy(const SessionLog& session, const MiGraph& graph,
                       const SessionEntropyOptions& options = {});

// Batch variant over many sessions; the default entry point parallelizes
// across sessions when OpenMP is enabled, the _serial variant is the
// reference implementation with bit-identical output.
std::vector<double> session_entropy_batch(
    const std::vector<SessionLog>& sessions, const MiGraph& graph,
    const SessionEntropyOptions& options = {});
std::vector<double> session_entropy_batch_serial(
    const std::vector<SessionLog>& sessions, const MiGraph& graph,
    const SessionEntropyOptions& options = {});

// Histogram over per-session entropy bounds where every site carries equal
// total weight: a site's sessions share 1/(number of sites) mass evenly.
struct EntropyHistogram {
  double bucket_width = 1.0;
  std::vector<double> mass;  // bucket i covers [i*width, (i+1)*width)
  std::uint64_t sessions = 0;
  std::uint64_t sites = 0;
};

// Throws std::invalid_argument("no sessions") on an empty input and
// std::invalid_argument on a non-positive bucket width.
EntropyHistogram entropy_distribution(
    const std::vector<SessionLog>& sessions, const MiGraph& graph,
    double bucket_width, const SessionEntropyOptions& options = {});

struct PartySplitRow {
  std::string group;  // vertical label, or "(unlabeled)"
  double first_party_bits = 0.0;   // mean over the group's sessions
  double third_party_bits = 0.0;
  std::uint64_t sessions = 0;
  std::uint64_t sites = 0;
};

// Mean first-party and third-party entropy bounds per vertical group.
// Groups with no sessions are simply absent; min_sites drops groups backed
// by fewer distinct sites.
std::vector<PartySplitRow> party_split_report(
    const std::vector<SessionLog>& sessions, const MiGraph& graph,
    const SessionEntropyOptions& options = {}, std::uint64_t min_sites = 0);

struct FamilyCallFrequency {
  // fraction of the site's sessions with >= threshold distinct surfaces of
  // the family, keyed by (family, site)
  std::map<std::pair<std::string, std::string>, double> fraction;
  // distribution of those fractions across sites, per family
  std::map<std::string, BoxStats> site_summary;
};

// Thresholds are mandatory per family: a family without a threshold, or a
// threshold for an unknown family, is an error.
FamilyCallFrequency family_call_frequency(
    const std::vector<SessionLog>& sessions,
    const std::map<std::string, std::vector<SurfaceId>>& families,
    const std::map<std::string, std::uint32_t>& thresholds);

// Sites bucketed by their fraction of signature-bearing sessions; each
// bucket summarizes the per-site mean session entropy of its sites.
struct SignatureBucket {
  double rate_low = 0.0;  // bucket covers [rate_low, rate_high)
  double rate_high = 0.0;
  BoxStats entropy;  // over per-site mean session entropy
  std::uint64_t sites = 0;
};

std::vector<SignatureBucket> signature_association(
    const std::vector<SessionLog>& sessions, const MiGraph& graph,
    const SessionEntropyOptions& options = {}, std::size_t buckets = 10);

// Removes every observation attributed to a blocked script, and the script
// entries themselves. A script is blocked when its host (or its host's
// registrable domain) is listed, or when signature_block is set and it
// carries at least one signature flag. Events are kept even when emptied.
std::vector<VisitEvent> apply_blocklist(const std::vector<VisitEvent>& events,
                                        const std::set<std::string>& blocklist,
                                        bool signature_block);

struct BlocklistImpact {
  EntropyHistogram baseline;
  EntropyHistogram intervention;
  std::vector<double> delta;  // intervention minus baseline, per bucket
};

// Re-sessionizes (keeping emptied sessions) and recomputes the entropy
// histogram with and without the blocklist applied.
BlocklistImpact blocklist_impact(const std::vector<VisitEvent>& events,
                                 const MiGraph& graph,
                                 const std::set<std::string>& blocklist,
                                 bool signature_block, double bucket_width,
                                 const SessionEntropyOptions& options = {},
                                 const SessionizeOptions& sessionize_options =
                                     {});

// Selection thresholds for the stable core: popular, overwhelmingly
// single-valued, non-trivial entropy, and steady daily reporting.
struct CoreSurfaceCriteria {
  std::uint64_t min_clients = 500;
  double min_single_value_fraction = 0.95;
  double min_entropy_bits = 0.1;
  // "does not vary significantly each day", read as coefficient of
  // variation of daily distinct-reporter counts over the window; days with
  // no reports count as zero.
  double max_daily_cv = 0.5;
  std::uint32_t window_days = kSessionWindowDays;
};

struct CoreSurfaceRow {
  SurfaceId surface;
  std::uint64_t clients = 0;
  double single_value_fraction = 0.0;
  double entropy_bits = 0.0;
  double daily_cv = 0.0;
  bool selected = false;
};

// Per-surface evaluation of the core criteria over a month of value reports
// (record timestamps are day stamps).
std::vector<CoreSurfaceRow> core_surface_report(
    const std::vector<ReportRecord>& records,
    const CoreSurfaceCriteria& criteria = {});

std::vector<SurfaceId> select_core_surfaces(
    const std::vector<ReportRecord>& records,
    const CoreSurfaceCriteria& criteria = {});

// Line-delimited JSON events:
//   {"client":..,"site":..,"origin":..,"day":..,
//    "surfaces":["id" | {"id":..,"script":..}, ...],
//    "scripts":[{"id":..,"host":..,"signatures":[..]}, ...]}
// Unreadable lines are skipped; the optional counter reports how many.
void write_events_jsonl(std::ostream& out,
                        const std::vector<VisitEvent>& events);
std::vector<VisitEvent> read_events_jsonl(std::istream& in,
                                          std::uint64_t* skipped = nullptr);

}  // namespace surfent
