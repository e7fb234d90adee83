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

#include "surfent/sessions.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <tuple>

#include "surfent/estimation.hpp"

namespace surfent {

std::string registrable_domain(std::string_view origin) {
  // Origins arrive as bare hosts or URLs; reduce to the host first.
  const auto scheme = origin.find("://");
  if (scheme != std::string_view::npos) origin.remove_prefix(scheme + 3);
  const auto slash = origin.find('/');
  if (slash != std::string_view::npos) origin = origin.substr(0, slash);
  const auto colon = origin.find(':');
  if (colon != std::string_view::npos) origin = origin.substr(0, colon);

  // Last two labels; hosts with at most one dot are already registrable.
  const auto last_dot = origin.rfind('.');
  if (last_dot == std::string_view::npos) return std::string(origin);
  const auto second_dot = origin.rfind('.', last_dot - 1);
  if (second_dot == std::string_view::npos) return std::string(origin);
  return std::string(origin.substr(second_dot + 1));
}

SessionizeResult sessionize(const std::vector<VisitEvent>& events,
                            const SessionizeOptions& options) {
  SessionizeResult result;
  std::map<std::tuple<std::string, std::string, std::uint64_t>, SessionLog>
      sessions;
  for (const VisitEvent& event : events) {
    if (event.client_id.empty() || event.site.empty() ||
        (event.observations.empty() && !options.keep_empty)) {
      ++result.skipped;
      continue;
    }
    const std::uint64_t window =
        (event.day / kSessionWindowDays) * kSessionWindowDays;
    SessionLog& session =
        sessions[{event.client_id, event.site, window}];
    if (session.client_id.empty()) {
      session.client_id = event.client_id;
      session.site = event.site;
      session.window_start = window;
      const auto vertical = options.site_verticals.find(event.site);
      if (vertical != options.site_verticals.end()) {
        session.vertical = vertical->second;
      }
    }
    const bool first_party =
        registrable_domain(event.document_origin) ==
        registrable_domain(event.site);
    for (const SurfaceObservation& obs : event.observations) {
      session.surfaces.insert(obs.surface);
      (first_party ? session.first_party : session.third_party)
          .insert(obs.surface);
    }
    for (const ScriptInfo& script : event.scripts) {
      if (!script.signatures.empty()) session.has_signature = true;
    }
  }
  result.sessions.reserve(sessions.size());
  for (auto& [key, session] : sessions) {
    result.sessions.push_back(std::move(session));
  }
  return result;
}

namespace {

// Core of every per-session bound: the tree bound over the surfaces the
// graph knows, plus the configured default for those it does not.
double bounded_bits(const std::set<SurfaceId>& surfaces, const MiGraph& graph,
                    const SessionEntropyOptions& options,
                    std::uint64_t* missing_out) {
  std::set<SurfaceId> known;
  std::uint64_t missing = 0;
  for (const SurfaceId& id : surfaces) {
    if (graph.has_node(id)) {
      known.insert(id);
    } else {
      ++missing;
    }
  }
  double bits = known.empty()
                    ? 0.0
                    : chow_liu_upper_bound(graph, known, options.bound)
                          .upper_bits;
  bits += static_cast<double>(missing) * options.missing_surface_bits;
  if (missing_out) *missing_out += missing;
  return bits;
}

std::vector<double> batch_impl(const std::vector<SessionLog>& sessions,
                               const MiGraph& graph,
                               const SessionEntropyOptions& options,
                               bool parallel) {
  std::vector<double> bits(sessions.size());
  SessionEntropyOptions local = options;
  local.missing_counter = nullptr;  // tallied once below, race-free

  const auto evaluate = [&](std::size_t i) {
    bits[i] = bounded_bits(sessions[i].surfaces, graph, local, nullptr);
  };
  bool done = false;
  if (parallel) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(sessions.size());
         ++i) {
      evaluate(static_cast<std::size_t>(i));
    }
    done = true;
#endif
  }
  if (!done) {
    for (std::size_t i = 0; i < sessions.size(); ++i) evaluate(i);
  }
  if (options.missing_counter) {
    for (const SessionLog& session : sessions) {
      for (const SurfaceId& id : session.surfaces) {
        if (!graph.has_node(id)) ++*options.missing_counter;
      }
    }
  }
  return bits;
}

}  // namespace

double session_entropy(const SessionLog& session, const MiGraph& graph,
                       const SessionEntropyOptions& options) {
  return bounded_bits(session.surfaces, graph, options,
                      options.missing_counter);
}

std::vector<double> session_entropy_batch(
    const std::vector<SessionLog>& sessions, const MiGraph& graph,
    const SessionEntropyOptions& options) {
  return batch_impl(sessions, graph, options, true);
}

std::vector<double> session_entropy_batch_serial(
    const std::vector<SessionLog>& sessions, const MiGraph& graph,
    const SessionEntropyOptions& options) {
  return batch_impl(sessions, graph, options, false);
}

EntropyHistogram entropy_distribution(const std::vector<SessionLog>& sessions,
                                      const MiGraph& graph,
                                      double bucket_width,
                                      const SessionEntropyOptions& options) {
  if (!(bucket_width > 0.0)) {
    throw std::invalid_argument("bucket width must be positive");
  }
  if (sessions.empty()) throw std::invalid_argument("no sessions");

  const std::vector<double> bits =
      session_entropy_batch(sessions, graph, options);
  std::map<std::string, std::uint64_t> site_sessions;
  for (const SessionLog& session : sessions) {
    site_sessions[session.site] += 1;
  }

  EntropyHistogram histogram;
  histogram.bucket_width = bucket_width;
  histogram.sessions = sessions.size();
  histogram.sites = site_sessions.size();
  const double site_share = 1.0 / static_cast<double>(site_sessions.size());
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto bucket = static_cast<std::size_t>(bits[i] / bucket_width);
    if (bucket >= histogram.mass.size()) histogram.mass.resize(bucket + 1);
    // Every site contributes equal total mass, split evenly over its
    // sessions, so busy sites cannot dominate the distribution.
    histogram.mass[bucket] +=
        site_share / static_cast<double>(site_sessions.at(sessions[i].site));
  }
  return histogram;
}

std::vector<PartySplitRow> party_split_report(
    const std::vector<SessionLog>& sessions, const MiGraph& graph,
    const SessionEntropyOptions& options, std::uint64_t min_sites) {
  struct Accumulator {
    double first_party = 0.0;
    double third_party = 0.0;
    std::uint64_t count = 0;
    std::set<std::string> sites;
  };
  std::map<std::string, Accumulator> groups;
  for (const SessionLog& session : sessions) {
    Accumulator& acc =
        groups[session.vertical.value_or(std::string("(unlabeled)"))];
    acc.first_party += bounded_bits(session.first_party, graph, options,
                                    nullptr);
    acc.third_party += bounded_bits(session.third_party, graph, options,
                                    nullptr);
    acc.count += 1;
    acc.sites.insert(session.site);
  }
  std::vector<PartySplitRow> rows;
  for (const auto& [group, acc] : groups) {
    if (acc.sites.size() < min_sites) continue;
    rows.push_back({group,
                    acc.first_party / static_cast<double>(acc.count),
                    acc.third_party / static_cast<double>(acc.count),
                    acc.count, acc.sites.size()});
  }
  return rows;
}

FamilyCallFrequency family_call_frequency(
    const std::vector<SessionLog>& sessions,
    const std::map<std::string, std::vector<SurfaceId>>& families,
    const std::map<std::string, std::uint32_t>& thresholds) {
  for (const auto& [family, threshold] : thresholds) {
    if (!families.count(family)) {
      throw std::invalid_argument("unknown family: " + family);
    }
  }
  for (const auto& [family, members] : families) {
    if (!thresholds.count(family)) {
      throw std::invalid_argument("missing threshold for family " + family);
    }
  }

  std::map<std::string, std::vector<const SessionLog*>> by_site;
  for (const SessionLog& session : sessions) {
    by_site[session.site].push_back(&session);
  }

  FamilyCallFrequency result;
  std::map<std::string, std::vector<double>> fractions_by_family;
  for (const auto& [site, site_sessions] : by_site) {
    for (const auto& [family, members] : families) {
      const std::uint32_t threshold = thresholds.at(family);
      std::uint64_t hits = 0;
      for (const SessionLog* session : site_sessions) {
        std::uint32_t distinct = 0;
        for (const SurfaceId& id : members) {
          if (session->surfaces.count(id)) ++distinct;
        }
        if (distinct >= threshold) ++hits;
      }
      const double fraction = static_cast<double>(hits) /
                              static_cast<double>(site_sessions.size());
      result.fraction[{family, site}] = fraction;
      fractions_by_family[family].push_back(fraction);
    }
  }
  for (const auto& [family, fractions] : fractions_by_family) {
    result.site_summary[family] = box_stats(fractions);
  }
  return result;
}

std::vector<SignatureBucket> signature_association(
    const std::vector<SessionLog>& sessions, const MiGraph& graph,
    const SessionEntropyOptions& options, std::size_t buckets) {
  if (buckets == 0) {
    throw std::invalid_argument("bucket count must be positive");
  }
  struct SiteStats {
    std::uint64_t sessions = 0;
    std::uint64_t flagged = 0;
    double bits = 0.0;
  };
  const std::vector<double> bits =
      session_entropy_batch(sessions, graph, options);
  std::map<std::string, SiteStats> sites;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    SiteStats& stats = sites[sessions[i].site];
    stats.sessions += 1;
    stats.flagged += sessions[i].has_signature ? 1 : 0;
    stats.bits += bits[i];
  }

  std::vector<std::vector<double>> bucket_means(buckets);
  for (const auto& [site, stats] : sites) {
    const double rate = static_cast<double>(stats.flagged) /
                        static_cast<double>(stats.sessions);
    const auto index = std::min(
        buckets - 1, static_cast<std::size_t>(rate *
                                              static_cast<double>(buckets)));
    bucket_means[index].push_back(stats.bits /
                                  static_cast<double>(stats.sessions));
  }

  std::vector<SignatureBucket> rows;
  for (std::size_t b = 0; b < buckets; ++b) {
    if (bucket_means[b].empty()) continue;
    SignatureBucket row;
    row.rate_low = static_cast<double>(b) / static_cast<double>(buckets);
    row.rate_high = static_cast<double>(b + 1) / static_cast<double>(buckets);
    row.entropy = box_stats(bucket_means[b]);
    row.sites = bucket_means[b].size();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<VisitEvent> apply_blocklist(const std::vector<VisitEvent>& events,
                                        const std::set<std::string>& blocklist,
                                        bool signature_block) {
  std::vector<VisitEvent> filtered;
  filtered.reserve(events.size());
  for (const VisitEvent& event : events) {
    VisitEvent kept = event;
    kept.observations.clear();
    kept.scripts.clear();
    std::set<std::string> blocked_ids;
    for (const ScriptInfo& script : event.scripts) {
      const bool blocked =
          blocklist.count(script.host) ||
          blocklist.count(registrable_domain(script.host)) ||
          (signature_block && !script.signatures.empty());
      if (blocked) {
        blocked_ids.insert(script.id);
      } else {
        kept.scripts.push_back(script);
      }
    }
    for (const SurfaceObservation& obs : event.observations) {
      if (obs.script_id.empty() || !blocked_ids.count(obs.script_id)) {
        kept.observations.push_back(obs);
      }
    }
    filtered.push_back(std::move(kept));
  }
  return filtered;
}

BlocklistImpact blocklist_impact(const std::vector<VisitEvent>& events,
                                 const MiGraph& graph,
                                 const std::set<std::string>& blocklist,
                                 bool signature_block, double bucket_width,
                                 const SessionEntropyOptions& options,
                                 const SessionizeOptions& sessionize_options) {
  // Keep emptied sessions on both sides: a visit still happened even when
  // blocking removed everything it observed, and the two histograms must
  // cover the same session population.
  SessionizeOptions keyed = sessionize_options;
  keyed.keep_empty = true;

  BlocklistImpact impact;
  impact.baseline = entropy_distribution(
      sessionize(events, keyed).sessions, graph, bucket_width, options);
  impact.intervention = entropy_distribution(
      sessionize(apply_blocklist(events, blocklist, signature_block), keyed)
          .sessions,
      graph, bucket_width, options);

  const std::size_t buckets =
      std::max(impact.baseline.mass.size(), impact.intervention.mass.size());
  impact.delta.assign(buckets, 0.0);
  for (std::size_t i = 0; i < buckets; ++i) {
    const double base =
        i < impact.baseline.mass.size() ? impact.baseline.mass[i] : 0.0;
    const double after = i < impact.intervention.mass.size()
                             ? impact.intervention.mass[i]
                             : 0.0;
    impact.delta[i] = after - base;
  }
  return impact;
}

std::vector<CoreSurfaceRow> core_surface_report(
    const std::vector<ReportRecord>& records,
    const CoreSurfaceCriteria& criteria) {
  if (criteria.window_days < 2) {
    throw std::invalid_argument("window must span at least two days");
  }
  struct PerSurface {
    std::map<std::string, std::set<ValueToken>> values_by_client;
    std::map<std::uint64_t, std::set<std::string>> reporters_by_day;
  };
  std::map<SurfaceId, PerSurface> surfaces;
  std::uint64_t min_day = std::numeric_limits<std::uint64_t>::max();
  for (const ReportRecord& record : records) {
    PerSurface& s = surfaces[record.surface];
    s.values_by_client[record.client_id].insert(record.value);
    s.reporters_by_day[record.timestamp].insert(record.client_id);
    min_day = std::min(min_day, record.timestamp);
  }
  // Daily stability is judged over the aligned window that contains the
  // earliest report; days without reports count as zero.
  const std::uint64_t window_base =
      records.empty() ? 0
                      : (min_day / criteria.window_days) * criteria.window_days;

  std::vector<CoreSurfaceRow> rows;
  for (const auto& [surface, data] : surfaces) {
    CoreSurfaceRow row;
    row.surface = surface;
    row.clients = data.values_by_client.size();

    std::uint64_t single = 0;
    EmpiricalDistribution dist;
    for (const auto& [client, values] : data.values_by_client) {
      if (values.size() == 1) ++single;
      dist.add(*values.begin(), 1);  // one sample per client
    }
    row.single_value_fraction =
        static_cast<double>(single) / static_cast<double>(row.clients);
    row.entropy_bits = plugin_entropy_bits(dist);

    std::vector<double> daily(criteria.window_days, 0.0);
    for (const auto& [day, reporters] : data.reporters_by_day) {
      if (day < window_base || day >= window_base + criteria.window_days) {
        continue;  // outside the analysis month
      }
      daily[day - window_base] = static_cast<double>(reporters.size());
    }
    const double daily_mean = mean(daily);
    row.daily_cv = daily_mean > 0.0
                       ? sample_stdev(daily) / daily_mean
                       : std::numeric_limits<double>::infinity();

    row.selected = row.clients >= criteria.min_clients &&
                   row.single_value_fraction >=
                       criteria.min_single_value_fraction &&
                   row.entropy_bits >= criteria.min_entropy_bits &&
                   row.daily_cv <= criteria.max_daily_cv;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SurfaceId> select_core_surfaces(
    const std::vector<ReportRecord>& records,
    const CoreSurfaceCriteria& criteria) {
  std::vector<SurfaceId> selected;
  for (const CoreSurfaceRow& row : core_surface_report(records, criteria)) {
    if (row.selected) selected.push_back(row.surface);
  }
  return selected;
}

void write_events_jsonl(std::ostream& out,
                        const std::vector<VisitEvent>& events) {
  for (const VisitEvent& event : events) {
    nlohmann::ordered_json j;
    j["client"] = event.client_id;
    j["site"] = event.site;
    j["origin"] = event.document_origin;
    j["day"] = event.day;
    j["surfaces"] = nlohmann::ordered_json::array();
    for (const SurfaceObservation& obs : event.observations) {
      if (obs.script_id.empty()) {
        j["surfaces"].push_back(obs.surface);
      } else {
        j["surfaces"].push_back({{"id", obs.surface},
                                 {"script", obs.script_id}});
      }
    }
    j["scripts"] = nlohmann::ordered_json::array();
    for (const ScriptInfo& script : event.scripts) {
      j["scripts"].push_back({{"id", script.id},
                              {"host", script.host},
                              {"signatures", script.signatures}});
    }
    out << j.dump() << '\n';
  }
}

std::vector<VisitEvent> read_events_jsonl(std::istream& in,
                                          std::uint64_t* skipped) {
  std::vector<VisitEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      VisitEvent event;
      event.client_id = j.at("client").get<std::string>();
      event.site = j.at("site").get<std::string>();
      event.document_origin = j.value("origin", event.site);
      event.day = j.value("day", 0ull);
      if (j.contains("surfaces")) {
        for (const auto& entry : j.at("surfaces")) {
          if (entry.is_string()) {
            event.observations.push_back({entry.get<SurfaceId>(), ""});
          } else {
            event.observations.push_back(
                {entry.at("id").get<SurfaceId>(),
                 entry.value("script", std::string())});
          }
        }
      }
      if (j.contains("scripts")) {
        for (const auto& entry : j.at("scripts")) {
          ScriptInfo script;
          script.id = entry.at("id").get<std::string>();
          script.host = entry.value("host", std::string());
          script.signatures = entry.value("signatures",
                                          std::vector<std::string>{});
          event.scripts.push_back(std::move(script));
        }
      }
      events.push_back(std::move(event));
    } catch (const nlohmann::json::exception&) {
      if (skipped) ++*skipped;
    }
  }
  return events;
}

}  // namespace surfent
