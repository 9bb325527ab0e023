//
// Copyright 2026 The Geotrace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// The four aggregation levels as exact record transforms.
//
//   Level 0  user_id, lat, lon, t          raw pings
//   Level 1  user_id, zone, time_bin       pseudonymous, coarsened
//   Level 2  home_zone, lat, lon, time_bin de-linked, precise location
//   Level 3  home_zone, visit_zone, time_bin  de-linked, coarsened
//
// Levels 2 and 3 replace the user id with the user's inferred home zone
// (modal zone during the night window) and emit rows in a fixed content
// order, so row order carries no per-user information.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "geotrace/error.hpp"
#include "geotrace/geo.hpp"
#include "geotrace/parallel.hpp"
#include "geotrace/records.hpp"
#include "geotrace/trace.hpp"
#include "geotrace/zone.hpp"

namespace geotrace {

// Half-open hour-of-day window; wraps midnight when start > end.
struct NightWindow {
  int start_hour = 20;
  int end_hour = 4;

  bool contains(int hour) const noexcept {
    if (start_hour <= end_hour) return hour >= start_hour && hour < end_hour;
    return hour >= start_hour || hour < end_hour;
  }
};

struct AggregationConfig {
  Level level = Level::kRaw;
  std::optional<ZoneGrid> grid;
  std::optional<TemporalResolution> temporal;
  NightWindow night;
  // Levels 2-3: drop rows whose home zone has fewer users. 0 disables.
  std::int64_t min_cohort = 0;
  // Collapse duplicate rows (consecutive per user at Level 1, global after
  // the sort at Level 3). Disabling exposes the one-row-per-ping stream.
  bool collapse_duplicates = true;

  const ZoneGrid& require_grid() const {
    if (!grid) throw Error(ErrorCode::kInvalidConfig, "level needs a grid");
    return *grid;
  }
  const TemporalResolution& require_temporal() const {
    if (!temporal) {
      throw Error(ErrorCode::kInvalidConfig, "level needs a temporal resolution");
    }
    return *temporal;
  }
};

// Modal zone with lexicographically smallest id on ties.
inline ZoneId ModalZone(const std::map<ZoneId, std::int64_t>& counts) {
  const ZoneId* best = nullptr;
  std::int64_t best_n = -1;
  for (const auto& [zone, n] : counts) {  // ascending id order
    if (n > best_n) {
      best = &zone;
      best_n = n;
    }
  }
  return best ? *best : ZoneId();
}

// Home from (zone, hour-of-day) observations: modal zone among night
// observations, or among all observations when none fall in the window.
template <typename Range, typename ZoneFn, typename HourFn>
ZoneId InferHomeFrom(const Range& observations, ZoneFn zone_of_obs,
                     HourFn hour_of_obs, const NightWindow& night) {
  std::map<ZoneId, std::int64_t> night_counts;
  std::map<ZoneId, std::int64_t> all_counts;
  for (const auto& obs : observations) {
    const ZoneId z = zone_of_obs(obs);
    ++all_counts[z];
    if (night.contains(hour_of_obs(obs))) ++night_counts[z];
  }
  if (all_counts.empty()) {
    throw Error(ErrorCode::kEmptyTrace, "cannot infer home of an empty trace");
  }
  return ModalZone(night_counts.empty() ? all_counts : night_counts);
}

inline ZoneId infer_home(const Trace& trace, const ZoneGrid& grid,
                         const NightWindow& night = {}) {
  if (trace.empty()) {
    throw Error(ErrorCode::kEmptyTrace,
                "cannot infer home of empty trace '" + trace.user_id() + "'");
  }
  return InferHomeFrom(
      trace.fixes(), [&](const TimedPoint& f) { return zone_of(f.point, grid); },
      [](const TimedPoint& f) { return f.t.hour_of_day(); }, night);
}

// Home from Level-1 rows of one user. A bin's hour is its midpoint hour.
inline ZoneId infer_home(const std::vector<CoarsePing>& rows,
                         const TemporalResolution& temporal,
                         const NightWindow& night = {}) {
  return InferHomeFrom(
      rows, [](const CoarsePing& r) { return r.zone; },
      [&](const CoarsePing& r) { return temporal.midpoint_hour(r.time_bin); },
      night);
}

// One home per trace, aligned with `traces`.
inline std::vector<ZoneId> InferHomes(const std::vector<Trace>& traces,
                                      const ZoneGrid& grid,
                                      const NightWindow& night = {},
                                      int threads = 1) {
  std::vector<ZoneId> homes(traces.size());
  ParallelFor(traces.size(), threads, [&](std::size_t i) {
    homes[i] = infer_home(traces[i], grid, night);
  });
  return homes;
}

namespace aggregate_detail {

inline ZoneId ZoneOrThrow(const GeoPoint& p, const ZoneGrid& grid,
                          const std::string& user, Timestamp t) {
  try {
    return zone_of(p, grid);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " (user " + user + ", t=" +
                              std::to_string(t.seconds) + ")");
  }
}

// Applies the min_cohort rule given the home of each trace.
inline std::vector<bool> CohortMask(const std::vector<ZoneId>& homes,
                                    std::int64_t min_cohort) {
  std::vector<bool> keep(homes.size(), true);
  if (min_cohort <= 0) return keep;
  std::unordered_map<ZoneId, std::int64_t> sizes;
  for (const ZoneId& h : homes) ++sizes[h];
  for (std::size_t i = 0; i < homes.size(); ++i) {
    keep[i] = sizes[homes[i]] >= min_cohort;
  }
  return keep;
}

}  // namespace aggregate_detail

// Level 1: (user_id, zone, time_bin) per ping, consecutive duplicates within
// a user collapsed. Users appear in input order, rows in time order.
inline std::vector<CoarsePing> to_level1(const std::vector<Trace>& traces,
                                         const AggregationConfig& cfg,
                                         int threads = 1) {
  const ZoneGrid& grid = cfg.require_grid();
  const TemporalResolution& temporal = cfg.require_temporal();
  std::vector<std::vector<CoarsePing>> parts(traces.size());
  ParallelFor(traces.size(), threads, [&](std::size_t i) {
    const Trace& tr = traces[i];
    auto& out = parts[i];
    out.reserve(tr.size());
    for (const TimedPoint& f : tr.fixes()) {
      CoarsePing row{tr.user_id(),
                     aggregate_detail::ZoneOrThrow(f.point, grid, tr.user_id(), f.t),
                     time_bin(f.t, temporal)};
      if (cfg.collapse_duplicates && !out.empty() && out.back() == row) continue;
      out.push_back(std::move(row));
    }
  });
  std::vector<CoarsePing> rows;
  for (auto& p : parts) {
    rows.insert(rows.end(), std::make_move_iterator(p.begin()),
                std::make_move_iterator(p.end()));
  }
  return rows;
}

struct Level2Output {
  std::vector<AggPing> rows;
  std::vector<ZoneId> homes;  // home assigned to each input trace
};

struct Level3Output {
  std::vector<CoarseAggPing> rows;
  std::vector<ZoneId> homes;
};

inline void SortLevel2(std::vector<AggPing>& rows) {
  std::sort(rows.begin(), rows.end(), [](const AggPing& a, const AggPing& b) {
    if (auto c = a.home_zone <=> b.home_zone; c != 0) return c < 0;
    if (a.time_bin != b.time_bin) return a.time_bin < b.time_bin;
    if (a.point.lat() != b.point.lat()) return a.point.lat() < b.point.lat();
    return a.point.lon() < b.point.lon();
  });
}

inline void SortLevel3(std::vector<CoarseAggPing>& rows, bool collapse) {
  std::sort(rows.begin(), rows.end());
  if (collapse) rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
}

// Level 2: (home_zone, lat, lon, time_bin) per ping, sorted by
// (home_zone, time_bin, lat, lon).
inline Level2Output to_level2_with_homes(const std::vector<Trace>& traces,
                                         const AggregationConfig& cfg,
                                         int threads = 1) {
  const ZoneGrid& grid = cfg.require_grid();
  const TemporalResolution& temporal = cfg.require_temporal();
  Level2Output out;
  out.homes = InferHomes(traces, grid, cfg.night, threads);
  const auto keep = aggregate_detail::CohortMask(out.homes, cfg.min_cohort);
  out.rows.reserve(TotalPings(traces));
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const Trace& tr = traces[i];
    for (const TimedPoint& f : tr.fixes()) {
      aggregate_detail::ZoneOrThrow(f.point, grid, tr.user_id(), f.t);
      if (!keep[i]) continue;
      out.rows.push_back(AggPing{out.homes[i], f.point, time_bin(f.t, temporal)});
    }
  }
  SortLevel2(out.rows);
  return out;
}

inline std::vector<AggPing> to_level2(const std::vector<Trace>& traces,
                                      const AggregationConfig& cfg,
                                      int threads = 1) {
  return to_level2_with_homes(traces, cfg, threads).rows;
}

// Level 3: (home_zone, visit_zone, time_bin) per ping, sorted by
// (home_zone, visit_zone, time_bin) with duplicates collapsed.
inline Level3Output to_level3_with_homes(const std::vector<Trace>& traces,
                                         const AggregationConfig& cfg,
                                         int threads = 1) {
  const ZoneGrid& grid = cfg.require_grid();
  const TemporalResolution& temporal = cfg.require_temporal();
  Level3Output out;
  out.homes = InferHomes(traces, grid, cfg.night, threads);
  const auto keep = aggregate_detail::CohortMask(out.homes, cfg.min_cohort);
  std::vector<std::vector<CoarseAggPing>> parts(traces.size());
  ParallelFor(traces.size(), threads, [&](std::size_t i) {
    const Trace& tr = traces[i];
    for (const TimedPoint& f : tr.fixes()) {
      ZoneId z = aggregate_detail::ZoneOrThrow(f.point, grid, tr.user_id(), f.t);
      if (!keep[i]) continue;
      parts[i].push_back(
          CoarseAggPing{out.homes[i], std::move(z), time_bin(f.t, temporal)});
    }
  });
  for (auto& p : parts) {
    out.rows.insert(out.rows.end(), std::make_move_iterator(p.begin()),
                    std::make_move_iterator(p.end()));
  }
  SortLevel3(out.rows, cfg.collapse_duplicates);
  return out;
}

inline std::vector<CoarseAggPing> to_level3(const std::vector<Trace>& traces,
                                            const AggregationConfig& cfg,
                                            int threads = 1) {
  return to_level3_with_homes(traces, cfg, threads).rows;
}

// Spatially coarsens Level-2 rows into Level-3 rows on `grid`.
inline std::vector<CoarseAggPing> CoarsenLevel2(const std::vector<AggPing>& rows,
                                                const ZoneGrid& grid,
                                                bool collapse = true) {
  std::vector<CoarseAggPing> out;
  out.reserve(rows.size());
  for (const AggPing& r : rows) {
    out.push_back(CoarseAggPing{r.home_zone, zone_of(r.point, grid), r.time_bin});
  }
  SortLevel3(out, collapse);
  return out;
}

// Re-embeds Level-1 rows as pings at zone centroids and bin starts. Feeding
// the result back through to_level1 reproduces the (zone, bin) pairs.
inline std::vector<Trace> ReembedLevel1(const std::vector<CoarsePing>& rows,
                                        const ZoneGrid& grid,
                                        const TemporalResolution& temporal) {
  std::vector<Ping> pings;
  pings.reserve(rows.size());
  for (const CoarsePing& r : rows) {
    pings.push_back(Ping{r.user_id, grid.centroid(r.zone),
                         Timestamp::checked(r.time_bin * temporal.bin_seconds())});
  }
  return BuildTraces(pings);
}

// Level-1 rows grouped per user, preserving row order within a user.
inline std::map<std::string, std::vector<CoarsePing>> GroupLevel1(
    const std::vector<CoarsePing>& rows) {
  std::map<std::string, std::vector<CoarsePing>> by_user;
  for (const CoarsePing& r : rows) by_user[r.user_id].push_back(r);
  return by_user;
}

}  // namespace geotrace
