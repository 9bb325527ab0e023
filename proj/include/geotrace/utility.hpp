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

// Task-based utility metrics.
//
// Every level is first reduced to an Occupancy: for each entity, the set of
// (time_bin, zone) cells it was seen in. The entity is the user at Levels
// 0-1, the home zone at Levels 2-3 and the candidate for reconstructed
// trajectories. Density, origin-destination flows and foot traffic are all
// computed from that one representation, so a level that carries the same
// (entity, zone, bin) information always yields the same metric.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geotrace/aggregate.hpp"
#include "geotrace/csv.hpp"
#include "geotrace/error.hpp"
#include "geotrace/geo.hpp"
#include "geotrace/reconstruct.hpp"
#include "geotrace/records.hpp"
#include "geotrace/synth.hpp"
#include "geotrace/trace.hpp"
#include "geotrace/zone.hpp"

namespace geotrace {

// Half-open range of time bins.
struct BinWindow {
  std::int64_t first = std::numeric_limits<std::int64_t>::min();
  std::int64_t last = std::numeric_limits<std::int64_t>::max();

  bool contains(std::int64_t bin) const noexcept { return bin >= first && bin < last; }
};

struct Occupancy {
  using Cell = std::pair<std::int64_t, ZoneId>;  // (time_bin, zone)
  std::vector<std::vector<Cell>> entities;       // each sorted, unique
  // False for de-linked records: rows of one entity are not one trajectory.
  bool linkable = true;
};

namespace utility_detail {

inline void Canonicalize(std::vector<Occupancy::Cell>& cells) {
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
}

template <typename Key>
Occupancy Collect(std::map<Key, std::vector<Occupancy::Cell>>& groups,
                  bool linkable) {
  Occupancy occ;
  occ.linkable = linkable;
  occ.entities.reserve(groups.size());
  for (auto& [key, cells] : groups) {
    Canonicalize(cells);
    occ.entities.push_back(std::move(cells));
  }
  return occ;
}

}  // namespace utility_detail

inline Occupancy OccupancyFromTraces(const std::vector<Trace>& traces,
                                     const ZoneGrid& grid,
                                     const TemporalResolution& temporal) {
  Occupancy occ;
  occ.entities.reserve(traces.size());
  for (const Trace& tr : traces) {
    std::vector<Occupancy::Cell> cells;
    cells.reserve(tr.size());
    for (const TimedPoint& f : tr.fixes()) {
      cells.emplace_back(time_bin(f.t, temporal), zone_of(f.point, grid));
    }
    utility_detail::Canonicalize(cells);
    occ.entities.push_back(std::move(cells));
  }
  return occ;
}

inline Occupancy OccupancyFromLevel1(const std::vector<CoarsePing>& rows) {
  std::map<std::string, std::vector<Occupancy::Cell>> groups;
  for (const CoarsePing& r : rows) groups[r.user_id].emplace_back(r.time_bin, r.zone);
  return utility_detail::Collect(groups, true);
}

inline Occupancy OccupancyFromLevel2(const std::vector<AggPing>& rows,
                                     const ZoneGrid& grid) {
  std::map<ZoneId, std::vector<Occupancy::Cell>> groups;
  for (const AggPing& r : rows) {
    groups[r.home_zone].emplace_back(r.time_bin, zone_of(r.point, grid));
  }
  return utility_detail::Collect(groups, false);
}

inline Occupancy OccupancyFromLevel3(const std::vector<CoarseAggPing>& rows) {
  std::map<ZoneId, std::vector<Occupancy::Cell>> groups;
  for (const CoarseAggPing& r : rows) {
    groups[r.home_zone].emplace_back(r.time_bin, r.visit_zone);
  }
  return utility_detail::Collect(groups, false);
}

inline Occupancy OccupancyFromCandidates(const Reconstruction& recon) {
  Occupancy occ;
  occ.entities.reserve(recon.candidates.size());
  for (const Candidate& c : recon.candidates) {
    std::vector<Occupancy::Cell> cells;
    cells.reserve(c.steps.size());
    for (const CandidateStep& s : c.steps) cells.emplace_back(s.time_bin, s.zone);
    utility_detail::Canonicalize(cells);
    occ.entities.push_back(std::move(cells));
  }
  return occ;
}

using ZoneMass = std::map<ZoneId, double>;

inline ZoneMass Normalize(const std::map<ZoneId, std::int64_t>& counts) {
  std::int64_t total = 0;
  for (const auto& [z, n] : counts) total += n;
  ZoneMass out;
  if (total == 0) return out;
  for (const auto& [z, n] : counts) {
    out.emplace(z, static_cast<double>(n) / static_cast<double>(total));
  }
  return out;
}

// Share of (entity, zone, bin) presences per zone within `window`.
inline ZoneMass density_map(const Occupancy& occ, const BinWindow& window = {}) {
  std::map<ZoneId, std::int64_t> counts;
  for (const auto& cells : occ.entities) {
    for (const auto& [bin, zone] : cells) {
      if (window.contains(bin)) ++counts[zone];
    }
  }
  return Normalize(counts);
}

inline ZoneMass density_map(const std::vector<Trace>& traces, const ZoneGrid& grid,
                            const TemporalResolution& temporal,
                            const BinWindow& window = {}) {
  return density_map(OccupancyFromTraces(traces, grid, temporal), window);
}

// Share of distinct visitors per zone within `window`.
inline ZoneMass foot_traffic(const Occupancy& occ, const BinWindow& window = {}) {
  std::map<ZoneId, std::int64_t> counts;
  std::vector<const ZoneId*> seen;
  for (const auto& cells : occ.entities) {
    seen.clear();
    for (const auto& [bin, zone] : cells) {
      if (window.contains(bin)) seen.push_back(&zone);
    }
    std::sort(seen.begin(), seen.end(),
              [](const ZoneId* a, const ZoneId* b) { return *a < *b; });
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (i == 0 || *seen[i] != *seen[i - 1]) ++counts[*seen[i]];
    }
  }
  return Normalize(counts);
}

// Sparse origin-destination counts; absent pairs are zero.
struct ODMatrix {
  std::map<std::pair<ZoneId, ZoneId>, std::int64_t> counts;

  std::int64_t at(const ZoneId& from, const ZoneId& to) const {
    const auto it = counts.find({from, to});
    return it == counts.end() ? 0 : it->second;
  }
  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& [k, n] : counts) t += n;
    return t;
  }
  bool empty() const { return counts.empty(); }
  friend bool operator==(const ODMatrix&, const ODMatrix&) = default;
};

// Transitions between successive occupied bins of each entity. When an
// entity occupies several zones in a bin, every (from, to) pair across the
// two bins counts once. Self-transitions are excluded.
inline ODMatrix od_matrix(const Occupancy& occ, const BinWindow& window = {}) {
  if (!occ.linkable) {
    throw Error(ErrorCode::kUnlinkableInput,
                "origin-destination flows need linked trajectories; "
                "reconstruct de-linked records first");
  }
  ODMatrix od;
  for (const auto& cells : occ.entities) {
    std::size_t prev_begin = 0;
    std::size_t prev_end = 0;
    std::size_t i = 0;
    while (i < cells.size() && !window.contains(cells[i].first)) ++i;
    while (i < cells.size()) {
      const std::int64_t bin = cells[i].first;
      std::size_t j = i;
      while (j < cells.size() && cells[j].first == bin) ++j;
      for (std::size_t a = prev_begin; a < prev_end; ++a) {
        for (std::size_t c = i; c < j; ++c) {
          if (cells[a].second != cells[c].second) {
            ++od.counts[{cells[a].second, cells[c].second}];
          }
        }
      }
      prev_begin = i;
      prev_end = j;
      i = j;
      if (i < cells.size() && !window.contains(cells[i].first)) break;
    }
  }
  return od;
}

inline ODMatrix od_matrix(const std::vector<Trace>& traces, const ZoneGrid& grid,
                          const TemporalResolution& temporal,
                          const BinWindow& window = {}) {
  return od_matrix(OccupancyFromTraces(traces, grid, temporal), window);
}

// 1 - |estimated - truth|_1 / |truth|_1, clamped to [0, 1]. Inputs must be
// non-negative.
inline double similarity(std::span<const double> estimated,
                         std::span<const double> truth) {
  if (estimated.size() != truth.size()) {
    throw Error(ErrorCode::kShapeMismatch,
                "similarity inputs differ in size: " +
                    std::to_string(estimated.size()) + " vs " +
                    std::to_string(truth.size()));
  }
  double l1 = 0.0;
  double mass = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (estimated[i] < 0.0 || truth[i] < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "similarity inputs must be >= 0");
    }
    l1 += std::abs(estimated[i] - truth[i]);
    mass += truth[i];
  }
  if (mass == 0.0) return l1 == 0.0 ? 1.0 : 0.0;
  return std::clamp(1.0 - l1 / mass, 0.0, 1.0);
}

// Sparse form over the union of both supports.
template <typename Key, typename Value>
double similarity(const std::map<Key, Value>& estimated,
                  const std::map<Key, Value>& truth) {
  std::vector<double> e;
  std::vector<double> t;
  auto ei = estimated.begin();
  auto ti = truth.begin();
  while (ei != estimated.end() || ti != truth.end()) {
    if (ti == truth.end() || (ei != estimated.end() && ei->first < ti->first)) {
      e.push_back(static_cast<double>(ei->second));
      t.push_back(0.0);
      ++ei;
    } else if (ei == estimated.end() || ti->first < ei->first) {
      e.push_back(0.0);
      t.push_back(static_cast<double>(ti->second));
      ++ti;
    } else {
      e.push_back(static_cast<double>(ei->second));
      t.push_back(static_cast<double>(ti->second));
      ++ei;
      ++ti;
    }
  }
  return similarity(std::span<const double>(e), std::span<const double>(t));
}

// OD similarity on trip shares, so that populations of different size
// (users versus reconstructed candidates) compare on the same scale.
inline double od_similarity(const ODMatrix& estimated, const ODMatrix& truth) {
  const auto shares = [](const ODMatrix& od) {
    std::map<std::pair<ZoneId, ZoneId>, double> out;
    const double total = static_cast<double>(od.total());
    if (total == 0.0) return out;
    for (const auto& [k, n] : od.counts) out.emplace(k, static_cast<double>(n) / total);
    return out;
  };
  return similarity(shares(estimated), shares(truth));
}

// Truth home of every user expressed on `grid`, which must be the truth grid
// or coarser and nested with it.
inline std::map<std::string, ZoneId> TruthHomesOn(const GroundTruth& truth,
                                                  const ZoneGrid& grid) {
  if (!(truth.grid == grid) && !truth.grid.nests_into(grid)) {
    throw Error(ErrorCode::kShapeMismatch,
                "evaluation grid must equal or coarsen the truth grid");
  }
  std::map<std::string, ZoneId> out;
  for (const UserTruth& u : truth.users) {
    out.emplace(u.user_id,
                FormatZoneId(truth.grid.coarsen(truth.grid.cell_of(u.home_zone), grid)));
  }
  return out;
}

// Fraction of truth users whose inferred home (keyed by user id) equals the
// truth home on `grid`. Users without an inference count as misses.
inline double home_inference_accuracy(
    const std::map<std::string, ZoneId>& inferred, const GroundTruth& truth,
    const ZoneGrid& grid) {
  if (truth.users.empty()) return 0.0;
  const auto homes = TruthHomesOn(truth, grid);
  std::size_t hits = 0;
  for (const auto& [user, home] : homes) {
    const auto it = inferred.find(user);
    if (it != inferred.end() && it->second == home) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(homes.size());
}

inline double home_inference_accuracy(const std::vector<Trace>& traces,
                                      const ZoneGrid& grid,
                                      const GroundTruth& truth,
                                      const NightWindow& night = {},
                                      int threads = 1) {
  const std::vector<ZoneId> homes = InferHomes(traces, grid, night, threads);
  std::map<std::string, ZoneId> inferred;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    inferred.emplace(traces[i].user_id(), homes[i]);
  }
  return home_inference_accuracy(inferred, truth, grid);
}

inline double home_inference_accuracy(const std::vector<CoarsePing>& rows,
                                      const ZoneGrid& grid,
                                      const TemporalResolution& temporal,
                                      const GroundTruth& truth,
                                      const NightWindow& night = {}) {
  std::map<std::string, ZoneId> inferred;
  for (const auto& [user, user_rows] : GroupLevel1(rows)) {
    inferred.emplace(user, infer_home(user_rows, temporal, night));
  }
  return home_inference_accuracy(inferred, truth, grid);
}

struct UtilityWeights {
  double density = 0.25;
  double od = 0.35;
  double home = 0.20;
  double foot_traffic = 0.20;

  void Validate() const {
    for (double w : {density, od, home, foot_traffic}) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw Error(ErrorCode::kBadWeights, "utility weights must be non-negative");
      }
    }
    const double sum = density + od + home + foot_traffic;
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(ErrorCode::kBadWeights,
                  "utility weights must sum to 1, got " + std::to_string(sum));
    }
  }
};

struct UtilityMetrics {
  double density_similarity = 0.0;
  double od_similarity = 0.0;
  double home_inference_accuracy = 0.0;
  double foot_traffic_similarity = 0.0;
};

struct UtilityReport {
  double density_similarity = 0.0;
  double od_similarity = 0.0;
  double home_inference_accuracy = 0.0;
  double foot_traffic_similarity = 0.0;
  double composite = 0.0;
  UtilityWeights weights;
  // Set when flows and foot traffic were scored on reconstructed candidates,
  // so the numbers also depend on the quality of the reconstruction.
  bool scored_on_reconstruction = false;
};

inline UtilityReport utility_score(const UtilityMetrics& m,
                                   const UtilityWeights& w = {}) {
  w.Validate();
  for (double v : {m.density_similarity, m.od_similarity, m.home_inference_accuracy,
                   m.foot_traffic_similarity}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, "utility metrics must lie in [0, 1]");
    }
  }
  UtilityReport r;
  r.density_similarity = m.density_similarity;
  r.od_similarity = m.od_similarity;
  r.home_inference_accuracy = m.home_inference_accuracy;
  r.foot_traffic_similarity = m.foot_traffic_similarity;
  r.weights = w;
  r.composite = w.density * m.density_similarity + w.od * m.od_similarity +
                w.home * m.home_inference_accuracy +
                w.foot_traffic * m.foot_traffic_similarity;
  r.composite = std::clamp(r.composite, 0.0, 1.0);
  return r;
}

inline constexpr std::array<std::string_view, 5> kUtilityColumns = {
    "metric", "level", "spatial_cell_deg", "temporal_s", "value"};
inline constexpr std::array<std::string_view, 3> kODColumns = {"from_zone", "to_zone",
                                                               "count"};

inline std::string FormatUtilityReport(const UtilityReport& r, Level level,
                                       double cell_deg, std::int64_t temporal_s) {
  std::string out = csv::HeaderLine(kUtilityColumns) + "\n";
  const std::string suffix = "," + std::to_string(LevelNumber(level)) + "," +
                             csv::FormatFixed(cell_deg) + "," +
                             std::to_string(temporal_s) + ",";
  const std::pair<std::string_view, double> rows[] = {
      {"density_similarity", r.density_similarity},
      {"od_similarity", r.od_similarity},
      {"home_inference_accuracy", r.home_inference_accuracy},
      {"foot_traffic_similarity", r.foot_traffic_similarity},
      {"composite", r.composite},
      {"weight_density", r.weights.density},
      {"weight_od", r.weights.od},
      {"weight_home", r.weights.home},
      {"weight_foot_traffic", r.weights.foot_traffic},
      {"scored_on_reconstruction", r.scored_on_reconstruction ? 1.0 : 0.0},
  };
  for (const auto& [name, value] : rows) {
    out += name;
    out += suffix;
    out += csv::FormatFixed(value);
    out += '\n';
  }
  return out;
}

inline std::string FormatOD(const ODMatrix& od) {
  std::string out = csv::HeaderLine(kODColumns) + "\n";
  for (const auto& [k, n] : od.counts) {
    out += k.first.str() + "," + k.second.str() + "," + std::to_string(n) + "\n";
  }
  return out;
}

}  // namespace geotrace
