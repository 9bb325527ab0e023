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

// Risk-utility sweep over aggregation rungs.
//
// Risk is unicity for the pseudonymous levels (0, 1) and per-step
// reconstruction accuracy for the de-linked levels (2, 3). Utility is the
// composite of the task metrics, each scored against the raw traces
// discretized at the rung's own grid and temporal resolution. Level 0 has
// no grid of its own; its risk uses the native point precision and its
// utility uses the finest grid among the other rungs.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "geotrace/aggregate.hpp"
#include "geotrace/csv.hpp"
#include "geotrace/error.hpp"
#include "geotrace/geo.hpp"
#include "geotrace/random.hpp"
#include "geotrace/reconstruct.hpp"
#include "geotrace/records.hpp"
#include "geotrace/synth.hpp"
#include "geotrace/trace.hpp"
#include "geotrace/unicity.hpp"
#include "geotrace/utility.hpp"
#include "geotrace/zone.hpp"

namespace geotrace {

// One aggregation setting. For Level 0 the cell and bin describe the native
// precision used to discretize raw points for the unicity attack.
struct Rung {
  Level level = Level::kRaw;
  double cell_deg = 0.0;
  std::int64_t bin_seconds = 0;

  std::string id() const {
    return "L" + std::to_string(LevelNumber(level)) + "_" + csv::FormatFixed(cell_deg) +
           "_" + std::to_string(bin_seconds);
  }
};

struct SweepConfig {
  Region region;
  std::vector<Rung> rungs;
  UnicityConfig unicity;
  UtilityWeights weights;
  std::uint64_t seed = 0;
  NightWindow night;
  ReconstructionOptions reconstruction;
  // Hand the attacker the number of residents per home zone.
  bool census_cohort_sizes = true;
  // Companion breakdown: smallest p reaching this unicity, searched up to
  // min_p_max. 0 disables the search.
  double min_p_threshold = 0.95;
  int min_p_max = 8;
  // Off only for single-level probes; a tradeoff curve needs every level.
  bool require_all_levels = true;

  void Validate() const {
    std::array<bool, 4> seen{};
    std::array<std::optional<Rung>, 4> last;
    for (const Rung& r : rungs) {
      const auto l = static_cast<std::size_t>(LevelNumber(r.level));
      if (!(r.cell_deg > 0.0) || r.bin_seconds <= 0) {
        throw Error(ErrorCode::kInvalidConfig, "rung " + r.id() + " has no resolution");
      }
      if (last[l] && (r.cell_deg < last[l]->cell_deg ||
                      r.bin_seconds < last[l]->bin_seconds)) {
        throw Error(ErrorCode::kInvalidConfig,
                    "rungs of level " + std::to_string(l) +
                        " must be ordered fine to coarse");
      }
      seen[l] = true;
      last[l] = r;
    }
    if (rungs.empty()) throw Error(ErrorCode::kInvalidConfig, "sweep has no rungs");
    for (std::size_t l = 0; l < seen.size() && require_all_levels; ++l) {
      if (!seen[l]) {
        throw Error(ErrorCode::kInvalidConfig,
                    "sweep has no rung for level " + std::to_string(l));
      }
    }
    weights.Validate();
  }
};

struct TradeoffPoint {
  std::string config_id;
  Level level = Level::kRaw;
  double cell_deg = 0.0;
  std::int64_t bin_seconds = 0;
  double risk = 0.0;
  double utility = 0.0;
};

// Everything measured on one rung.
struct RungBreakdown {
  Rung rung;
  std::string risk_metric;  // "unicity" or "reconstruction_accuracy"
  double risk = 0.0;
  std::optional<UnicityResult> unicity;
  int unicity_p = 0;
  int min_p = 0;  // 0 when not reached or not searched
  std::optional<AccuracyReport> reconstruction;
  std::size_t candidates = 0;
  std::size_t partial_candidates = 0;
  std::size_t greedy_bins = 0;
  std::size_t empty_cohorts = 0;
  double eval_cell_deg = 0.0;
  std::int64_t eval_bin_seconds = 0;
  UtilityReport utility;
};

struct SweepResult {
  std::vector<TradeoffPoint> points;      // rung order
  std::vector<RungBreakdown> breakdowns;  // aligned with points
};

namespace curve_detail {

inline constexpr std::uint64_t kUnicityStream = 0x756e6963;

// Resolution on which Level 0 utility is scored.
inline std::pair<double, std::int64_t> Level0Evaluation(const SweepConfig& cfg,
                                                        const GroundTruth& truth) {
  std::optional<double> cell;
  std::optional<std::int64_t> bin;
  for (const Rung& r : cfg.rungs) {
    if (r.level == Level::kRaw) continue;
    if (!cell || r.cell_deg < *cell) cell = r.cell_deg;
    if (!bin || r.bin_seconds < *bin) bin = r.bin_seconds;
  }
  return {cell.value_or(truth.grid.cell_deg()), bin.value_or(kSecondsPerHour)};
}

inline std::map<std::string, ZoneId> HomesByUser(const std::vector<Trace>& traces,
                                                 const std::vector<ZoneId>& homes) {
  std::map<std::string, ZoneId> out;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    out.emplace(traces[i].user_id(), homes[i]);
  }
  return out;
}

}  // namespace curve_detail

// Reference values of the task metrics: the raw traces discretized on the
// evaluation grid and temporal resolution.
struct UtilityBaseline {
  ZoneGrid grid;
  TemporalResolution temporal;
  ZoneMass density;
  ODMatrix od;
  ZoneMass foot_traffic;

  static UtilityBaseline From(const std::vector<Trace>& traces, const ZoneGrid& grid,
                              const TemporalResolution& temporal) {
    const Occupancy occ = OccupancyFromTraces(traces, grid, temporal);
    return UtilityBaseline{grid, temporal, density_map(occ), od_matrix(occ),
                           geotrace::foot_traffic(occ)};
  }
};

inline UtilityReport ScoreRaw(const std::vector<Trace>& traces,
                              const GroundTruth& truth, const UtilityBaseline& base,
                              const UtilityWeights& weights,
                              const NightWindow& night = {}, int threads = 1) {
  const Occupancy occ = OccupancyFromTraces(traces, base.grid, base.temporal);
  UtilityMetrics m;
  m.density_similarity = similarity(density_map(occ), base.density);
  m.od_similarity = od_similarity(od_matrix(occ), base.od);
  m.foot_traffic_similarity = similarity(foot_traffic(occ), base.foot_traffic);
  m.home_inference_accuracy =
      home_inference_accuracy(traces, base.grid, truth, night, threads);
  return utility_score(m, weights);
}

inline UtilityReport ScoreLevel1(const std::vector<CoarsePing>& rows,
                                 const GroundTruth& truth, const UtilityBaseline& base,
                                 const UtilityWeights& weights,
                                 const NightWindow& night = {}) {
  const Occupancy occ = OccupancyFromLevel1(rows);
  UtilityMetrics m;
  m.density_similarity = similarity(density_map(occ), base.density);
  m.od_similarity = od_similarity(od_matrix(occ), base.od);
  m.foot_traffic_similarity = similarity(foot_traffic(occ), base.foot_traffic);
  m.home_inference_accuracy =
      home_inference_accuracy(rows, base.grid, base.temporal, truth, night);
  return utility_score(m, weights);
}

// Levels 2-3: density from the published rows, flows and foot traffic from
// the reconstructed candidates, homes from the home assignment carried by the
// records (keyed by user id).
inline UtilityReport ScoreDelinked(const Occupancy& published,
                                   const Reconstruction& recon,
                                   const std::map<std::string, ZoneId>& homes,
                                   const GroundTruth& truth,
                                   const UtilityBaseline& base,
                                   const UtilityWeights& weights) {
  const Occupancy linked = OccupancyFromCandidates(recon);
  UtilityMetrics m;
  m.density_similarity = similarity(density_map(published), base.density);
  m.od_similarity = od_similarity(od_matrix(linked), base.od);
  m.foot_traffic_similarity = similarity(foot_traffic(linked), base.foot_traffic);
  m.home_inference_accuracy = home_inference_accuracy(homes, truth, base.grid);
  UtilityReport r = utility_score(m, weights);
  r.scored_on_reconstruction = true;
  return r;
}

namespace curve_detail {

inline RungBreakdown EvaluateRung(const std::vector<Trace>& traces,
                                  const GroundTruth& truth, const SweepConfig& cfg,
                                  const Rung& rung, int threads) {
  RungBreakdown b;
  b.rung = rung;
  UnicityConfig ucfg = cfg.unicity;
  ucfg.seed = DeriveSeed(cfg.seed, {kUnicityStream});

  const auto run_unicity = [&](const UserPointSets& sets) {
    b.risk_metric = "unicity";
    b.unicity = unicity(sets, ucfg, threads);
    b.unicity_p = ucfg.p;
    b.risk = b.unicity->unicity;
    if (cfg.min_p_max > 0) {
      b.min_p = MinPointsForUnicity(sets, cfg.min_p_threshold, cfg.min_p_max, ucfg,
                                    threads);
    }
  };

  if (rung.level == Level::kRaw) {
    run_unicity(PointSetsNative(traces, rung.cell_deg, rung.bin_seconds));
    const auto [cell, bin] = Level0Evaluation(cfg, truth);
    b.eval_cell_deg = cell;
    b.eval_bin_seconds = bin;
    const auto base =
        UtilityBaseline::From(traces, cfg.region.grid(cell), TemporalResolution(bin));
    b.utility = ScoreRaw(traces, truth, base, cfg.weights, cfg.night, threads);
    return b;
  }

  const ZoneGrid grid = cfg.region.grid(rung.cell_deg);
  const TemporalResolution temporal(rung.bin_seconds);
  b.eval_cell_deg = rung.cell_deg;
  b.eval_bin_seconds = rung.bin_seconds;
  AggregationConfig acfg;
  acfg.level = rung.level;
  acfg.grid = grid;
  acfg.temporal = temporal;
  acfg.night = cfg.night;
  const auto base = UtilityBaseline::From(traces, grid, temporal);

  if (rung.level == Level::kCoarse) {
    const std::vector<CoarsePing> rows = to_level1(traces, acfg, threads);
    run_unicity(PointSetsFromLevel1(rows));
    b.utility = ScoreLevel1(rows, truth, base, cfg.weights, cfg.night);
    return b;
  }

  ReconstructionOptions ropt = cfg.reconstruction;
  ropt.night = cfg.night;
  Reconstruction recon;
  Occupancy published;
  std::vector<ZoneId> homes;
  if (rung.level == Level::kAggregated) {
    Level2Output out = to_level2_with_homes(traces, acfg, threads);
    homes = std::move(out.homes);
    if (cfg.census_cohort_sizes) ropt.cohort_sizes = CohortSizes(homes);
    recon = reconstruct(out.rows, grid, temporal, ropt, threads);
    published = OccupancyFromLevel2(out.rows, grid);
  } else {
    Level3Output out = to_level3_with_homes(traces, acfg, threads);
    homes = std::move(out.homes);
    if (cfg.census_cohort_sizes) ropt.cohort_sizes = CohortSizes(homes);
    recon = reconstruct(out.rows, grid, temporal, ropt, threads);
    published = OccupancyFromLevel3(out.rows);
  }
  const AccuracyReport acc =
      reconstruction_accuracy(recon, traces, grid, temporal, cfg.night, threads);
  b.risk_metric = "reconstruction_accuracy";
  b.risk = acc.accuracy;
  b.reconstruction = acc;
  b.candidates = recon.candidates.size();
  b.partial_candidates = recon.partial_candidates;
  b.greedy_bins = recon.greedy_bins;
  b.empty_cohorts = recon.empty_cohorts;
  b.utility = ScoreDelinked(published, recon, HomesByUser(traces, homes), truth, base,
                            cfg.weights);
  return b;
}

}  // namespace curve_detail

// Runs every rung and returns one tradeoff point per rung, in rung order.
inline SweepResult sweep_detailed(const std::vector<Trace>& traces,
                                  const GroundTruth& truth, const SweepConfig& cfg,
                                  int threads = 1) {
  cfg.Validate();
  if (traces.empty()) throw Error(ErrorCode::kInvalidArgument, "no traces to sweep");
  SweepResult result;
  for (const Rung& rung : cfg.rungs) {
    RungBreakdown b;
    try {
      b = curve_detail::EvaluateRung(traces, truth, cfg, rung, threads);
    } catch (const Error& e) {
      throw Error(e.code(), "rung " + rung.id() + ": " + e.what());
    }
    result.points.push_back(TradeoffPoint{rung.id(), rung.level, rung.cell_deg,
                                          rung.bin_seconds, b.risk,
                                          b.utility.composite});
    result.breakdowns.push_back(std::move(b));
  }
  return result;
}

inline std::vector<TradeoffPoint> sweep(const std::vector<Trace>& traces,
                                        const GroundTruth& truth,
                                        const SweepConfig& cfg, int threads = 1) {
  return sweep_detailed(traces, truth, cfg, threads).points;
}

inline constexpr std::array<std::string_view, 6> kCurveColumns = {
    "config_id", "level", "spatial_cell_deg", "temporal_s", "risk", "utility"};

inline constexpr std::array<std::string_view, 25> kBreakdownColumns = {
    "config_id",         "level",
    "spatial_cell_deg",  "temporal_s",
    "risk_metric",       "risk",
    "unicity_p",         "unicity_trials",
    "unicity_stderr",    "min_p_for_threshold",
    "recon_accuracy",    "recon_precision",
    "recon_exact_trajectory_rate",
    "candidates",        "partial_candidates",
    "greedy_bins",       "empty_cohorts",
    "eval_cell_deg",     "eval_temporal_s",
    "density_similarity", "od_similarity",
    "home_inference_accuracy", "foot_traffic_similarity",
    "composite",         "scored_on_reconstruction"};

namespace curve_detail {

inline auto SortKey(Level level, double cell, std::int64_t bin) {
  return std::make_tuple(LevelNumber(level), cell, bin);
}

}  // namespace curve_detail

inline std::string FormatCurve(std::vector<TradeoffPoint> points) {
  std::stable_sort(points.begin(), points.end(),
                   [](const TradeoffPoint& a, const TradeoffPoint& b) {
                     return curve_detail::SortKey(a.level, a.cell_deg, a.bin_seconds) <
                            curve_detail::SortKey(b.level, b.cell_deg, b.bin_seconds);
                   });
  std::string out = csv::HeaderLine(kCurveColumns) + "\n";
  for (const TradeoffPoint& p : points) {
    out += p.config_id + "," + std::to_string(LevelNumber(p.level)) + "," +
           csv::FormatFixed(p.cell_deg) + "," + std::to_string(p.bin_seconds) + "," +
           csv::FormatFixed(p.risk) + "," + csv::FormatFixed(p.utility) + "\n";
  }
  return out;
}

inline void emit_curve(const std::vector<TradeoffPoint>& points,
                       const std::filesystem::path& path) {
  if (points.empty()) throw Error(ErrorCode::kInvalidArgument, "no points to emit");
  csv::AtomicWrite(path, FormatCurve(points));
}

inline std::string FormatBreakdown(std::vector<RungBreakdown> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const RungBreakdown& a, const RungBreakdown& b) {
                     return curve_detail::SortKey(a.rung.level, a.rung.cell_deg,
                                                  a.rung.bin_seconds) <
                            curve_detail::SortKey(b.rung.level, b.rung.cell_deg,
                                                  b.rung.bin_seconds);
                   });
  const auto num = [](double v) { return csv::FormatFixed(v); };
  std::string out = csv::HeaderLine(kBreakdownColumns) + "\n";
  for (const RungBreakdown& b : rows) {
    std::vector<std::string> f;
    f.push_back(b.rung.id());
    f.push_back(std::to_string(LevelNumber(b.rung.level)));
    f.push_back(num(b.rung.cell_deg));
    f.push_back(std::to_string(b.rung.bin_seconds));
    f.push_back(b.risk_metric);
    f.push_back(num(b.risk));
    f.push_back(b.unicity ? std::to_string(b.unicity_p) : "");
    f.push_back(b.unicity ? std::to_string(b.unicity->trials) : "");
    f.push_back(b.unicity ? num(b.unicity->standard_error()) : "");
    f.push_back(b.unicity ? std::to_string(b.min_p) : "");
    f.push_back(b.reconstruction ? num(b.reconstruction->accuracy) : "");
    f.push_back(b.reconstruction ? num(b.reconstruction->precision) : "");
    f.push_back(b.reconstruction ? num(b.reconstruction->exact_trajectory_rate) : "");
    f.push_back(std::to_string(b.candidates));
    f.push_back(std::to_string(b.partial_candidates));
    f.push_back(std::to_string(b.greedy_bins));
    f.push_back(std::to_string(b.empty_cohorts));
    f.push_back(num(b.eval_cell_deg));
    f.push_back(std::to_string(b.eval_bin_seconds));
    f.push_back(num(b.utility.density_similarity));
    f.push_back(num(b.utility.od_similarity));
    f.push_back(num(b.utility.home_inference_accuracy));
    f.push_back(num(b.utility.foot_traffic_similarity));
    f.push_back(num(b.utility.composite));
    f.push_back(b.utility.scored_on_reconstruction ? "1" : "0");
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (i > 0) out += ',';
      out += f[i];
    }
    out += '\n';
  }
  return out;
}

}  // namespace geotrace
