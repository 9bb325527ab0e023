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

// p-point unicity: how often do p spatio-temporal points drawn from a user's
// own trace single that user out of the population?
//
// Each user is reduced to a set of discrete points (zone, time bin). For a
// target and a known subset of p of its points, the anonymity set is every
// user whose set contains all p points; the trial succeeds when that set is
// the target alone. Unicity is the mean per-target success rate.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "geotrace/aggregate.hpp"
#include "geotrace/csv.hpp"
#include "geotrace/error.hpp"
#include "geotrace/geo.hpp"
#include "geotrace/parallel.hpp"
#include "geotrace/random.hpp"
#include "geotrace/records.hpp"
#include "geotrace/trace.hpp"
#include "geotrace/zone.hpp"

namespace geotrace {

using PointId = std::uint32_t;

// Per-user sets of discrete points; each inner vector is sorted and unique.
struct UserPointSets {
  std::vector<std::string> users;
  std::vector<std::vector<PointId>> points;
  std::size_t n_distinct_points = 0;

  std::size_t size() const noexcept { return users.size(); }
};

// Interns (spatial key, time bin) pairs as dense PointIds.
class PointInterner {
 public:
  PointId intern(std::int64_t space, std::int64_t bin) {
    const auto [it, inserted] =
        ids_.try_emplace(Key{space, bin}, static_cast<PointId>(ids_.size()));
    return it->second;
  }
  std::size_t size() const noexcept { return ids_.size(); }

 private:
  struct Key {
    std::int64_t space;
    std::int64_t bin;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return static_cast<std::size_t>(
          Mix64(static_cast<std::uint64_t>(k.space) * 0x9E3779B97F4A7C15ULL ^
                static_cast<std::uint64_t>(k.bin)));
    }
  };
  std::unordered_map<Key, PointId, KeyHash> ids_;
};

namespace unicity_detail {

inline void SortUnique(std::vector<PointId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace unicity_detail

// Points are (grid cell, time bin) pairs, i.e. the Level-1 view of a trace.
inline UserPointSets PointSetsFromTraces(const std::vector<Trace>& traces,
                                         const ZoneGrid& grid,
                                         const TemporalResolution& temporal) {
  UserPointSets out;
  PointInterner interner;
  out.users.reserve(traces.size());
  out.points.reserve(traces.size());
  for (const Trace& tr : traces) {
    std::vector<PointId> pts;
    pts.reserve(tr.size());
    for (const TimedPoint& f : tr.fixes()) {
      pts.push_back(interner.intern(grid.linear_index(grid.cell_of(f.point)),
                                    time_bin(f.t, temporal)));
    }
    unicity_detail::SortUnique(pts);
    out.users.push_back(tr.user_id());
    out.points.push_back(std::move(pts));
  }
  out.n_distinct_points = interner.size();
  return out;
}

// Native-precision points: coordinates floored to `cell_deg` on an unbounded
// lattice, time floored to `bin_seconds`. Used for raw (Level 0) data.
inline UserPointSets PointSetsNative(const std::vector<Trace>& traces,
                                     double cell_deg, std::int64_t bin_seconds) {
  const std::int64_t cell_nd = ToNanoDegrees(cell_deg);
  if (cell_nd <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "native cell size too small");
  }
  const TemporalResolution temporal(bin_seconds);
  UserPointSets out;
  PointInterner interner;
  for (const Trace& tr : traces) {
    std::vector<PointId> pts;
    pts.reserve(tr.size());
    for (const TimedPoint& f : tr.fixes()) {
      // Latitude index in the high half, longitude in the low half.
      const std::int64_t r = FloorDiv(ToNanoDegrees(f.point.lat()), cell_nd);
      const std::int64_t c = FloorDiv(ToNanoDegrees(f.point.lon()), cell_nd);
      pts.push_back(interner.intern(r * 4'000'000'000LL + c,
                                    time_bin(f.t, temporal)));
    }
    unicity_detail::SortUnique(pts);
    out.users.push_back(tr.user_id());
    out.points.push_back(std::move(pts));
  }
  out.n_distinct_points = interner.size();
  return out;
}

inline UserPointSets PointSetsFromLevel1(const std::vector<CoarsePing>& rows) {
  UserPointSets out;
  PointInterner interner;
  std::unordered_map<ZoneId, std::int64_t> zone_ids;
  for (const auto& [user, user_rows] : GroupLevel1(rows)) {
    std::vector<PointId> pts;
    for (const CoarsePing& r : user_rows) {
      const auto [it, _] =
          zone_ids.try_emplace(r.zone, static_cast<std::int64_t>(zone_ids.size()));
      pts.push_back(interner.intern(it->second, r.time_bin));
    }
    unicity_detail::SortUnique(pts);
    out.users.push_back(user);
    out.points.push_back(std::move(pts));
  }
  out.n_distinct_points = interner.size();
  return out;
}

struct UnicityConfig {
  int p = 4;
  std::int64_t n_targets = 0;  // 0: every eligible user
  std::int64_t trials_per_target = 50;
  std::uint64_t seed = 0;
  // Enumerate every p-subset of every eligible target instead of sampling.
  bool exhaustive = false;
  // Exhaustive mode refuses targets with more subsets than this.
  std::uint64_t max_subsets_per_target = 5'000'000;
};

struct UnicityResult {
  double unicity = 0.0;
  std::size_t n_targets = 0;
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  std::vector<std::size_t> targets;   // user indices, ascending
  std::vector<double> per_target;     // success rate, aligned with targets

  // Binomial standard error of the pooled trial fraction.
  double standard_error() const {
    if (trials == 0) return 0.0;
    return std::sqrt(unicity * (1.0 - unicity) / static_cast<double>(trials));
  }
};

// Inverted index point -> users (ascending), used to size anonymity sets.
class AnonymityIndex {
 public:
  explicit AnonymityIndex(const UserPointSets& sets)
      : postings_(sets.n_distinct_points) {
    for (std::size_t u = 0; u < sets.points.size(); ++u) {
      for (PointId pt : sets.points[u]) {
        if (pt >= postings_.size()) postings_.resize(pt + 1);
        postings_[pt].push_back(static_cast<std::uint32_t>(u));
      }
    }
  }

  // Size of the anonymity set of `known`, counting at most `cap`.
  std::size_t anonymity_set_size(std::span<const PointId> known,
                                 std::size_t cap = 2) const {
    if (known.empty()) return cap;
    std::size_t shortest = 0;
    for (std::size_t i = 1; i < known.size(); ++i) {
      if (postings_[known[i]].size() < postings_[known[shortest]].size()) {
        shortest = i;
      }
    }
    std::size_t count = 0;
    for (std::uint32_t u : postings_[known[shortest]]) {
      bool in_all = true;
      for (std::size_t i = 0; i < known.size() && in_all; ++i) {
        if (i == shortest) continue;
        const auto& list = postings_[known[i]];
        in_all = std::binary_search(list.begin(), list.end(), u);
      }
      if (in_all && ++count >= cap) return count;
    }
    return count;
  }

 private:
  std::vector<std::vector<std::uint32_t>> postings_;
};

namespace unicity_detail {

inline std::uint64_t Binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::uint64_t num = n - k + i;
    if (r > std::numeric_limits<std::uint64_t>::max() / num) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    r = r * num / i;
  }
  return r;
}

inline std::vector<std::size_t> SelectTargets(const UserPointSets& sets,
                                              const UnicityConfig& cfg) {
  std::vector<std::size_t> eligible;
  for (std::size_t u = 0; u < sets.size(); ++u) {
    if (sets.points[u].size() >= static_cast<std::size_t>(cfg.p)) {
      eligible.push_back(u);
    }
  }
  if (eligible.empty()) {
    throw Error(ErrorCode::kInsufficientPoints,
                "no user has " + std::to_string(cfg.p) + " distinct points");
  }
  if (cfg.exhaustive || cfg.n_targets == 0 ||
      static_cast<std::size_t>(cfg.n_targets) >= eligible.size()) {
    return eligible;
  }
  Rng rng = MakeRng(cfg.seed, {0x7A59E7});
  std::shuffle(eligible.begin(), eligible.end(), rng);
  eligible.resize(static_cast<std::size_t>(cfg.n_targets));
  std::sort(eligible.begin(), eligible.end());
  return eligible;
}

}  // namespace unicity_detail

namespace unicity_detail {

// Runs the trials of every eligible target of `sets`; `unique(known)` decides
// one trial. Sampling draws each trial's subset as the prefix of a partial
// Fisher-Yates shuffle from a per-target stream, so with equal seeds the
// (p+1)-point subset extends the p-point one.
template <typename UniqueFn>
UnicityResult EstimateTrials(const UserPointSets& sets, const UnicityConfig& cfg,
                             int threads, UniqueFn&& unique) {
  if (cfg.p < 1) throw Error(ErrorCode::kInvalidConfig, "p must be >= 1");
  if (cfg.n_targets < 0 ||
      static_cast<std::size_t>(cfg.n_targets) > sets.size()) {
    throw Error(ErrorCode::kInvalidConfig,
                "n_targets exceeds population size");
  }
  if (!cfg.exhaustive && cfg.trials_per_target <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "trials_per_target must be positive");
  }
  UnicityResult result;
  result.targets = SelectTargets(sets, cfg);
  result.n_targets = result.targets.size();
  const std::size_t p = static_cast<std::size_t>(cfg.p);

  struct Tally {
    std::uint64_t trials = 0;
    std::uint64_t successes = 0;
  };
  std::vector<Tally> tallies(result.targets.size());

  ParallelFor(result.targets.size(), threads, [&](std::size_t k) {
    const std::size_t u = result.targets[k];
    const std::vector<PointId>& own = sets.points[u];
    const std::size_t n = own.size();
    std::vector<PointId> known(p);
    Tally tally;
    if (cfg.exhaustive) {
      if (Binomial(n, p) > cfg.max_subsets_per_target) {
        throw Error(ErrorCode::kInvalidArgument,
                    "too many subsets for exhaustive unicity (user " +
                        sets.users[u] + ")");
      }
      std::vector<std::size_t> comb(p);
      std::iota(comb.begin(), comb.end(), 0);
      for (;;) {
        for (std::size_t i = 0; i < p; ++i) known[i] = own[comb[i]];
        ++tally.trials;
        if (unique(std::span<const PointId>(known))) ++tally.successes;
        // Next combination in lexicographic order.
        std::size_t i = p;
        while (i > 0 && comb[i - 1] == n - p + (i - 1)) --i;
        if (i == 0) break;
        ++comb[i - 1];
        for (std::size_t j = i; j < p; ++j) comb[j] = comb[j - 1] + 1;
      }
    } else {
      Rng rng = MakeRng(cfg.seed, {0x5A3F1E, static_cast<std::uint64_t>(u)});
      std::vector<std::size_t> order(n);
      for (std::int64_t t = 0; t < cfg.trials_per_target; ++t) {
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = 0; i < p; ++i) {
          const std::size_t j =
              std::uniform_int_distribution<std::size_t>(i, n - 1)(rng);
          std::swap(order[i], order[j]);
          known[i] = own[order[i]];
        }
        ++tally.trials;
        if (unique(std::span<const PointId>(known))) ++tally.successes;
      }
    }
    tallies[k] = tally;
  });

  double sum_rates = 0.0;
  result.per_target.reserve(tallies.size());
  for (const Tally& t : tallies) {
    result.trials += t.trials;
    result.successes += t.successes;
    const double rate =
        static_cast<double>(t.successes) / static_cast<double>(t.trials);
    result.per_target.push_back(rate);
    sum_rates += rate;
  }
  result.unicity = sum_rates / static_cast<double>(tallies.size());
  return result;
}

}  // namespace unicity_detail

// Estimates p-point unicity: the mean over targets of the share of trials
// whose known points are held by the target alone.
inline UnicityResult unicity(const UserPointSets& sets, const UnicityConfig& cfg,
                             int threads = 1) {
  const AnonymityIndex index(sets);
  return unicity_detail::EstimateTrials(
      sets, cfg, threads,
      [&](std::span<const PointId> known) { return index.anonymity_set_size(known) == 1; });
}

// Smallest p in [1, max_p] whose unicity reaches `threshold`, or 0 if none.
inline int MinPointsForUnicity(const UserPointSets& sets, double threshold,
                               int max_p, UnicityConfig cfg, int threads = 1) {
  for (int p = 1; p <= max_p; ++p) {
    cfg.p = p;
    try {
      if (unicity(sets, cfg, threads).unicity >= threshold) return p;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kInsufficientPoints) throw;
      return 0;
    }
  }
  return 0;
}

struct DecayRung {
  double cell_deg = 0.0;
  std::int64_t bin_seconds = 0;
  UnicityResult result;
};

struct DecayTable {
  std::vector<DecayRung> rungs;  // spatial-major: rungs[i * n_temporal + j]
  std::size_t n_spatial = 0;
  std::size_t n_temporal = 0;
  double decay_exponent = 0.0;

  const DecayRung& at(std::size_t spatial, std::size_t temporal) const {
    return rungs[spatial * n_temporal + temporal];
  }
};

// Least-squares slope of log(unicity) against log(coarsening factor), where a
// rung's factor is (cell/cell_0) * (bin/bin_0) relative to the finest rung.
// Only rungs with positive unicity take part. Returns the negated slope.
inline double FitDecayExponent(const std::vector<DecayRung>& rungs) {
  if (rungs.empty()) throw Error(ErrorCode::kDegenerateFit, "no rungs");
  double cell0 = rungs.front().cell_deg;
  std::int64_t bin0 = rungs.front().bin_seconds;
  for (const DecayRung& r : rungs) {
    cell0 = std::min(cell0, r.cell_deg);
    bin0 = std::min(bin0, r.bin_seconds);
  }
  std::vector<std::pair<double, double>> xy;
  for (const DecayRung& r : rungs) {
    if (r.result.unicity <= 0.0) continue;
    const double factor = (r.cell_deg / cell0) *
                          (static_cast<double>(r.bin_seconds) /
                           static_cast<double>(bin0));
    xy.emplace_back(std::log(factor), std::log(r.result.unicity));
  }
  if (xy.size() < 2) {
    throw Error(ErrorCode::kDegenerateFit,
                "fewer than two rungs with positive unicity");
  }
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : xy) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(xy.size());
  my /= static_cast<double>(xy.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : xy) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx <= 0.0) {
    throw Error(ErrorCode::kDegenerateFit, "rungs share one resolution");
  }
  return -(sxy / sxx);
}

// How known points relate across the rungs of a decay ladder.
enum class LadderSampling {
  // Drawn once per (target, trial) at the finest rung and coarsened onto
  // every other rung. Rungs must nest; unicity is then non-increasing.
  kAligned,
  // Drawn afresh from each rung's own point sets.
  kIndependent,
};

namespace unicity_detail {

// Finest-rung point sets with each point's (row, col, bin) on that rung.
struct FinePoints {
  UserPointSets sets;
  std::vector<std::array<std::int64_t, 3>> keys;  // indexed by PointId
};

inline FinePoints FinePointSets(const std::vector<Trace>& traces, const ZoneGrid& grid,
                                const TemporalResolution& temporal) {
  FinePoints out;
  PointInterner interner;
  for (const Trace& tr : traces) {
    std::vector<PointId> pts;
    pts.reserve(tr.size());
    for (const TimedPoint& f : tr.fixes()) {
      const CellIndex cell = grid.cell_of(f.point);
      const std::int64_t bin = time_bin(f.t, temporal);
      const PointId id = interner.intern(grid.linear_index(cell), bin);
      if (id == out.keys.size()) out.keys.push_back({cell.row, cell.col, bin});
      pts.push_back(id);
    }
    SortUnique(pts);
    out.sets.users.push_back(tr.user_id());
    out.sets.points.push_back(std::move(pts));
  }
  out.sets.n_distinct_points = interner.size();
  return out;
}

inline UnicityResult AlignedRung(const FinePoints& fine, const ZoneGrid& grid,
                                 std::int64_t cell_factor, std::int64_t bin_factor,
                                 const UnicityConfig& cfg, int threads) {
  PointInterner interner;
  std::vector<PointId> coarse(fine.keys.size());
  for (std::size_t i = 0; i < fine.keys.size(); ++i) {
    const auto& [row, col, bin] = fine.keys[i];
    coarse[i] = interner.intern(
        grid.linear_index(CellIndex{row / cell_factor, col / cell_factor}),
        bin / bin_factor);
  }
  UserPointSets sets;
  sets.users = fine.sets.users;
  sets.points.reserve(fine.sets.size());
  for (const auto& own : fine.sets.points) {
    std::vector<PointId> pts;
    pts.reserve(own.size());
    for (PointId id : own) pts.push_back(coarse[id]);
    SortUnique(pts);
    sets.points.push_back(std::move(pts));
  }
  sets.n_distinct_points = interner.size();
  const AnonymityIndex index(sets);
  return EstimateTrials(fine.sets, cfg, threads, [&](std::span<const PointId> known) {
    std::vector<PointId> mapped;
    mapped.reserve(known.size());
    for (PointId id : known) mapped.push_back(coarse[id]);
    return index.anonymity_set_size(mapped) == 1;
  });
}

}  // namespace unicity_detail

// Unicity over the spatial x temporal ladder and its power-law decay.
// Ladders must be non-empty and ordered fine to coarse.
inline DecayTable unicity_decay(const std::vector<Trace>& traces,
                                const Region& region,
                                const std::vector<double>& spatial_ladder,
                                const std::vector<std::int64_t>& temporal_ladder,
                                const UnicityConfig& cfg, int threads = 1,
                                LadderSampling sampling = LadderSampling::kAligned) {
  if (spatial_ladder.empty() || temporal_ladder.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "empty resolution ladder");
  }
  if (!std::is_sorted(spatial_ladder.begin(), spatial_ladder.end()) ||
      !std::is_sorted(temporal_ladder.begin(), temporal_ladder.end())) {
    throw Error(ErrorCode::kInvalidConfig, "ladders must run fine to coarse");
  }
  DecayTable table;
  table.n_spatial = spatial_ladder.size();
  table.n_temporal = temporal_ladder.size();
  const std::int64_t cell0 = ToNanoDegrees(spatial_ladder.front());
  const std::int64_t bin0 = temporal_ladder.front();
  std::optional<unicity_detail::FinePoints> fine;
  if (sampling == LadderSampling::kAligned) {
    for (double cell : spatial_ladder) {
      if (ToNanoDegrees(cell) % cell0 != 0) {
        throw Error(ErrorCode::kInvalidConfig,
                    "cell size " + csv::FormatFixed(cell) + " does not nest in " +
                        csv::FormatFixed(spatial_ladder.front()));
      }
    }
    for (std::int64_t bin : temporal_ladder) {
      if (bin <= 0 || bin % bin0 != 0) {
        throw Error(ErrorCode::kInvalidConfig,
                    "bin " + std::to_string(bin) + " s does not nest in " +
                        std::to_string(bin0) + " s");
      }
    }
    fine = unicity_detail::FinePointSets(traces, region.grid(spatial_ladder.front()),
                                         TemporalResolution(bin0));
  }
  for (double cell : spatial_ladder) {
    const ZoneGrid grid = region.grid(cell);
    for (std::int64_t bin : temporal_ladder) {
      UnicityResult r;
      if (fine) {
        r = unicity_detail::AlignedRung(*fine, grid, ToNanoDegrees(cell) / cell0,
                                        bin / bin0, cfg, threads);
      } else {
        r = unicity(PointSetsFromTraces(traces, grid, TemporalResolution(bin)), cfg, threads);
      }
      table.rungs.push_back(DecayRung{cell, bin, std::move(r)});
    }
  }
  table.decay_exponent = FitDecayExponent(table.rungs);
  return table;
}

}  // namespace geotrace
