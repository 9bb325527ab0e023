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

#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "geotrace/aggregate.hpp"
#include "geotrace/reconstruct.hpp"
#include "geotrace/synth.hpp"

namespace geotrace {
namespace {

using testing::CellTrace;
using testing::SmallGrid;
using testing::SmallRegion;

constexpr std::int64_t H = 3600;
using CellKey = std::pair<std::int64_t, std::string>;

std::set<CellKey> TruthCells(const Trace& t, const ZoneGrid& grid, std::int64_t bin) {
  std::set<CellKey> out;
  for (const TimedPoint& f : t.fixes()) {
    out.emplace(f.t.seconds / bin, zone_of(f.point, grid).str());
  }
  return out;
}

std::set<CellKey> CandidateCells(const Candidate& c) {
  std::set<CellKey> out;
  for (const CandidateStep& s : c.steps) out.emplace(s.time_bin, s.zone.str());
  return out;
}

AggregationConfig Config(const ZoneGrid& grid) {
  AggregationConfig cfg;
  cfg.grid = grid;
  cfg.temporal = TemporalResolution(H);
  return cfg;
}

Candidate Manual(const std::string& home, std::initializer_list<std::pair<std::int64_t, std::pair<int, int>>> steps) {
  Candidate c;
  c.id = home + "/0";
  c.home_zone = ZoneId(home);
  for (const auto& [bin, rc] : steps) {
    const CellIndex cell{rc.first, rc.second};
    c.steps.push_back(CandidateStep{bin, SmallGrid().centroid(cell), FormatZoneId(cell), true});
  }
  return c;
}

Population OneUser(std::uint64_t seed) {
  PopulationConfig pc;
  pc.n_users = 1;
  pc.n_days = 3;
  pc.seed = seed;
  return generate_population(pc);
}

TEST(Reconstruct, SingletonCohortLevel2) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Population pop = OneUser(seed);
    const ZoneGrid grid = pop.truth.grid;
    const auto l2 = to_level2_with_homes(pop.traces, Config(grid));
    for (bool census : {false, true}) {
      ReconstructionOptions opt;
      if (census) opt.cohort_sizes = CohortSizes(l2.homes);
      const Reconstruction r = reconstruct(l2.rows, grid, TemporalResolution(H), opt);
      ASSERT_EQ(r.candidates.size(), 1u) << seed;
      EXPECT_EQ(r.candidates[0].home_zone, l2.homes[0]);
      EXPECT_EQ(CandidateCells(r.candidates[0]), TruthCells(pop.traces[0], grid, H));
      const AccuracyReport acc =
          reconstruction_accuracy(r, pop.traces, grid, TemporalResolution(H));
      EXPECT_EQ(acc.accuracy, 1.0);
      EXPECT_EQ(acc.precision, 1.0);
      EXPECT_EQ(acc.exact_trajectory_rate, 1.0);
    }
  }
}

TEST(Reconstruct, SingletonCohortLevel3) {
  const Population pop = OneUser(4);
  const Region region{GeoPoint(41.5, -72.8), 0.64, 0.64};
  const ZoneGrid g = region.grid(0.01);
  const auto rows = to_level3(pop.traces, Config(g));
  const Reconstruction r = reconstruct(rows, g, TemporalResolution(H));
  ASSERT_EQ(r.candidates.size(), 1u);
  EXPECT_EQ(r.level, Level::kCoarseAggregated);
  EXPECT_EQ(CandidateCells(r.candidates[0]), TruthCells(pop.traces[0], g, H));
  EXPECT_EQ(reconstruction_accuracy(r, pop.traces, g, TemporalResolution(H)).accuracy, 1.0);
}

// Two residents of one 0.04 deg home cell whose paths stay kilometers apart.
std::vector<Trace> SeparatedPair() {
  std::vector<TimedPoint> a, b;
  for (std::int64_t day = 0; day < 2; ++day) {
    for (std::int64_t m = 0; m < 24 * 60; m += 20) {
      const std::int64_t t = day * 86400 + m * 60;
      const int hour = static_cast<int>(m / 60);
      const bool away = hour >= 9 && hour < 17;
      a.push_back({away ? GeoPoint(41.87, -72.29) : GeoPoint(41.802, -72.298), Timestamp{t}});
      b.push_back({away ? GeoPoint(41.93, -72.17) : GeoPoint(41.838, -72.262), Timestamp{t}});
    }
  }
  return {Trace("a", a), Trace("b", b)};
}

TEST(Reconstruct, SeparatedPairIsRecovered) {
  const auto traces = SeparatedPair();
  const ZoneGrid grid = SmallRegion().grid(0.04);
  const auto l2 = to_level2_with_homes(traces, Config(grid));
  ASSERT_EQ(l2.homes[0], l2.homes[1]);
  const Reconstruction r = reconstruct(l2.rows, grid, TemporalResolution(H));
  ASSERT_EQ(r.candidates.size(), 2u);
  const AccuracyReport acc = reconstruction_accuracy(r, traces, grid, TemporalResolution(H));
  EXPECT_EQ(acc.accuracy, 1.0);
  EXPECT_EQ(acc.precision, 1.0);
  const std::set<std::set<CellKey>> got{CandidateCells(r.candidates[0]),
                                        CandidateCells(r.candidates[1])};
  const std::set<std::set<CellKey>> want{TruthCells(traces[0], grid, H),
                                         TruthCells(traces[1], grid, H)};
  EXPECT_EQ(got, want);
}

TEST(Reconstruct, CandidateIdsAndOrder) {
  const auto traces = SeparatedPair();
  const ZoneGrid grid = SmallRegion().grid(0.04);
  const Reconstruction r = reconstruct(to_level2(traces, Config(grid)), grid,
                                       TemporalResolution(H));
  ASSERT_EQ(r.candidates.size(), 2u);
  EXPECT_EQ(r.candidates[0].id, "r0_c0/0");
  EXPECT_EQ(r.candidates[1].id, "r0_c0/1");
  for (const Candidate& c : r.candidates) {
    for (std::size_t i = 1; i < c.steps.size(); ++i) {
      EXPECT_LE(c.steps[i - 1].time_bin, c.steps[i].time_bin);
    }
  }
}

TEST(Reconstruct, GreedyFallbackCounted) {
  const auto traces = SeparatedPair();
  const ZoneGrid grid = SmallRegion().grid(0.04);
  ReconstructionOptions opt;
  opt.greedy_above = 1;
  const Reconstruction r = reconstruct(to_level2(traces, Config(grid)), grid,
                                       TemporalResolution(H), opt);
  EXPECT_GT(r.greedy_bins, 0u);
  EXPECT_EQ(r.candidates.size(), 2u);
}

TEST(Reconstruct, ThreadCountDoesNotMatter) {
  PopulationConfig pc;
  pc.n_users = 40;
  pc.n_days = 2;
  pc.seed = 31;
  const Population pop = generate_population(pc);
  const Region region{GeoPoint(41.5, -72.8), 0.64, 0.64};
  const ZoneGrid grid = region.grid(0.04);
  const auto rows = to_level2(pop.traces, Config(grid));
  const Reconstruction a = reconstruct(rows, grid, TemporalResolution(H), {}, 1);
  const Reconstruction b = reconstruct(rows, grid, TemporalResolution(H), {}, 4);
  ASSERT_EQ(a.candidates.size(), b.candidates.size());
  for (std::size_t i = 0; i < a.candidates.size(); ++i) {
    EXPECT_EQ(a.candidates[i].id, b.candidates[i].id);
    EXPECT_EQ(CandidateCells(a.candidates[i]), CandidateCells(b.candidates[i]));
  }
}

TEST(Accuracy, IdenticalCandidatesScoreOne) {
  const Trace a = CellTrace("a", {{1, 1, 0}, {1, 1, H}, {4, 4, 10 * H}, {1, 1, 22 * H}});
  const Trace b = CellTrace("b", {{1, 1, 60}, {6, 2, 11 * H}, {1, 1, 23 * H}});
  Reconstruction r;
  r.candidates = {Manual("r1_c1", {{0, {1, 1}}, {1, {1, 1}}, {10, {4, 4}}, {22, {1, 1}}}),
                  Manual("r1_c1", {{0, {1, 1}}, {11, {6, 2}}, {23, {1, 1}}})};
  const AccuracyReport acc =
      reconstruction_accuracy(r, {a, b}, SmallGrid(), TemporalResolution(H));
  EXPECT_EQ(acc.accuracy, 1.0);
  EXPECT_EQ(acc.precision, 1.0);
  EXPECT_EQ(acc.truth_cells, 7u);
}

TEST(Accuracy, SwapFixtureScoresHalf) {
  // a: X Y X Y, b: Y X Y X over bins 0..3 (all night hours, homes tie to
  // "r1_c1"). Candidates stay put, so each follows a for two bins and b for
  // two; either matching recovers 4 of the 8 true cells.
  const Trace a = CellTrace("a", {{1, 1, 0}, {2, 2, H}, {1, 1, 2 * H}, {2, 2, 3 * H}});
  const Trace b = CellTrace("b", {{2, 2, 0}, {1, 1, H}, {2, 2, 2 * H}, {1, 1, 3 * H}});
  Reconstruction r;
  r.candidates = {Manual("r1_c1", {{0, {1, 1}}, {1, {1, 1}}, {2, {1, 1}}, {3, {1, 1}}}),
                  Manual("r1_c1", {{0, {2, 2}}, {1, {2, 2}}, {2, {2, 2}}, {3, {2, 2}}})};
  const AccuracyReport acc =
      reconstruction_accuracy(r, {a, b}, SmallGrid(), TemporalResolution(H));
  // Enumerate both matchings by hand: (c0->a, c1->b) and (c0->b, c1->a).
  const auto overlap = [](const std::set<CellKey>& x, const std::set<CellKey>& y) {
    std::size_t n = 0;
    for (const auto& k : x) n += y.contains(k);
    return n;
  };
  const auto ta = TruthCells(a, SmallGrid(), H), tb = TruthCells(b, SmallGrid(), H);
  const auto c0 = CandidateCells(r.candidates[0]), c1 = CandidateCells(r.candidates[1]);
  EXPECT_EQ(overlap(c0, ta) + overlap(c1, tb), 4u);
  EXPECT_EQ(overlap(c0, tb) + overlap(c1, ta), 4u);
  EXPECT_EQ(acc.accuracy, 0.5);
  EXPECT_EQ(acc.precision, 0.5);
  EXPECT_EQ(acc.exact_trajectory_rate, 0.0);
}

TEST(Accuracy, EmptyCandidateSet) {
  const Trace a = CellTrace("a", {{1, 1, 0}});
  const AccuracyReport acc =
      reconstruction_accuracy(Reconstruction{}, {a}, SmallGrid(), TemporalResolution(H));
  EXPECT_EQ(acc.accuracy, 0.0);
  EXPECT_EQ(acc.precision, 0.0);
}

TEST(Accuracy, RecallCountsMissedCells) {
  const Trace a = CellTrace("a", {{1, 1, 0}, {3, 3, 5 * H}, {1, 1, 22 * H}});
  Reconstruction r;
  r.candidates = {Manual("r1_c1", {{0, {1, 1}}, {22, {1, 1}}})};
  const AccuracyReport acc =
      reconstruction_accuracy(r, {a}, SmallGrid(), TemporalResolution(H));
  EXPECT_DOUBLE_EQ(acc.accuracy, 2.0 / 3.0);
  EXPECT_EQ(acc.precision, 1.0);
  EXPECT_EQ(acc.exact_trajectory_rate, 1.0);
}

TEST(Accuracy, CandidatesFromUnknownHomeAreWrong) {
  const Trace a = CellTrace("a", {{1, 1, 0}});
  Reconstruction r;
  r.candidates = {Manual("r5_c5", {{0, {1, 1}}})};
  const AccuracyReport acc =
      reconstruction_accuracy(r, {a}, SmallGrid(), TemporalResolution(H));
  EXPECT_EQ(acc.accuracy, 0.0);
  EXPECT_EQ(acc.steps, 1u);
}

TEST(CohortSizes, CountsPerHome) {
  const auto sizes = CohortSizes({ZoneId("r1_c1"), ZoneId("r0_c2"), ZoneId("r1_c1")});
  EXPECT_EQ(sizes.at(ZoneId("r1_c1")), 2);
  EXPECT_EQ(sizes.at(ZoneId("r0_c2")), 1);
}

TEST(Residents, DistinctPlacesAtNight) {
  reconstruct_detail::Cohort c;
  c.home = ZoneId("r0_c0");
  // Bin 22 (22:00): three fixes, two within 150 m of each other.
  c.bins[22] = {{GeoPoint(41.800, -72.300), ZoneId("r0_c0")},
                {GeoPoint(41.8005, -72.300), ZoneId("r0_c0")},
                {GeoPoint(41.820, -72.300), ZoneId("r0_c0")}};
  // A busier daytime bin does not count when night bins exist.
  c.bins[12] = {{GeoPoint(41.80, -72.30), ZoneId("r0_c0")},
                {GeoPoint(41.82, -72.30), ZoneId("r0_c0")},
                {GeoPoint(41.84, -72.30), ZoneId("r0_c0")}};
  EXPECT_EQ(reconstruct_detail::EstimateResidents(c, TemporalResolution(H), {}), 2);
}

}  // namespace
}  // namespace geotrace
