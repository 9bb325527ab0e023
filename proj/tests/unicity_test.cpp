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

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "geotrace/synth.hpp"
#include "geotrace/unicity.hpp"

namespace geotrace {
namespace {

UserPointSets MakeSets(std::vector<std::vector<PointId>> points) {
  UserPointSets s;
  PointId top = 0;
  for (std::size_t u = 0; u < points.size(); ++u) {
    std::sort(points[u].begin(), points[u].end());
    points[u].erase(std::unique(points[u].begin(), points[u].end()), points[u].end());
    for (PointId p : points[u]) top = std::max<PointId>(top, p + 1);
    s.users.push_back("u" + std::to_string(u));
  }
  s.points = std::move(points);
  s.n_distinct_points = top;
  return s;
}

struct OracleResult {
  std::vector<std::uint64_t> successes;
  std::vector<std::uint64_t> trials;
  double unicity = 0.0;
};

// Enumerates every p-subset of every eligible user by bitmask and counts the
// users containing it with std::includes.
OracleResult BruteForce(const UserPointSets& s, int p) {
  OracleResult r;
  double sum = 0.0;
  for (std::size_t u = 0; u < s.size(); ++u) {
    const auto& own = s.points[u];
    if (own.size() < static_cast<std::size_t>(p)) continue;
    std::uint64_t ok = 0, all = 0;
    for (std::uint32_t mask = 0; mask < (1u << own.size()); ++mask) {
      if (std::popcount(mask) != p) continue;
      std::vector<PointId> known;
      for (std::size_t i = 0; i < own.size(); ++i) {
        if (mask & (1u << i)) known.push_back(own[i]);
      }
      int holders = 0;
      for (const auto& other : s.points) {
        holders += std::includes(other.begin(), other.end(), known.begin(), known.end());
      }
      ++all;
      ok += holders == 1;
    }
    r.successes.push_back(ok);
    r.trials.push_back(all);
    sum += static_cast<double>(ok) / static_cast<double>(all);
  }
  r.unicity = r.successes.empty() ? 0.0 : sum / static_cast<double>(r.successes.size());
  return r;
}

UserPointSets RandomSets(std::uint64_t seed, int users, int universe) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(2, 9), pt(0, universe - 1);
  std::vector<std::vector<PointId>> pts(users);
  for (auto& v : pts) {
    const int n = size(rng);
    for (int i = 0; i < n; ++i) v.push_back(static_cast<PointId>(pt(rng)));
  }
  return MakeSets(std::move(pts));
}

TEST(Unicity, ThreeUserFixture) {
  // A:{x,y,z}, B:{x,y}, C:{x,w}; x=0 y=1 z=2 w=3.
  const UserPointSets s = MakeSets({{0, 1, 2}, {0, 1}, {0, 3}});
  UnicityConfig cfg;
  cfg.p = 2;
  cfg.exhaustive = true;
  const UnicityResult r = unicity(s, cfg);
  ASSERT_EQ(r.targets.size(), 3u);
  EXPECT_DOUBLE_EQ(r.per_target[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_target[1], 0.0);  // {x,y} is also A's
  EXPECT_DOUBLE_EQ(r.per_target[2], 1.0);
}

TEST(Unicity, SingletonPopulation) {
  UnicityConfig cfg;
  cfg.p = 1;
  cfg.seed = 1;
  EXPECT_EQ(unicity(MakeSets({{4, 5, 6}}), cfg).unicity, 1.0);
}

TEST(Unicity, TwinsAreNeverUnique) {
  const UserPointSets s = MakeSets({{1, 2, 3, 4}, {1, 2, 3, 4}});
  for (int p = 1; p <= 4; ++p) {
    UnicityConfig cfg;
    cfg.p = p;
    cfg.seed = 3;
    EXPECT_EQ(unicity(s, cfg).unicity, 0.0) << p;
    cfg.exhaustive = true;
    EXPECT_EQ(unicity(s, cfg).unicity, 0.0) << p;
  }
}

TEST(Unicity, InsufficientPoints) {
  UnicityConfig cfg;
  cfg.p = 5;
  try {
    unicity(MakeSets({{1, 2}, {3}}), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientPoints);
  }
  cfg.p = 0;
  EXPECT_THROW(unicity(MakeSets({{1}}), cfg), Error);
}

TEST(Unicity, ExhaustiveMatchesBruteForce) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const UserPointSets s = RandomSets(seed, 20 + 15 * static_cast<int>(seed), 30);
    for (int p = 1; p <= 3; ++p) {
      UnicityConfig cfg;
      cfg.p = p;
      cfg.exhaustive = true;
      const UnicityResult got = unicity(s, cfg, 3);
      const OracleResult want = BruteForce(s, p);
      ASSERT_EQ(got.per_target.size(), want.successes.size());
      std::uint64_t ok = 0, all = 0;
      for (std::size_t k = 0; k < want.successes.size(); ++k) {
        EXPECT_EQ(got.per_target[k], static_cast<double>(want.successes[k]) /
                                         static_cast<double>(want.trials[k]));
        ok += want.successes[k];
        all += want.trials[k];
      }
      EXPECT_EQ(got.successes, ok);
      EXPECT_EQ(got.trials, all);
      EXPECT_DOUBLE_EQ(got.unicity, want.unicity) << "seed " << seed << " p " << p;
    }
  }
}

TEST(Unicity, SamplingApproachesExhaustive) {
  const UserPointSets s = RandomSets(99, 80, 25);
  UnicityConfig cfg;
  cfg.p = 2;
  cfg.exhaustive = true;
  const double exact = unicity(s, cfg).unicity;
  cfg.exhaustive = false;
  cfg.trials_per_target = 400;
  cfg.seed = 5;
  const UnicityResult est = unicity(s, cfg);
  EXPECT_NEAR(est.unicity, exact, 4 * est.standard_error() + 1e-9);
}

TEST(Unicity, SeededAndThreadIndependent) {
  const UserPointSets s = RandomSets(7, 90, 40);
  UnicityConfig cfg;
  cfg.p = 3;
  cfg.seed = 11;
  cfg.n_targets = 40;
  const UnicityResult a = unicity(s, cfg, 1);
  const UnicityResult b = unicity(s, cfg, 4);
  EXPECT_EQ(a.targets, b.targets);
  EXPECT_EQ(a.per_target, b.per_target);
  EXPECT_EQ(a.unicity, b.unicity);
  EXPECT_EQ(a.n_targets, 40u);
}

TEST(Unicity, NonDecreasingInP) {
  // Every user has at least 6 points, so targets coincide for p <= 6.
  std::mt19937_64 rng(4);
  std::vector<std::vector<PointId>> pts(70);
  for (auto& v : pts) {
    while (v.size() < 6) {
      v.push_back(static_cast<PointId>(rng() % 20));
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    }
  }
  const UserPointSets s = MakeSets(pts);
  double prev = -1.0;
  for (int p = 1; p <= 6; ++p) {
    UnicityConfig cfg;
    cfg.p = p;
    cfg.seed = 8;
    const double u = unicity(s, cfg).unicity;
    EXPECT_GE(u, prev) << p;
    prev = u;
  }
}

TEST(Unicity, MinPointsForThreshold) {
  const UserPointSets s = MakeSets({{0, 1, 2}, {0, 1}, {0, 3}});
  UnicityConfig cfg;
  cfg.exhaustive = true;
  // p=1: A 1/3 (z), B 0, C 1/2 (w) -> 5/18; p=2: (2/3 + 0 + 1) / 3 = 5/9.
  EXPECT_EQ(MinPointsForUnicity(s, 0.5, 3, cfg), 2);
  // p=3: only A is eligible and its set is unique.
  EXPECT_EQ(MinPointsForUnicity(s, 0.9, 3, cfg), 3);
  EXPECT_EQ(MinPointsForUnicity(s, 0.9, 2, cfg), 0);
}

TEST(Unicity, CoarsestRungIsZero) {
  PopulationConfig pc;
  pc.n_users = 12;
  pc.n_days = 2;
  pc.seed = 1;
  const Population pop = generate_population(pc);
  const Region one{GeoPoint(41.5, -72.8), 0.64, 0.64};
  const UserPointSets s =
      PointSetsFromTraces(pop.traces, one.grid(0.64), TemporalResolution(30 * 86400));
  UnicityConfig cfg;
  cfg.p = 1;
  cfg.seed = 2;
  EXPECT_EQ(unicity(s, cfg).unicity, 0.0);
}

TEST(PointSets, NativeAndLevel1Views) {
  const Trace a = testing::MakeTrace("a", {{41.80001, -72.29999, 10}, {41.80004, -72.29996, 50}});
  const Trace b = testing::MakeTrace("b", {{41.80021, -72.29999, 10}});
  // 1e-4 deg x 60 s: a's two fixes share one native point.
  const UserPointSets n = PointSetsNative({a, b}, 1e-4, 60);
  EXPECT_EQ(n.points[0].size(), 1u);
  EXPECT_NE(n.points[0], n.points[1]);
  const UserPointSets l = PointSetsFromTraces({a, b}, testing::SmallGrid(), TemporalResolution(3600));
  EXPECT_EQ(l.points[0], l.points[1]);
  const std::vector<CoarsePing> rows = {{"a", ZoneId("r0_c0"), 0}, {"b", ZoneId("r0_c0"), 0}};
  const UserPointSets r = PointSetsFromLevel1(rows);
  EXPECT_EQ(r.points[0], r.points[1]);
}

TEST(Decay, RecoversPowerLaw) {
  std::vector<DecayRung> rungs;
  for (double cell : {0.0025, 0.01, 0.04}) {
    for (std::int64_t bin : {3600, 21600}) {
      DecayRung r{cell, bin, {}};
      const double factor = (cell / 0.0025) * (static_cast<double>(bin) / 3600.0);
      r.result.unicity = 0.9 * std::pow(factor, -0.1);
      rungs.push_back(r);
    }
  }
  EXPECT_NEAR(FitDecayExponent(rungs), 0.1, 1e-12);
}

TEST(Decay, DegenerateFits) {
  std::vector<DecayRung> one{{0.01, 3600, {}}};
  one[0].result.unicity = 0.5;
  EXPECT_THROW(FitDecayExponent(one), Error);
  std::vector<DecayRung> zeros{{0.01, 3600, {}}, {0.04, 3600, {}}};
  try {
    FitDecayExponent(zeros);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateFit);
  }
}

TEST(Decay, TableOnSmallPopulation) {
  PopulationConfig pc;
  pc.n_users = 60;
  pc.n_days = 3;
  pc.seed = 6;
  const Population pop = generate_population(pc);
  const Region region{GeoPoint(41.5, -72.8), 0.64, 0.64};
  UnicityConfig cfg;
  cfg.p = 2;
  cfg.seed = 1;
  const DecayTable t = unicity_decay(pop.traces, region, {0.0025, 0.04, 0.16},
                                     {3600, 86400}, cfg);
  EXPECT_EQ(t.rungs.size(), 6u);
  EXPECT_GT(t.decay_exponent, 0.0);
  EXPECT_GE(t.at(0, 0).result.unicity, t.at(2, 1).result.unicity);
  EXPECT_THROW(unicity_decay(pop.traces, region, {0.04, 0.01}, {3600}, cfg), Error);
}


// Exhaustive aligned ladder against a direct oracle: every pair of a user's
// finest-rung points, coarsened through the fixes that produced them.
TEST(Decay, AlignedMatchesPairOracle) {
  PopulationConfig pc;
  pc.n_users = 20;
  pc.n_days = 2;
  pc.seed = 9;
  const Population pop = generate_population(pc);
  const Region region{GeoPoint(41.5, -72.8), 0.64, 0.64};
  UnicityConfig cfg;
  cfg.p = 2;
  cfg.exhaustive = true;
  const std::vector<double> cells{0.04, 0.16};
  const std::vector<std::int64_t> bins{6 * 3600, 12 * 3600};
  const DecayTable t = unicity_decay(pop.traces, region, cells, bins, cfg);

  using Key = std::pair<std::string, std::int64_t>;
  const ZoneGrid fine = region.grid(cells[0]);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = 0; j < bins.size(); ++j) {
      const ZoneGrid coarse = region.grid(cells[i]);
      std::map<Key, Key> up;
      std::vector<std::set<Key>> fine_sets, coarse_sets;
      for (const Trace& tr : pop.traces) {
        std::set<Key> f, c;
        for (const TimedPoint& x : tr.fixes()) {
          const Key fk{zone_of(x.point, fine).str(), x.t.seconds / bins[0]};
          const Key ck{zone_of(x.point, coarse).str(), x.t.seconds / bins[j]};
          up[fk] = ck;
          f.insert(fk);
          c.insert(ck);
        }
        fine_sets.push_back(f);
        coarse_sets.push_back(c);
      }
      double sum = 0.0;
      int targets = 0;
      for (std::size_t u = 0; u < fine_sets.size(); ++u) {
        const std::vector<Key> own(fine_sets[u].begin(), fine_sets[u].end());
        if (own.size() < 2) continue;
        int ok = 0, all = 0;
        for (std::size_t a = 0; a < own.size(); ++a) {
          for (std::size_t b = a + 1; b < own.size(); ++b) {
            int holders = 0;
            for (const auto& other : coarse_sets) {
              holders += other.count(up.at(own[a])) && other.count(up.at(own[b]));
            }
            ++all;
            ok += holders == 1;
          }
        }
        sum += static_cast<double>(ok) / all;
        ++targets;
      }
      EXPECT_DOUBLE_EQ(t.at(i, j).result.unicity, sum / targets) << i << "," << j;
    }
  }
}

TEST(Decay, AlignedLadderNeverRises) {
  PopulationConfig pc;
  pc.n_users = 80;
  pc.n_days = 4;
  pc.seed = 3;
  const Population pop = generate_population(pc);
  const Region region{GeoPoint(41.5, -72.8), 0.64, 0.64};
  UnicityConfig cfg;
  cfg.p = 3;
  cfg.trials_per_target = 20;
  cfg.seed = 4;
  const std::vector<double> cells{0.0025, 0.01, 0.04, 0.16};
  const std::vector<std::int64_t> bins{3600, 6 * 3600, 12 * 3600, 86400};
  const DecayTable t = unicity_decay(pop.traces, region, cells, bins, cfg);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (std::size_t j = 0; j < bins.size(); ++j) {
      if (i + 1 < cells.size()) {
        EXPECT_LE(t.at(i + 1, j).result.unicity, t.at(i, j).result.unicity);
      }
      if (j + 1 < bins.size()) {
        EXPECT_LE(t.at(i, j + 1).result.unicity, t.at(i, j).result.unicity);
      }
    }
  }
  // The finest rung is plain unicity on that rung's point sets.
  const auto sets = PointSetsFromTraces(pop.traces, region.grid(0.0025), TemporalResolution(3600));
  EXPECT_EQ(t.at(0, 0).result.unicity, unicity(sets, cfg).unicity);
  const DecayTable ind = unicity_decay(pop.traces, region, cells, bins, cfg, 1,
                                       LadderSampling::kIndependent);
  EXPECT_EQ(ind.at(0, 0).result.unicity, t.at(0, 0).result.unicity);
  EXPECT_EQ(ind.at(2, 3).result.unicity,
            unicity(PointSetsFromTraces(pop.traces, region.grid(0.04), TemporalResolution(86400)),
                    cfg)
                .unicity);
}

TEST(Decay, AlignedLadderMustNest) {
  PopulationConfig pc;
  pc.n_users = 5;
  pc.n_days = 1;
  const Population pop = generate_population(pc);
  const Region region{GeoPoint(41.5, -72.8), 0.64, 0.64};
  UnicityConfig cfg;
  cfg.p = 1;
  EXPECT_THROW(unicity_decay(pop.traces, region, {0.01}, {3600, 5400}, cfg), Error);
  EXPECT_NO_THROW(unicity_decay(pop.traces, region, {0.01}, {3600, 5400}, cfg, 1,
                                LadderSampling::kIndependent));
}

}  // namespace
}  // namespace geotrace
