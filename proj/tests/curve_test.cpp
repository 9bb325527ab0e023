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
#include <string>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "geotrace/config.hpp"
#include "geotrace/curve.hpp"

namespace geotrace {
namespace {

using testing::TempDir;

const Region kRegion{GeoPoint(41.5, -72.8), 0.64, 0.64};

Population SmallPopulation(std::uint64_t seed) {
  PopulationConfig pc;
  pc.n_users = 40;
  pc.n_days = 3;
  pc.seed = seed;
  pc.grid = kRegion.grid(0.0025);
  return generate_population(pc);
}

SweepConfig SmallSweep() {
  SweepConfig cfg;
  cfg.region = kRegion;
  cfg.seed = 4;
  cfg.unicity.p = 3;
  cfg.unicity.trials_per_target = 20;
  cfg.min_p_max = 3;
  cfg.rungs = ParseRungs(
      "0:0.0001:60, 1:0.01:3600, 1:0.04:3600, 2:0.01:3600, 2:0.04:3600, "
      "3:0.01:3600, 3:0.04:3600");
  return cfg;
}

std::size_t Lines(const std::string& s) { return std::count(s.begin(), s.end(), '\n'); }

TEST(Sweep, SingleUserSingleRung) {
  PopulationConfig pc;
  pc.n_users = 1;
  pc.n_days = 2;
  pc.seed = 3;
  const Population pop = generate_population(pc);
  SweepConfig cfg;
  cfg.region = kRegion;
  cfg.rungs = {Rung{Level::kRaw, 0.0001, 60}};
  cfg.require_all_levels = false;
  const auto points = sweep(pop.traces, pop.truth, cfg);
  ASSERT_EQ(points.size(), 1u);
  EXPECT_EQ(points[0].risk, 1.0);
  EXPECT_EQ(points[0].utility, 1.0);
  cfg.require_all_levels = true;
  try {
    sweep(pop.traces, pop.truth, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
  }
}

TEST(Sweep, RejectsUnorderedRungs) {
  SweepConfig cfg = SmallSweep();
  cfg.rungs = ParseRungs("0:0.0001:60, 1:0.04:3600, 1:0.01:3600, 2:0.01:3600, 3:0.01:3600");
  EXPECT_THROW(cfg.Validate(), Error);
  cfg = SmallSweep();
  cfg.weights = {0.5, 0.5, 0.5, 0.5};
  EXPECT_THROW(cfg.Validate(), Error);
}

TEST(Sweep, ErrorsCarryRungContext) {
  const Population pop = SmallPopulation(2);
  SweepConfig cfg = SmallSweep();
  cfg.rungs = ParseRungs("0:0.0001:60, 1:0.07:3600, 2:0.01:3600, 3:0.01:3600");
  try {
    sweep(pop.traces, pop.truth, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
    EXPECT_NE(std::string(e.what()).find("rung L1_0.07_3600"), std::string::npos) << e.what();
  }
}

TEST(Sweep, SmallPopulationProperties) {
  const Population pop = SmallPopulation(7);
  const SweepConfig cfg = SmallSweep();
  const SweepResult a = sweep_detailed(pop.traces, pop.truth, cfg, 1);
  ASSERT_EQ(a.points.size(), cfg.rungs.size());
  for (const TradeoffPoint& p : a.points) {
    EXPECT_GE(p.risk, 0.0);
    EXPECT_LE(p.risk, 1.0);
    EXPECT_GE(p.utility, 0.0);
    EXPECT_LE(p.utility, 1.0);
  }
  EXPECT_EQ(a.breakdowns[0].risk_metric, "unicity");
  EXPECT_EQ(a.breakdowns[3].risk_metric, "reconstruction_accuracy");
  EXPECT_TRUE(a.breakdowns[3].utility.scored_on_reconstruction);
  // Level 0 scored against itself at matched resolution.
  EXPECT_EQ(a.points[0].utility, 1.0);
  EXPECT_EQ(a.breakdowns[0].eval_cell_deg, 0.01);
  EXPECT_GT(a.points[0].utility, a.points[5].utility);
  // Level 1 keeps density and flows exactly.
  EXPECT_EQ(a.breakdowns[1].utility.density_similarity, 1.0);
  EXPECT_EQ(a.breakdowns[1].utility.od_similarity, 1.0);

  const SweepResult b = sweep_detailed(pop.traces, pop.truth, cfg, 4);
  EXPECT_EQ(FormatCurve(a.points), FormatCurve(b.points));
  EXPECT_EQ(FormatBreakdown(a.breakdowns), FormatBreakdown(b.breakdowns));
}

TEST(EmitCurve, OnePointTwoLines) {
  TempDir dir("curve");
  emit_curve({TradeoffPoint{"L0_0.0001_60", Level::kRaw, 0.0001, 60, 1.0, 1.0}},
             dir / "c.csv");
  const std::string text = csv::ReadFile(dir / "c.csv");
  EXPECT_EQ(text,
            "config_id,level,spatial_cell_deg,temporal_s,risk,utility\n"
            "L0_0.0001_60,0,0.0001,60,1,1\n");
  EXPECT_THROW(emit_curve({}, dir / "d.csv"), Error);
  EXPECT_THROW(emit_curve({TradeoffPoint{}}, dir / "no" / "such" / "dir.csv"), Error);
}

TEST(EmitCurve, SortedByLevelThenResolution) {
  const std::vector<TradeoffPoint> pts = {
      {"b", Level::kCoarse, 0.04, 3600, 0.2, 0.9},
      {"c", Level::kRaw, 0.0001, 60, 1.0, 1.0},
      {"a", Level::kCoarse, 0.01, 86400, 0.3, 0.9},
      {"d", Level::kCoarse, 0.01, 3600, 0.5, 0.9}};
  const std::string text = FormatCurve(pts);
  EXPECT_LT(text.find("\nc,"), text.find("\nd,"));
  EXPECT_LT(text.find("\nd,"), text.find("\na,"));
  EXPECT_LT(text.find("\na,"), text.find("\nb,"));
  EXPECT_EQ(Lines(text), 5u);
}

TEST(Breakdown, HeaderWidth) {
  const std::string text = FormatBreakdown({});
  EXPECT_EQ(std::count(text.begin(), text.end(), ','), 24);
}

TEST(Rung, Id) {
  EXPECT_EQ((Rung{Level::kAggregated, 0.04, 3600}.id()), "L2_0.04_3600");
  EXPECT_EQ((Rung{Level::kRaw, 0.0001, 60}.id()), "L0_0.0001_60");
}

}  // namespace
}  // namespace geotrace
