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

#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "geotrace/config.hpp"

namespace geotrace {
namespace {

std::string ErrorOf(std::string_view text) {
  try {
    const KeyValueConfig kv = KeyValueConfig::Parse(text, "test.conf");
    CheckKnownKeys(kv);
    SweepFromConfig(kv);
    PopulationFromConfig(kv);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigParse) << e.what();
    return e.what();
  }
  return "";
}

TEST(Config, ParsesValuesAndComments) {
  const KeyValueConfig kv = KeyValueConfig::Parse(
      "# header\n\npopulation.users = 12   # trailing\nunicity.p=3\n"
      "reconstruct.census_cohort_sizes = false\nsweep.rungs = 0:0.0001:60\n");
  EXPECT_EQ(kv.get_int("population.users"), 12);
  EXPECT_EQ(kv.get_int("unicity.p"), 3);
  EXPECT_EQ(kv.get_bool("reconstruct.census_cohort_sizes"), false);
  EXPECT_EQ(kv.get_string("sweep.rungs"), "0:0.0001:60");
  EXPECT_FALSE(kv.get_double("population.days").has_value());
}

TEST(Config, ErrorsReportFileAndLine) {
  EXPECT_EQ(ErrorOf("population.users = 5\nthis line is wrong\n"),
            "test.conf:2: expected 'section.key = value'");
  EXPECT_EQ(ErrorOf("unicity.p = 2\n\nunicity.p = 3\n"),
            "test.conf:3: duplicate key 'unicity.p' (first on line 1)");
  EXPECT_EQ(ErrorOf("# c\npopulation.users = many\n"),
            "test.conf:2: 'population.users' is not a valid number: 'many'");
  EXPECT_EQ(ErrorOf("Population.Users = 3\n"), "test.conf:1: bad key 'Population.Users'");
  EXPECT_EQ(ErrorOf("population.userz = 3\n"), "test.conf:1: unknown key 'population.userz'");
  EXPECT_EQ(ErrorOf("population.users =\n"), "test.conf:1: empty value for 'population.users'");
  EXPECT_NE(ErrorOf("\n\n\nsweep.rungs = 0:0.0001\n").find("test.conf:4: "), std::string::npos);
  EXPECT_NE(ErrorOf("reconstruct.census_cohort_sizes = maybe\n").find("test.conf:1: "),
            std::string::npos);
  EXPECT_NE(ErrorOf("region.origin_lat = 95\n").find("test.conf:1: "), std::string::npos);
  EXPECT_NE(ErrorOf("\npopulation.cell_deg = 0.003\n").find("test.conf:2: "), std::string::npos);
}

TEST(Config, LoadUsesPathInErrors) {
  testing::TempDir dir("conf");
  {
    std::ofstream out(dir / "bad.conf");
    out << "unicity.p = 4\nunicity.p = 4\n";
  }
  try {
    KeyValueConfig::Load(dir / "bad.conf");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind((dir / "bad.conf").string() + ":2: ", 0), 0u)
        << e.what();
  }
  EXPECT_THROW(KeyValueConfig::Load(dir / "missing.conf"), Error);
}

TEST(Rungs, ParseAndFormat) {
  const auto rungs = ParseRungs(" 0:0.0001:60,1:0.0025:3600 , 3:0.16:86400");
  ASSERT_EQ(rungs.size(), 3u);
  EXPECT_EQ(rungs[1].level, Level::kCoarse);
  EXPECT_EQ(rungs[1].cell_deg, 0.0025);
  EXPECT_EQ(rungs[2].bin_seconds, 86400);
  EXPECT_EQ(FormatRungs(rungs), "0:0.0001:60, 1:0.0025:3600, 3:0.16:86400");
  EXPECT_THROW(ParseRungs("4:0.01:60"), Error);
  EXPECT_THROW(ParseRungs("1:abc:60"), Error);
}

TEST(Config, ReferenceConfigLoads) {
  const KeyValueConfig kv =
      KeyValueConfig::Load(std::string(GEOTRACE_SOURCE_DIR) + "/configs/reference.conf");
  CheckKnownKeys(kv);
  const SweepConfig sweep = SweepFromConfig(kv);
  sweep.Validate();
  EXPECT_EQ(sweep.rungs.size(), 12u);
  EXPECT_EQ(sweep.unicity.p, 4);
  EXPECT_EQ(sweep.unicity.trials_per_target, 50);
  const PopulationConfig pop = PopulationFromConfig(kv);
  EXPECT_EQ(pop.n_users, 1000);
  EXPECT_EQ(pop.n_days, 14);
  EXPECT_EQ(pop.seed, 42u);
  EXPECT_EQ(pop.grid.n_rows(), 256);
}

}  // namespace
}  // namespace geotrace
