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

// Risk report and reconstruction dump CSVs, plus level detection by header.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geotrace/csv.hpp"
#include "geotrace/reconstruct.hpp"
#include "geotrace/records.hpp"

namespace geotrace {

inline constexpr std::array<std::string_view, 6> kRiskColumns = {
    "metric", "level", "spatial_cell_deg", "temporal_s", "p", "value"};
inline constexpr std::array<std::string_view, 3> kReconstructionColumns = {
    "candidate_id", "zone", "time_bin"};

struct RiskRow {
  std::string metric;
  Level level = Level::kRaw;
  double cell_deg = 0.0;
  std::int64_t temporal_s = 0;
  std::optional<int> p;  // empty for metrics without a point count
  double value = 0.0;
};

inline std::string FormatRiskReport(const std::vector<RiskRow>& rows) {
  std::string out = csv::HeaderLine(kRiskColumns) + "\n";
  for (const RiskRow& r : rows) {
    out += r.metric + "," + std::to_string(LevelNumber(r.level)) + "," +
           csv::FormatFixed(r.cell_deg) + "," + std::to_string(r.temporal_s) + "," +
           (r.p ? std::to_string(*r.p) : std::string()) + "," +
           csv::FormatFixed(r.value) + "\n";
  }
  return out;
}

// One row per candidate step, candidates in reconstruction order.
inline std::string FormatReconstruction(const Reconstruction& recon) {
  std::string out = csv::HeaderLine(kReconstructionColumns) + "\n";
  for (const Candidate& c : recon.candidates) {
    for (const CandidateStep& s : c.steps) {
      out += c.id + "," + s.zone.str() + "," + std::to_string(s.time_bin) + "\n";
    }
  }
  return out;
}

// Level of a CSV from its header line; Level 0 is the raw ping file.
inline std::optional<Level> DetectLevel(std::string_view header) {
  const auto is = [&](auto columns) { return header == csv::HeaderLine(columns); };
  if (is(kPingColumns)) return Level::kRaw;
  if (is(kLevel1Columns)) return Level::kCoarse;
  if (is(kLevel2Columns)) return Level::kAggregated;
  if (is(kLevel3Columns)) return Level::kCoarseAggregated;
  return std::nullopt;
}

}  // namespace geotrace
