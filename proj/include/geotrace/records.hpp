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

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "geotrace/error.hpp"
#include "geotrace/geo.hpp"
#include "geotrace/zone.hpp"

namespace geotrace {

// The four aggregation levels, from raw pings to de-linked zone visits.
enum class Level : int {
  kRaw = 0,             // user_id, lat, lon, t
  kCoarse = 1,          // user_id, zone, time_bin
  kAggregated = 2,      // home_zone, lat, lon, time_bin
  kCoarseAggregated = 3 // home_zone, visit_zone, time_bin
};

inline int LevelNumber(Level l) { return static_cast<int>(l); }

inline Level LevelFromNumber(int n) {
  if (n < 0 || n > 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "aggregation level must be 0..3, got " + std::to_string(n));
  }
  return static_cast<Level>(n);
}

// Level 1: pseudonymous, spatially and temporally coarsened.
struct CoarsePing {
  std::string user_id;
  ZoneId zone;
  std::int64_t time_bin = 0;

  friend bool operator==(const CoarsePing&, const CoarsePing&) = default;
};

// Level 2: keyed by home zone, precise location.
struct AggPing {
  ZoneId home_zone;
  GeoPoint point;
  std::int64_t time_bin = 0;

  friend bool operator==(const AggPing&, const AggPing&) = default;
};

// Level 3: keyed by home zone, coarsened location.
struct CoarseAggPing {
  ZoneId home_zone;
  ZoneId visit_zone;
  std::int64_t time_bin = 0;

  friend bool operator==(const CoarseAggPing&, const CoarseAggPing&) = default;
  friend auto operator<=>(const CoarseAggPing& a, const CoarseAggPing& b) {
    if (auto c = a.home_zone <=> b.home_zone; c != 0) return c;
    if (auto c = a.visit_zone <=> b.visit_zone; c != 0) return c;
    return a.time_bin <=> b.time_bin;
  }
};

// Column sets of each level's CSV, in file order.
inline constexpr std::array<std::string_view, 4> kPingColumns = {
    "user_id", "lat", "lon", "t"};
inline constexpr std::array<std::string_view, 3> kLevel1Columns = {
    "user_id", "zone", "time_bin"};
inline constexpr std::array<std::string_view, 4> kLevel2Columns = {
    "home_zone", "lat", "lon", "time_bin"};
inline constexpr std::array<std::string_view, 3> kLevel3Columns = {
    "home_zone", "visit_zone", "time_bin"};

}  // namespace geotrace
