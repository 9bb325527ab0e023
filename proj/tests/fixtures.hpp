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

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "geotrace/geotrace.hpp"

namespace geotrace::testing {

// Fix as (lat, lon, t).
using Fix = std::tuple<double, double, std::int64_t>;

inline Trace MakeTrace(const std::string& user, std::initializer_list<Fix> fixes) {
  std::vector<TimedPoint> pts;
  for (const auto& [lat, lon, t] : fixes) {
    pts.push_back(TimedPoint{GeoPoint(lat, lon), Timestamp::checked(t)});
  }
  return Trace(user, std::move(pts));
}

// 10 x 10 grid of 0.01 deg cells at (41.80, -72.30).
inline ZoneGrid SmallGrid() { return ZoneGrid(GeoPoint(41.80, -72.30), 0.01, 10, 10); }

inline Region SmallRegion() { return Region{GeoPoint(41.80, -72.30), 0.16, 0.16}; }

// Center of cell (row, col) of SmallGrid.
inline GeoPoint CellCenter(std::int64_t row, std::int64_t col) {
  return SmallGrid().centroid(CellIndex{row, col});
}

inline Trace CellTrace(const std::string& user,
                       std::initializer_list<std::tuple<std::int64_t, std::int64_t, std::int64_t>>
                           visits) {
  std::vector<TimedPoint> pts;
  for (const auto& [row, col, t] : visits) {
    pts.push_back(TimedPoint{CellCenter(row, col), Timestamp::checked(t)});
  }
  return Trace(user, std::move(pts));
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("geotrace_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace geotrace::testing
