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

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "geotrace/error.hpp"

namespace geotrace {

inline constexpr double kEarthRadiusMeters = 6'371'000.0;
inline constexpr std::int64_t kSecondsPerHour = 3600;
inline constexpr std::int64_t kSecondsPerDay = 86400;

// WGS84 degrees on a spherical earth. lat in [-90, 90], lon in [-180, 180).
class GeoPoint {
 public:
  constexpr GeoPoint() = default;
  GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {
    if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 ||
        lat > 90.0 || lon < -180.0 || lon >= 180.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "coordinate out of range: (" + std::to_string(lat) + ", " +
                      std::to_string(lon) + ")");
    }
  }

  constexpr double lat() const noexcept { return lat_; }
  constexpr double lon() const noexcept { return lon_; }

  friend constexpr bool operator==(const GeoPoint&, const GeoPoint&) = default;
  friend constexpr auto operator<=>(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_ = 0.0;
  double lon_ = 0.0;
};

// Integer seconds since the Unix epoch, UTC.
struct Timestamp {
  std::int64_t seconds = 0;

  static Timestamp checked(std::int64_t s) {
    if (s < 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "negative timestamp: " + std::to_string(s));
    }
    return Timestamp{s};
  }

  // Hour of day in [0, 24), UTC.
  constexpr int hour_of_day() const noexcept {
    return static_cast<int>((seconds % kSecondsPerDay) / kSecondsPerHour);
  }

  friend constexpr bool operator==(Timestamp, Timestamp) = default;
  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;
};

class TemporalResolution {
 public:
  explicit TemporalResolution(std::int64_t bin_seconds)
      : bin_seconds_(bin_seconds) {
    if (bin_seconds <= 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bin_seconds must be positive, got " +
                      std::to_string(bin_seconds));
    }
  }

  std::int64_t bin_seconds() const noexcept { return bin_seconds_; }

  // Hour of day at the midpoint of `bin`. Used when only the bin survives.
  int midpoint_hour(std::int64_t bin) const noexcept {
    const std::int64_t mid = bin * bin_seconds_ + bin_seconds_ / 2;
    return Timestamp{mid}.hour_of_day();
  }

  friend bool operator==(const TemporalResolution&,
                         const TemporalResolution&) = default;

 private:
  std::int64_t bin_seconds_;
};

inline double DegToRad(double deg) { return deg * std::numbers::pi / 180.0; }

// Great-circle distance in meters.
inline double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = DegToRad(a.lat());
  const double phi2 = DegToRad(b.lat());
  const double dphi = phi2 - phi1;
  const double dlambda = DegToRad(b.lon() - a.lon());
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusMeters * std::asin(std::sqrt(std::min(1.0, h)));
}

inline std::int64_t time_bin(Timestamp t, const TemporalResolution& res) {
  // t >= 0, so truncating division is floor.
  return t.seconds / res.bin_seconds();
}

struct TimedPoint {
  GeoPoint point;
  Timestamp t;
};

// Meters per second between two fixes. Throws ZeroDuration when the clock
// does not advance.
inline double speed_between(const TimedPoint& from, const TimedPoint& to) {
  const std::int64_t dt = to.t.seconds - from.t.seconds;
  if (dt == 0) {
    throw Error(ErrorCode::kZeroDuration, "speed over zero duration");
  }
  if (dt < 0) {
    throw Error(ErrorCode::kInvalidArgument, "fixes out of time order");
  }
  return haversine_distance(from.point, to.point) / static_cast<double>(dt);
}

enum class TravelMode { kStationary, kWalk, kVehicle };

inline std::string_view TravelModeName(TravelMode m) {
  switch (m) {
    case TravelMode::kStationary: return "stationary";
    case TravelMode::kWalk: return "walk";
    case TravelMode::kVehicle: return "vehicle";
  }
  return "unknown";
}

struct ModeThresholds {
  double stationary_below = 0.3;  // m/s
  double walk_below = 2.5;        // m/s
};

inline TravelMode classify_mode(double speed_mps,
                                const ModeThresholds& th = {}) {
  if (speed_mps < th.stationary_below) return TravelMode::kStationary;
  if (speed_mps < th.walk_below) return TravelMode::kWalk;
  return TravelMode::kVehicle;
}

}  // namespace geotrace
