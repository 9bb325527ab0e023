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

// Synthetic mobility with known ground truth.
//
// Every user has a fixed home and work anchor in distinct grid cells plus a
// handful of leisure anchors. Days follow a routine: home through the night
// window [20:00, 04:00) UTC, a commute to work on weekdays, and optional
// leisure outings chosen by exploration/preferential return. Travel between
// anchors is a straight line at constant speed. Fixes are emitted as a Poisson
// process with Gaussian positional noise and quantized to 1e-7 degrees, so a
// population survives a CSV round trip bit-for-bit.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "geotrace/csv.hpp"
#include "geotrace/error.hpp"
#include "geotrace/geo.hpp"
#include "geotrace/parallel.hpp"
#include "geotrace/random.hpp"
#include "geotrace/trace.hpp"
#include "geotrace/zone.hpp"

namespace geotrace {

struct PopulationConfig {
  std::int64_t n_users = 100;
  std::int64_t n_days = 7;
  ZoneGrid grid{GeoPoint(41.5, -72.8), 0.0025, 256, 256};
  double ping_rate = 2.0;  // mean fixes per user per hour
  double p_explore = 0.1;
  std::int64_t n_leisure = 3;
  double gps_noise_m = 20.0;
  std::uint64_t seed = 0;

  // Routine knobs. Defaults are what the reference experiments use.
  std::int64_t start_epoch = 1546819200;  // Monday 2019-01-07 00:00 UTC
  double travel_speed_mps = 10.0;
  int n_hubs = 5;
  double p_home_near_hub = 0.7;
  double p_work_near_hub = 0.85;
  double hub_spread = 0.06;  // std-dev as a fraction of the region extent
  double p_weekday_leisure = 0.4;
  double p_weekend_outing = 0.7;

  void Validate() const {
    const auto fail = [](const std::string& what) {
      throw Error(ErrorCode::kInvalidConfig, what);
    };
    if (n_users <= 0) fail("n_users must be positive");
    if (n_days <= 0) fail("n_days must be positive");
    if (!(ping_rate > 0.0) || !std::isfinite(ping_rate)) {
      fail("ping_rate must be positive");
    }
    if (!(p_explore >= 0.0 && p_explore <= 1.0)) {
      fail("p_explore must be in [0, 1]");
    }
    if (n_leisure < 0) fail("n_leisure must be non-negative");
    if (!(gps_noise_m >= 0.0) || !std::isfinite(gps_noise_m)) {
      fail("gps_noise_m must be non-negative");
    }
    if (start_epoch < 0) fail("start_epoch must be non-negative");
    if (!(travel_speed_mps > 0.0)) fail("travel_speed_mps must be positive");
    if (n_hubs <= 0) fail("n_hubs must be positive");
    if (!(hub_spread > 0.0)) fail("hub_spread must be positive");
    for (double p : {p_home_near_hub, p_work_near_hub, p_weekday_leisure,
                     p_weekend_outing}) {
      if (!(p >= 0.0 && p <= 1.0)) fail("probabilities must be in [0, 1]");
    }
    if (grid.n_cells() < 2) fail("grid needs at least two cells");
  }
};

// A dwell at an anchor, as scheduled by the generator.
struct Stay {
  ZoneId zone;
  Timestamp start;
  Timestamp end;
};

struct UserTruth {
  std::string user_id;
  ZoneId home_zone;
  ZoneId work_zone;
  std::vector<ZoneId> leisure_zones;  // initial leisure anchors
  std::vector<Stay> stays;
};

struct GroundTruth {
  ZoneGrid grid;  // grid the zone ids refer to
  std::vector<UserTruth> users;  // ordered by user_id

  const UserTruth* find(const std::string& user_id) const {
    auto it = std::lower_bound(
        users.begin(), users.end(), user_id,
        [](const UserTruth& u, const std::string& id) { return u.user_id < id; });
    return (it != users.end() && it->user_id == user_id) ? &*it : nullptr;
  }
};

struct Population {
  std::vector<Trace> traces;  // ordered by user_id
  GroundTruth truth;
};

namespace synth_detail {

inline constexpr double kMetersPerDegree =
    kEarthRadiusMeters * std::numbers::pi / 180.0;

inline double Quantize(double deg) { return std::round(deg * 1e7) / 1e7; }

inline std::string HexId(std::uint64_t hi, std::uint64_t lo) {
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return std::string(buf, 32);
}

struct Hubs {
  std::vector<std::pair<double, double>> centers;  // (row, col) in cells
};

// Samples a cell: near a random hub with probability p_near, else uniform.
inline CellIndex SampleCell(const ZoneGrid& grid, const Hubs& hubs,
                            double p_near, double spread, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (unit(rng) < p_near) {
    const auto& hub = hubs.centers[std::uniform_int_distribution<std::size_t>(
        0, hubs.centers.size() - 1)(rng)];
    const double sr = spread * static_cast<double>(grid.n_rows());
    const double sc = spread * static_cast<double>(grid.n_cols());
    for (int attempt = 0; attempt < 64; ++attempt) {
      const CellIndex c{
          static_cast<std::int64_t>(std::floor(hub.first + gauss(rng) * sr)),
          static_cast<std::int64_t>(std::floor(hub.second + gauss(rng) * sc))};
      if (grid.contains(c)) return c;
    }
  }
  return CellIndex{
      std::uniform_int_distribution<std::int64_t>(0, grid.n_rows() - 1)(rng),
      std::uniform_int_distribution<std::int64_t>(0, grid.n_cols() - 1)(rng)};
}

struct Segment {
  double start = 0.0;  // absolute seconds
  double end = 0.0;
  GeoPoint from;
  GeoPoint to;  // equal to `from` for a stay
};

// Builds one user's contiguous schedule and the stays it contains.
class Planner {
 public:
  explicit Planner(const PopulationConfig& cfg) : cfg_(cfg) {}

  void StayAt(const GeoPoint& where, const ZoneId& zone, double until) {
    if (until <= now_) return;
    segments_.push_back(Segment{now_, until, where, where});
    stays_.push_back(Stay{zone, Timestamp{static_cast<std::int64_t>(now_)},
                          Timestamp{static_cast<std::int64_t>(until)}});
    now_ = until;
  }

  void TravelTo(const GeoPoint& from, const GeoPoint& to) {
    const double dur = TravelSeconds(from, to);
    segments_.push_back(Segment{now_, now_ + dur, from, to});
    now_ += dur;
  }

  double TravelSeconds(const GeoPoint& a, const GeoPoint& b) const {
    return haversine_distance(a, b) / cfg_.travel_speed_mps;
  }

  double now() const { return now_; }
  void set_now(double t) { now_ = t; }
  std::vector<Segment>& segments() { return segments_; }
  std::vector<Stay>& stays() { return stays_; }

 private:
  const PopulationConfig& cfg_;
  double now_ = 0.0;
  std::vector<Segment> segments_;
  std::vector<Stay> stays_;
};

struct GeneratedUser {
  Trace trace;
  UserTruth truth;
};

inline GeneratedUser GenerateUser(const PopulationConfig& cfg, const Hubs& hubs,
                                  std::int64_t index) {
  const ZoneGrid& grid = cfg.grid;
  Rng rng = MakeRng(cfg.seed, {1, static_cast<std::uint64_t>(index)});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const std::string user_id =
      HexId(DeriveSeed(cfg.seed, {2, static_cast<std::uint64_t>(index)}),
            DeriveSeed(cfg.seed, {3, static_cast<std::uint64_t>(index)}));

  const CellIndex home =
      SampleCell(grid, hubs, cfg.p_home_near_hub, cfg.hub_spread, rng);
  CellIndex work = home;
  for (int attempt = 0; work == home; ++attempt) {
    work = SampleCell(grid, hubs, attempt < 32 ? cfg.p_work_near_hub : 0.0,
                      cfg.hub_spread * 0.5, rng);
  }
  const GeoPoint home_pt = grid.centroid(home);
  const GeoPoint work_pt = grid.centroid(work);

  // Leisure locations known to the user, with visit counts for preferential
  // return. Starts with the fixed leisure anchors.
  struct Known {
    CellIndex cell;
    double visits;
  };
  std::vector<Known> known;
  UserTruth truth;
  truth.user_id = user_id;
  truth.home_zone = FormatZoneId(home);
  truth.work_zone = FormatZoneId(work);
  for (std::int64_t i = 0; i < cfg.n_leisure; ++i) {
    const CellIndex c =
        SampleCell(grid, hubs, cfg.p_home_near_hub, cfg.hub_spread, rng);
    known.push_back(Known{c, 1.0});
    truth.leisure_zones.push_back(FormatZoneId(c));
  }

  // Next leisure destination: explore a fresh cell with p_explore, otherwise
  // return to a known one with probability proportional to past visits.
  const auto pick_leisure = [&]() -> std::optional<CellIndex> {
    if (unit(rng) < cfg.p_explore) {
      const CellIndex c =
          SampleCell(grid, hubs, cfg.p_home_near_hub, cfg.hub_spread, rng);
      known.push_back(Known{c, 1.0});
      return c;
    }
    if (known.empty()) return std::nullopt;
    double total = 0.0;
    for (const Known& k : known) total += k.visits;
    double r = unit(rng) * total;
    for (Known& k : known) {
      r -= k.visits;
      if (r < 0.0) {
        k.visits += 1.0;
        return k.cell;
      }
    }
    known.back().visits += 1.0;
    return known.back().cell;
  };

  constexpr double kHour = 3600.0;
  constexpr double kLatestHome = 19.75 * kHour;  // back before the night window
  const double t0 = static_cast<double>(cfg.start_epoch);
  const ZoneId home_zone = truth.home_zone;
  const ZoneId work_zone = truth.work_zone;

  Planner plan(cfg);
  plan.set_now(t0);
  for (std::int64_t d = 0; d < cfg.n_days; ++d) {
    const double day = t0 + static_cast<double>(d) * kSecondsPerDay;
    const bool weekday = (d % 7) < 5;
    if (weekday) {
      const double to_work = plan.TravelSeconds(home_pt, work_pt);
      const double depart = day + 7.0 * kHour + unit(rng) * 2.0 * kHour;
      plan.StayAt(home_pt, home_zone, depart);
      plan.TravelTo(home_pt, work_pt);
      double leave = day + 16.0 * kHour + unit(rng) * 2.0 * kHour;
      leave = std::min(leave, day + kLatestHome - to_work);
      leave = std::max(leave, plan.now());
      const bool leisure_roll = unit(rng) < cfg.p_weekday_leisure;
      std::optional<CellIndex> dest;
      if (leisure_roll) dest = pick_leisure();
      const double dwell = (0.5 + unit(rng)) * kHour;
      plan.StayAt(work_pt, work_zone, leave);
      if (dest) {
        const GeoPoint lp = grid.centroid(*dest);
        const double back = plan.now() + plan.TravelSeconds(work_pt, lp) +
                            dwell + plan.TravelSeconds(lp, home_pt);
        if (back <= day + kLatestHome) {
          plan.TravelTo(work_pt, lp);
          plan.StayAt(lp, FormatZoneId(*dest), plan.now() + dwell);
          plan.TravelTo(lp, home_pt);
          continue;
        }
      }
      plan.TravelTo(work_pt, home_pt);
    } else {
      const bool outing = unit(rng) < cfg.p_weekend_outing;
      std::optional<CellIndex> dest;
      if (outing) dest = pick_leisure();
      const double depart = day + 10.0 * kHour + unit(rng) * 4.0 * kHour;
      const double dwell = (1.0 + 2.0 * unit(rng)) * kHour;
      if (dest) {
        const GeoPoint lp = grid.centroid(*dest);
        const double leg = plan.TravelSeconds(home_pt, lp);
        if (depart + 2.0 * leg + dwell <= day + kLatestHome) {
          plan.StayAt(home_pt, home_zone, depart);
          plan.TravelTo(home_pt, lp);
          plan.StayAt(lp, FormatZoneId(*dest), plan.now() + dwell);
          plan.TravelTo(lp, home_pt);
        }
      }
    }
  }
  const double t_end = t0 + static_cast<double>(cfg.n_days) * kSecondsPerDay;
  plan.StayAt(home_pt, home_zone, std::max(t_end, plan.now()));

  // Poisson fixes along the schedule.
  std::exponential_distribution<double> gap(cfg.ping_rate / kHour);
  const std::vector<Segment>& segs = plan.segments();
  std::vector<TimedPoint> fixes;
  fixes.reserve(static_cast<std::size_t>(
      cfg.ping_rate * 24.0 * static_cast<double>(cfg.n_days) * 1.2));
  std::size_t si = 0;
  for (double t = t0 + gap(rng); t < t_end; t += gap(rng)) {
    while (si + 1 < segs.size() && segs[si].end <= t) ++si;
    const Segment& s = segs[si];
    double lat = s.from.lat();
    double lon = s.from.lon();
    if (s.end > s.start && !(s.from == s.to)) {
      const double f = std::clamp((t - s.start) / (s.end - s.start), 0.0, 1.0);
      lat += f * (s.to.lat() - s.from.lat());
      lon += f * (s.to.lon() - s.from.lon());
    }
    GeoPoint noisy(Quantize(lat), Quantize(lon));
    if (cfg.gps_noise_m > 0.0) {
      const double m_per_lon =
          kMetersPerDegree * std::cos(DegToRad(lat));
      for (int attempt = 0; attempt < 16; ++attempt) {
        const double nl = lat + gauss(rng) * cfg.gps_noise_m / kMetersPerDegree;
        const double no = lon + gauss(rng) * cfg.gps_noise_m / m_per_lon;
        const GeoPoint cand(Quantize(nl), Quantize(no));
        if (grid.contains(cand)) {
          noisy = cand;
          break;
        }
      }
    }
    fixes.push_back(
        TimedPoint{noisy, Timestamp{static_cast<std::int64_t>(std::floor(t))}});
  }
  truth.stays = std::move(plan.stays());
  return GeneratedUser{Trace(user_id, std::move(fixes)), std::move(truth)};
}

}  // namespace synth_detail

// Deterministic in cfg: every user draws from its own sub-seed, so the result
// does not depend on `threads`.
inline Population generate_population(const PopulationConfig& cfg,
                                      int threads = 1) {
  cfg.Validate();
  synth_detail::Hubs hubs;
  {
    Rng rng = MakeRng(cfg.seed, {0});
    std::uniform_real_distribution<double> unit(0.1, 0.9);
    for (int h = 0; h < cfg.n_hubs; ++h) {
      hubs.centers.emplace_back(unit(rng) * static_cast<double>(cfg.grid.n_rows()),
                                unit(rng) * static_cast<double>(cfg.grid.n_cols()));
    }
  }
  std::vector<synth_detail::GeneratedUser> users(
      static_cast<std::size_t>(cfg.n_users));
  ParallelFor(users.size(), threads, [&](std::size_t i) {
    users[i] = synth_detail::GenerateUser(cfg, hubs, static_cast<std::int64_t>(i));
  });
  std::sort(users.begin(), users.end(), [](const auto& a, const auto& b) {
    return a.truth.user_id < b.truth.user_id;
  });
  Population pop{{}, GroundTruth{cfg.grid, {}}};
  pop.traces.reserve(users.size());
  pop.truth.users.reserve(users.size());
  for (auto& u : users) {
    pop.traces.push_back(std::move(u.trace));
    pop.truth.users.push_back(std::move(u.truth));
  }
  return pop;
}

// ---- Ground-truth CSV: user_id,home_zone,work_zone ----

inline constexpr std::array<std::string_view, 3> kTruthColumns = {
    "user_id", "home_zone", "work_zone"};

inline std::string FormatTruth(const GroundTruth& truth) {
  std::string out = csv::HeaderLine(kTruthColumns) + "\n";
  for (const UserTruth& u : truth.users) {
    out += u.user_id + "," + u.home_zone.str() + "," + u.work_zone.str() + "\n";
  }
  return out;
}

inline void WriteTruth(const GroundTruth& truth,
                       const std::filesystem::path& path) {
  csv::AtomicWrite(path, FormatTruth(truth));
}

// Stays and leisure anchors are not persisted; only the CSV columns return.
inline GroundTruth ParseTruth(std::string_view text, const ZoneGrid& grid) {
  GroundTruth truth{grid, {}};
  csv::ForEachRow(text, kTruthColumns, [&](const auto& f, std::size_t line) {
    if (f[0].empty() || f[1].empty() || f[2].empty()) {
      throw MalformedRowError(line, "empty field");
    }
    UserTruth u;
    u.user_id = std::string(f[0]);
    u.home_zone = ZoneId(std::string(f[1]));
    u.work_zone = ZoneId(std::string(f[2]));
    truth.users.push_back(std::move(u));
  });
  std::sort(truth.users.begin(), truth.users.end(),
            [](const UserTruth& a, const UserTruth& b) {
              return a.user_id < b.user_id;
            });
  return truth;
}

inline GroundTruth ReadTruth(const std::filesystem::path& path,
                             const ZoneGrid& grid) {
  return ParseTruth(csv::ReadFile(path), grid);
}

}  // namespace geotrace
