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

// Flat `section.key = value` configuration files.
//
//   # comment
//   population.users = 1000
//   sweep.rungs = 0:0.0001:60, 1:0.0025:3600
//
// Keys are lower-case dotted identifiers and may appear once. Errors carry the
// file name and line.

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geotrace/csv.hpp"
#include "geotrace/curve.hpp"
#include "geotrace/error.hpp"
#include "geotrace/geo.hpp"
#include "geotrace/records.hpp"
#include "geotrace/synth.hpp"
#include "geotrace/zone.hpp"

namespace geotrace {

class KeyValueConfig {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static KeyValueConfig Parse(std::string_view text, std::string source = "<config>") {
    KeyValueConfig cfg;
    cfg.source_ = std::move(source);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t nl = text.find('\n', pos);
      std::string_view line =
          text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) {
        line = line.substr(0, hash);
      }
      line = Trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        cfg.Fail(line_no, "expected 'section.key = value'");
      }
      const std::string_view key = Trim(line.substr(0, eq));
      const std::string_view value = Trim(line.substr(eq + 1));
      if (!ValidKey(key)) {
        cfg.Fail(line_no, "bad key '" + std::string(key) + "'");
      }
      if (value.empty()) cfg.Fail(line_no, "empty value for '" + std::string(key) + "'");
      const auto [it, inserted] =
          cfg.entries_.emplace(std::string(key), Entry{std::string(value), line_no});
      if (!inserted) {
        cfg.Fail(line_no, "duplicate key '" + std::string(key) + "' (first on line " +
                              std::to_string(it->second.line) + ")");
      }
    }
    return cfg;
  }

  static KeyValueConfig Load(const std::filesystem::path& path) {
    return Parse(csv::ReadFile(path), path.string());
  }

  const std::string& source() const noexcept { return source_; }
  bool has(const std::string& key) const { return entries_.contains(key); }
  const std::map<std::string, Entry>& entries() const noexcept { return entries_; }

  std::optional<std::string> get_string(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second.value;
  }

  std::optional<double> get_double(const std::string& key) const {
    return GetNumber<double>(key);
  }
  std::optional<std::int64_t> get_int(const std::string& key) const {
    return GetNumber<std::int64_t>(key);
  }
  std::optional<std::uint64_t> get_uint(const std::string& key) const {
    return GetNumber<std::uint64_t>(key);
  }

  std::optional<bool> get_bool(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    const std::string& v = it->second.value;
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    Fail(it->second.line, "'" + key + "' expects true or false, got '" + v + "'");
  }

  // Throws with the location of `key` (or of the file when absent).
  [[noreturn]] void FailAt(const std::string& key, const std::string& message) const {
    const auto it = entries_.find(key);
    Fail(it == entries_.end() ? 0 : it->second.line, message);
  }

  // Keys not in `known`, for typo detection.
  std::vector<std::string> UnknownKeys(const std::vector<std::string_view>& known) const {
    std::vector<std::string> out;
    for (const auto& [k, e] : entries_) {
      bool found = false;
      for (std::string_view kk : known) found = found || kk == k;
      if (!found) out.push_back(k);
    }
    return out;
  }

 private:
  static std::string_view Trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static bool ValidKey(std::string_view key) {
    if (key.empty() || key.find('.') == std::string_view::npos) return false;
    if (key.front() == '.' || key.back() == '.') return false;
    for (char c : key) {
      const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' ||
                      c == '.';
      if (!ok) return false;
    }
    return true;
  }

  [[noreturn]] void Fail(std::size_t line, const std::string& message) const {
    throw Error(ErrorCode::kConfigParse,
                source_ + ":" + std::to_string(line) + ": " + message);
  }

  template <typename T>
  std::optional<T> GetNumber(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    const std::string& v = it->second.value;
    T out{};
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || end != v.data() + v.size()) {
      Fail(it->second.line, "'" + key + "' is not a valid number: '" + v + "'");
    }
    return out;
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
};

// "level:cell_deg:bin_seconds" items separated by commas.
inline std::vector<Rung> ParseRungs(std::string_view text) {
  std::vector<Rung> rungs;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    std::string_view item = text.substr(
        pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    pos = comma == std::string_view::npos ? text.size() + 1 : comma + 1;
    while (!item.empty() && (item.front() == ' ' || item.front() == '\t')) {
      item.remove_prefix(1);
    }
    while (!item.empty() && (item.back() == ' ' || item.back() == '\t')) {
      item.remove_suffix(1);
    }
    if (item.empty()) continue;
    const auto c1 = item.find(':');
    const auto c2 = c1 == std::string_view::npos ? c1 : item.find(':', c1 + 1);
    if (c2 == std::string_view::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  "rung '" + std::string(item) + "' is not level:cell_deg:bin_seconds");
    }
    int level = -1;
    double cell = 0.0;
    std::int64_t bin = 0;
    const auto parse = [&](std::string_view s, auto& out) {
      const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || end != s.data() + s.size()) {
        throw Error(ErrorCode::kInvalidConfig, "bad rung '" + std::string(item) + "'");
      }
    };
    parse(item.substr(0, c1), level);
    parse(item.substr(c1 + 1, c2 - c1 - 1), cell);
    parse(item.substr(c2 + 1), bin);
    rungs.push_back(Rung{LevelFromNumber(level), cell, bin});
  }
  return rungs;
}

inline std::string FormatRungs(const std::vector<Rung>& rungs) {
  std::string out;
  for (const Rung& r : rungs) {
    if (!out.empty()) out += ", ";
    out += std::to_string(LevelNumber(r.level)) + ":" + csv::FormatFixed(r.cell_deg) +
           ":" + std::to_string(r.bin_seconds);
  }
  return out;
}

inline Region RegionFromConfig(const KeyValueConfig& kv) {
  Region region{GeoPoint(41.5, -72.8), 0.64, 0.64};
  const double lat = kv.get_double("region.origin_lat").value_or(region.origin.lat());
  const double lon = kv.get_double("region.origin_lon").value_or(region.origin.lon());
  try {
    region.origin = GeoPoint(lat, lon);
  } catch (const Error& e) {
    kv.FailAt("region.origin_lat", e.what());
  }
  region.height_deg = kv.get_double("region.height_deg").value_or(region.height_deg);
  region.width_deg = kv.get_double("region.width_deg").value_or(region.width_deg);
  return region;
}

// Population section. The generator grid is the region at
// `population.cell_deg`.
inline PopulationConfig PopulationFromConfig(const KeyValueConfig& kv) {
  PopulationConfig cfg;
  const Region region = RegionFromConfig(kv);
  const double cell = kv.get_double("population.cell_deg").value_or(0.0025);
  try {
    cfg.grid = region.grid(cell);
  } catch (const Error& e) {
    kv.FailAt("population.cell_deg", e.what());
  }
  cfg.n_users = kv.get_int("population.users").value_or(cfg.n_users);
  cfg.n_days = kv.get_int("population.days").value_or(cfg.n_days);
  cfg.ping_rate = kv.get_double("population.ping_rate").value_or(cfg.ping_rate);
  cfg.p_explore = kv.get_double("population.p_explore").value_or(cfg.p_explore);
  cfg.n_leisure = kv.get_int("population.n_leisure").value_or(cfg.n_leisure);
  cfg.gps_noise_m = kv.get_double("population.gps_noise_m").value_or(cfg.gps_noise_m);
  cfg.seed = kv.get_uint("population.seed").value_or(cfg.seed);
  cfg.start_epoch = kv.get_int("population.start_epoch").value_or(cfg.start_epoch);
  cfg.travel_speed_mps =
      kv.get_double("population.travel_speed_mps").value_or(cfg.travel_speed_mps);
  cfg.n_hubs = static_cast<int>(kv.get_int("population.n_hubs").value_or(cfg.n_hubs));
  cfg.p_home_near_hub =
      kv.get_double("population.p_home_near_hub").value_or(cfg.p_home_near_hub);
  cfg.p_work_near_hub =
      kv.get_double("population.p_work_near_hub").value_or(cfg.p_work_near_hub);
  cfg.hub_spread = kv.get_double("population.hub_spread").value_or(cfg.hub_spread);
  cfg.p_weekday_leisure =
      kv.get_double("population.p_weekday_leisure").value_or(cfg.p_weekday_leisure);
  cfg.p_weekend_outing =
      kv.get_double("population.p_weekend_outing").value_or(cfg.p_weekend_outing);
  return cfg;
}

inline SweepConfig SweepFromConfig(const KeyValueConfig& kv) {
  SweepConfig cfg;
  cfg.region = RegionFromConfig(kv);
  if (const auto rungs = kv.get_string("sweep.rungs")) {
    try {
      cfg.rungs = ParseRungs(*rungs);
    } catch (const Error& e) {
      kv.FailAt("sweep.rungs", e.what());
    }
  }
  cfg.seed = kv.get_uint("sweep.seed").value_or(cfg.seed);
  cfg.unicity.p = static_cast<int>(kv.get_int("unicity.p").value_or(cfg.unicity.p));
  cfg.unicity.n_targets = kv.get_int("unicity.targets").value_or(cfg.unicity.n_targets);
  cfg.unicity.trials_per_target =
      kv.get_int("unicity.trials").value_or(cfg.unicity.trials_per_target);
  cfg.min_p_threshold = kv.get_double("unicity.min_p_threshold").value_or(cfg.min_p_threshold);
  cfg.min_p_max = static_cast<int>(kv.get_int("unicity.min_p_max").value_or(cfg.min_p_max));
  cfg.weights.density = kv.get_double("utility.weight_density").value_or(cfg.weights.density);
  cfg.weights.od = kv.get_double("utility.weight_od").value_or(cfg.weights.od);
  cfg.weights.home = kv.get_double("utility.weight_home").value_or(cfg.weights.home);
  cfg.weights.foot_traffic =
      kv.get_double("utility.weight_foot_traffic").value_or(cfg.weights.foot_traffic);
  cfg.night.start_hour =
      static_cast<int>(kv.get_int("home.night_start").value_or(cfg.night.start_hour));
  cfg.night.end_hour =
      static_cast<int>(kv.get_int("home.night_end").value_or(cfg.night.end_hour));
  cfg.reconstruction.max_speed_mps =
      kv.get_double("reconstruct.max_speed_mps").value_or(cfg.reconstruction.max_speed_mps);
  cfg.reconstruction.greedy_above = static_cast<std::size_t>(
      kv.get_int("reconstruct.greedy_above").value_or(
          static_cast<std::int64_t>(cfg.reconstruction.greedy_above)));
  cfg.census_cohort_sizes =
      kv.get_bool("reconstruct.census_cohort_sizes").value_or(cfg.census_cohort_sizes);
  return cfg;
}

inline constexpr std::string_view kKnownConfigKeys[] = {
    "region.origin_lat",         "region.origin_lon",
    "region.height_deg",         "region.width_deg",
    "population.cell_deg",       "population.users",
    "population.days",           "population.ping_rate",
    "population.p_explore",      "population.n_leisure",
    "population.gps_noise_m",    "population.seed",
    "population.start_epoch",    "population.travel_speed_mps",
    "population.n_hubs",         "population.p_home_near_hub",
    "population.p_work_near_hub", "population.hub_spread",
    "population.p_weekday_leisure", "population.p_weekend_outing",
    "sweep.rungs",               "sweep.seed",
    "unicity.p",                 "unicity.targets",
    "unicity.trials",            "unicity.min_p_threshold",
    "unicity.min_p_max",         "utility.weight_density",
    "utility.weight_od",         "utility.weight_home",
    "utility.weight_foot_traffic", "home.night_start",
    "home.night_end",            "reconstruct.max_speed_mps",
    "reconstruct.greedy_above",  "reconstruct.census_cohort_sizes",
    "paths.pings",               "paths.truth",
    "paths.out_dir",             "log.level",
};

// Rejects keys outside the known set.
inline void CheckKnownKeys(const KeyValueConfig& kv) {
  const std::vector<std::string_view> known(std::begin(kKnownConfigKeys),
                                            std::end(kKnownConfigKeys));
  const auto unknown = kv.UnknownKeys(known);
  if (!unknown.empty()) kv.FailAt(unknown.front(), "unknown key '" + unknown.front() + "'");
}

}  // namespace geotrace
