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

#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "geotrace/error.hpp"
#include "geotrace/geo.hpp"

namespace geotrace {

// Opaque zone label. Grid zones use the canonical form "r{row}_c{col}"; any
// other string (e.g. a census block group code) is carried through unchanged.
// Ordering is plain lexicographic on the label.
class ZoneId {
 public:
  ZoneId() = default;
  explicit ZoneId(std::string label) : label_(std::move(label)) {}

  const std::string& str() const noexcept { return label_; }
  bool empty() const noexcept { return label_.empty(); }

  friend bool operator==(const ZoneId&, const ZoneId&) = default;
  friend std::strong_ordering operator<=>(const ZoneId& a, const ZoneId& b) {
    return a.label_.compare(b.label_) <=> 0;
  }

 private:
  std::string label_;
};

struct CellIndex {
  std::int64_t row = 0;
  std::int64_t col = 0;

  friend constexpr bool operator==(CellIndex, CellIndex) = default;
  friend constexpr auto operator<=>(CellIndex, CellIndex) = default;
};

inline ZoneId FormatZoneId(CellIndex cell) {
  return ZoneId("r" + std::to_string(cell.row) + "_c" +
                std::to_string(cell.col));
}

// Parses the canonical grid form. Returns nullopt for anything else,
// including non-canonical spellings such as "r01_c2".
inline std::optional<CellIndex> ParseZoneId(const ZoneId& zone) {
  const std::string_view s = zone.str();
  const auto parse_num = [](std::string_view digits)
      -> std::optional<std::int64_t> {
    if (digits.empty() || (digits.size() > 1 && digits.front() == '0')) {
      return std::nullopt;
    }
    std::int64_t v = 0;
    const auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || v < 0) {
      return std::nullopt;
    }
    return v;
  };
  if (s.size() < 5 || s.front() != 'r') return std::nullopt;
  const std::size_t sep = s.find("_c");
  if (sep == std::string_view::npos) return std::nullopt;
  const auto row = parse_num(s.substr(1, sep - 1));
  const auto col = parse_num(s.substr(sep + 2));
  if (!row || !col) return std::nullopt;
  return CellIndex{*row, *col};
}

// Cell arithmetic runs on nanodegree integers so that nested grids (cell
// sizes that are integer multiples of each other) agree exactly on which
// cell a point falls in.
inline constexpr double kNanoDegreesPerDegree = 1e9;

inline std::int64_t ToNanoDegrees(double deg) {
  return std::llround(deg * kNanoDegreesPerDegree);
}

inline std::int64_t FloorDiv(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Uniform lat/lon grid anchored at its south-west corner.
class ZoneGrid {
 public:
  ZoneGrid(GeoPoint origin, double cell_deg, std::int64_t n_rows,
           std::int64_t n_cols)
      : origin_(origin), cell_deg_(cell_deg), n_rows_(n_rows),
        n_cols_(n_cols) {
    if (!(cell_deg > 0.0) || !std::isfinite(cell_deg)) {
      throw Error(ErrorCode::kInvalidArgument, "cell_deg must be positive");
    }
    if (n_rows <= 0 || n_cols <= 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "grid dimensions must be positive");
    }
    cell_nd_ = ToNanoDegrees(cell_deg);
    if (cell_nd_ <= 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "cell_deg below nanodegree resolution");
    }
    origin_lat_nd_ = ToNanoDegrees(origin.lat());
    origin_lon_nd_ = ToNanoDegrees(origin.lon());
  }

  const GeoPoint& origin() const noexcept { return origin_; }
  double cell_deg() const noexcept { return cell_deg_; }
  std::int64_t n_rows() const noexcept { return n_rows_; }
  std::int64_t n_cols() const noexcept { return n_cols_; }
  std::int64_t n_cells() const noexcept { return n_rows_ * n_cols_; }
  std::int64_t cell_nanodeg() const noexcept { return cell_nd_; }

  // Unchecked cell index; may lie outside [0, n).
  CellIndex raw_cell_of(const GeoPoint& p) const {
    return CellIndex{
        FloorDiv(ToNanoDegrees(p.lat()) - origin_lat_nd_, cell_nd_),
        FloorDiv(ToNanoDegrees(p.lon()) - origin_lon_nd_, cell_nd_)};
  }

  bool contains(CellIndex c) const noexcept {
    return c.row >= 0 && c.row < n_rows_ && c.col >= 0 && c.col < n_cols_;
  }

  bool contains(const GeoPoint& p) const { return contains(raw_cell_of(p)); }

  CellIndex cell_of(const GeoPoint& p) const {
    const CellIndex c = raw_cell_of(p);
    if (!contains(c)) {
      throw Error(ErrorCode::kOutOfBounds,
                  "point (" + std::to_string(p.lat()) + ", " +
                      std::to_string(p.lon()) + ") outside grid");
    }
    return c;
  }

  std::int64_t linear_index(CellIndex c) const noexcept {
    return c.row * n_cols_ + c.col;
  }

  CellIndex cell_at(std::int64_t linear) const noexcept {
    return CellIndex{linear / n_cols_, linear % n_cols_};
  }

  GeoPoint centroid(CellIndex c) const {
    return GeoPoint(origin_.lat() + (static_cast<double>(c.row) + 0.5) * cell_deg_,
                    origin_.lon() + (static_cast<double>(c.col) + 0.5) * cell_deg_);
  }

  // Centroid of a canonical zone label; throws for foreign or out-of-grid ids.
  GeoPoint centroid(const ZoneId& zone) const { return centroid(cell_of(zone)); }

  CellIndex cell_of(const ZoneId& zone) const {
    const auto cell = ParseZoneId(zone);
    if (!cell || !contains(*cell)) {
      throw Error(ErrorCode::kOutOfBounds,
                  "zone '" + zone.str() + "' is not a cell of this grid");
    }
    return *cell;
  }

  // True when every cell of this grid lies inside exactly one cell of
  // `coarser`: same origin, integer size ratio, same extent.
  bool nests_into(const ZoneGrid& coarser) const noexcept {
    if (coarser.cell_nd_ % cell_nd_ != 0) return false;
    if (origin_lat_nd_ != coarser.origin_lat_nd_ ||
        origin_lon_nd_ != coarser.origin_lon_nd_) {
      return false;
    }
    return n_rows_ * cell_nd_ == coarser.n_rows_ * coarser.cell_nd_ &&
           n_cols_ * cell_nd_ == coarser.n_cols_ * coarser.cell_nd_;
  }

  // Cell of `coarser` containing cell `c` of this grid. Requires nesting.
  CellIndex coarsen(CellIndex c, const ZoneGrid& coarser) const {
    if (!nests_into(coarser)) {
      throw Error(ErrorCode::kShapeMismatch, "grids are not nested");
    }
    const std::int64_t k = coarser.cell_nd_ / cell_nd_;
    return CellIndex{c.row / k, c.col / k};
  }

  friend bool operator==(const ZoneGrid& a, const ZoneGrid& b) noexcept {
    return a.origin_lat_nd_ == b.origin_lat_nd_ &&
           a.origin_lon_nd_ == b.origin_lon_nd_ && a.cell_nd_ == b.cell_nd_ &&
           a.n_rows_ == b.n_rows_ && a.n_cols_ == b.n_cols_;
  }

 private:
  GeoPoint origin_;
  double cell_deg_;
  std::int64_t n_rows_;
  std::int64_t n_cols_;
  std::int64_t cell_nd_ = 0;
  std::int64_t origin_lat_nd_ = 0;
  std::int64_t origin_lon_nd_ = 0;
};

inline ZoneId zone_of(const GeoPoint& p, const ZoneGrid& grid) {
  return FormatZoneId(grid.cell_of(p));
}

// Rectangular study area. Grids at different cell sizes built from the same
// region are nested whenever their cell sizes divide each other.
struct Region {
  GeoPoint origin;
  double height_deg = 0.0;
  double width_deg = 0.0;

  ZoneGrid grid(double cell_deg) const {
    const std::int64_t cell_nd = ToNanoDegrees(cell_deg);
    const std::int64_t h_nd = ToNanoDegrees(height_deg);
    const std::int64_t w_nd = ToNanoDegrees(width_deg);
    if (cell_nd <= 0 || h_nd <= 0 || w_nd <= 0 || h_nd % cell_nd != 0 ||
        w_nd % cell_nd != 0) {
      throw Error(ErrorCode::kInvalidConfig,
                  "cell size " + std::to_string(cell_deg) +
                      " does not tile the region");
    }
    return ZoneGrid(origin, cell_deg, h_nd / cell_nd, w_nd / cell_nd);
  }
};

}  // namespace geotrace

template <>
struct std::hash<geotrace::ZoneId> {
  std::size_t operator()(const geotrace::ZoneId& z) const noexcept {
    return std::hash<std::string>{}(z.str());
  }
};
