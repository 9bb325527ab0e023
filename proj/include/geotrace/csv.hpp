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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "geotrace/error.hpp"
#include "geotrace/records.hpp"
#include "geotrace/trace.hpp"

namespace geotrace::csv {

// Shortest decimal that round-trips, never in exponent form, padded to at
// least `min_fraction_digits` digits after the point.
inline std::string FormatFixed(double v, int min_fraction_digits = 0) {
  char buf[64];
  const auto [end, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  if (ec != std::errc()) {
    throw Error(ErrorCode::kInvalidArgument, "unformattable number");
  }
  std::string s(buf, end);
  if (min_fraction_digits > 0) {
    std::size_t dot = s.find('.');
    if (dot == std::string::npos) {
      s.push_back('.');
      dot = s.size() - 1;
    }
    const int have = static_cast<int>(s.size() - dot - 1);
    if (have < min_fraction_digits) s.append(min_fraction_digits - have, '0');
  }
  return s;
}

// Coordinates carry at least five fraction digits.
inline std::string FormatDegrees(double deg) { return FormatFixed(deg, 5); }

inline std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline double ParseDouble(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw MalformedRowError(line, "bad number '" + std::string(s) + "'");
  }
  return v;
}

inline std::int64_t ParseInt(std::string_view s, std::size_t line) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw MalformedRowError(line, "bad integer '" + std::string(s) + "'");
  }
  return v;
}

inline std::string HeaderLine(std::span<const std::string_view> columns) {
  std::string h;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) h.push_back(',');
    h.append(columns[i]);
  }
  return h;
}

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to a sibling temp file and renames it into place, so a failed run
// never leaves a partial output under the final name.
inline void AtomicWrite(const std::filesystem::path& path,
                        std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      throw Error(ErrorCode::kIoError, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIoError, "cannot rename into " + path.string());
  }
}

// Calls row(fields, line_number) for every data row after checking that the
// header is exactly `columns`. Rows must have exactly columns.size() fields.
inline void ForEachRow(
    std::string_view text, std::span<const std::string_view> columns,
    const std::function<void(const std::vector<std::string_view>&,
                             std::size_t)>& row) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != HeaderLine(columns)) {
        throw MalformedRowError(line_no, "expected header '" +
                                             HeaderLine(columns) + "'");
      }
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto fields = SplitFields(line);
    if (fields.size() != columns.size()) {
      throw MalformedRowError(
          line_no, "expected " + std::to_string(columns.size()) +
                       " fields, got " + std::to_string(fields.size()));
    }
    row(fields, line_no);
  }
  if (!header_seen) throw MalformedRowError(1, "missing header");
}

// ---- Ping CSV: user_id,lat,lon,t ----

inline std::string FormatPings(const std::vector<Trace>& traces) {
  std::string out = HeaderLine(kPingColumns);
  out.push_back('\n');
  for (const Trace& tr : traces) {
    for (const TimedPoint& f : tr.fixes()) {
      out += tr.user_id();
      out.push_back(',');
      out += FormatDegrees(f.point.lat());
      out.push_back(',');
      out += FormatDegrees(f.point.lon());
      out.push_back(',');
      out += std::to_string(f.t.seconds);
      out.push_back('\n');
    }
  }
  return out;
}

inline std::vector<Ping> ParsePingRows(std::string_view text) {
  std::vector<Ping> pings;
  ForEachRow(text, kPingColumns, [&](const auto& f, std::size_t line) {
    if (f[0].empty()) throw MalformedRowError(line, "empty user_id");
    try {
      pings.push_back(Ping{std::string(f[0]),
                           GeoPoint(ParseDouble(f[1], line),
                                    ParseDouble(f[2], line)),
                           Timestamp::checked(ParseInt(f[3], line))});
    } catch (const MalformedRowError&) {
      throw;
    } catch (const Error& e) {
      throw MalformedRowError(line, e.what());
    }
  });
  return pings;
}

inline void WritePings(const std::vector<Trace>& traces,
                       const std::filesystem::path& path) {
  AtomicWrite(path, FormatPings(traces));
}

// Traces sorted by user_id, fixes by time. Input row order is irrelevant.
inline std::vector<Trace> ReadPings(const std::filesystem::path& path) {
  return BuildTraces(ParsePingRows(ReadFile(path)));
}

// ---- Level CSVs ----

inline std::string FormatLevel1(const std::vector<CoarsePing>& rows) {
  std::string out = HeaderLine(kLevel1Columns) + "\n";
  for (const CoarsePing& r : rows) {
    out += r.user_id + "," + r.zone.str() + "," + std::to_string(r.time_bin) +
           "\n";
  }
  return out;
}

inline std::string FormatLevel2(const std::vector<AggPing>& rows) {
  std::string out = HeaderLine(kLevel2Columns) + "\n";
  for (const AggPing& r : rows) {
    out += r.home_zone.str() + "," + FormatDegrees(r.point.lat()) + "," +
           FormatDegrees(r.point.lon()) + "," + std::to_string(r.time_bin) +
           "\n";
  }
  return out;
}

inline std::string FormatLevel3(const std::vector<CoarseAggPing>& rows) {
  std::string out = HeaderLine(kLevel3Columns) + "\n";
  for (const CoarseAggPing& r : rows) {
    out += r.home_zone.str() + "," + r.visit_zone.str() + "," +
           std::to_string(r.time_bin) + "\n";
  }
  return out;
}

inline std::vector<CoarsePing> ParseLevel1(std::string_view text) {
  std::vector<CoarsePing> rows;
  ForEachRow(text, kLevel1Columns, [&](const auto& f, std::size_t line) {
    if (f[0].empty() || f[1].empty()) {
      throw MalformedRowError(line, "empty field");
    }
    rows.push_back(CoarsePing{std::string(f[0]), ZoneId(std::string(f[1])),
                              ParseInt(f[2], line)});
  });
  return rows;
}

inline std::vector<AggPing> ParseLevel2(std::string_view text) {
  std::vector<AggPing> rows;
  ForEachRow(text, kLevel2Columns, [&](const auto& f, std::size_t line) {
    if (f[0].empty()) throw MalformedRowError(line, "empty home_zone");
    try {
      rows.push_back(AggPing{
          ZoneId(std::string(f[0])),
          GeoPoint(ParseDouble(f[1], line), ParseDouble(f[2], line)),
          ParseInt(f[3], line)});
    } catch (const MalformedRowError&) {
      throw;
    } catch (const Error& e) {
      throw MalformedRowError(line, e.what());
    }
  });
  return rows;
}

inline std::vector<CoarseAggPing> ParseLevel3(std::string_view text) {
  std::vector<CoarseAggPing> rows;
  ForEachRow(text, kLevel3Columns, [&](const auto& f, std::size_t line) {
    if (f[0].empty() || f[1].empty()) {
      throw MalformedRowError(line, "empty field");
    }
    rows.push_back(CoarseAggPing{ZoneId(std::string(f[0])),
                                 ZoneId(std::string(f[1])),
                                 ParseInt(f[2], line)});
  });
  return rows;
}

// First line of a CSV file, without the line terminator.
inline std::string ReadHeader(std::string_view text) {
  std::string_view first = text.substr(0, text.find('\n'));
  if (!first.empty() && first.back() == '\r') first.remove_suffix(1);
  return std::string(first);
}

}  // namespace geotrace::csv
