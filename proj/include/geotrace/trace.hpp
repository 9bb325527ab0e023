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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "geotrace/error.hpp"
#include "geotrace/geo.hpp"

namespace geotrace {

struct Ping {
  std::string user_id;
  GeoPoint point;
  Timestamp t;

  friend bool operator==(const Ping&, const Ping&) = default;
};

// One user's fixes in canonical order: by time, then latitude, then
// longitude. Duplicate fixes are kept.
class Trace {
 public:
  Trace() = default;
  Trace(std::string user_id, std::vector<TimedPoint> fixes)
      : user_id_(std::move(user_id)), fixes_(std::move(fixes)) {
    if (user_id_.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "empty user_id");
    }
    std::sort(fixes_.begin(), fixes_.end(),
              [](const TimedPoint& a, const TimedPoint& b) {
                if (a.t != b.t) return a.t < b.t;
                return a.point < b.point;
              });
  }

  const std::string& user_id() const noexcept { return user_id_; }
  const std::vector<TimedPoint>& fixes() const noexcept { return fixes_; }
  std::size_t size() const noexcept { return fixes_.size(); }
  bool empty() const noexcept { return fixes_.empty(); }

  friend bool operator==(const Trace& a, const Trace& b) {
    if (a.user_id_ != b.user_id_ || a.fixes_.size() != b.fixes_.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.fixes_.size(); ++i) {
      if (a.fixes_[i].t != b.fixes_[i].t ||
          a.fixes_[i].point != b.fixes_[i].point) {
        return false;
      }
    }
    return true;
  }

 private:
  std::string user_id_;
  std::vector<TimedPoint> fixes_;
};

// Groups pings into traces, one per user, ordered by user_id.
inline std::vector<Trace> BuildTraces(const std::vector<Ping>& pings) {
  std::map<std::string, std::vector<TimedPoint>> by_user;
  for (const Ping& p : pings) {
    by_user[p.user_id].push_back(TimedPoint{p.point, p.t});
  }
  std::vector<Trace> traces;
  traces.reserve(by_user.size());
  for (auto& [user, fixes] : by_user) {
    traces.emplace_back(user, std::move(fixes));
  }
  return traces;
}

inline std::size_t TotalPings(const std::vector<Trace>& traces) {
  std::size_t n = 0;
  for (const Trace& t : traces) n += t.size();
  return n;
}

}  // namespace geotrace
