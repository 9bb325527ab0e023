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

// Trajectory reconstruction from de-linked (Level 2 / Level 3) records.
//
// Records are split into home-zone cohorts. Within a cohort the attacker
// seeds one candidate per resident at the cohort's modal night location and
// walks the time bins in order. Distances are haversine between precise
// points at Level 2 and between zone centroids at Level 3. In each bin,
// candidates first keep observations within `stay_radius_m` of their last
// position (an optimal assignment in which a candidate may also take none);
// the remaining observations are then linked to the idle candidates by a
// minimum-total-travel assignment gated by `max_speed_mps`. Surplus
// observations attach to the nearest candidate, and one that no candidate
// could have reached starts a new partial candidate.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "geotrace/aggregate.hpp"
#include "geotrace/assignment.hpp"
#include "geotrace/error.hpp"
#include "geotrace/geo.hpp"
#include "geotrace/parallel.hpp"
#include "geotrace/random.hpp"
#include "geotrace/records.hpp"
#include "geotrace/trace.hpp"
#include "geotrace/zone.hpp"

namespace geotrace {

struct CandidateStep {
  std::int64_t time_bin = 0;
  GeoPoint position;  // precise point (Level 2) or zone centroid (Level 3)
  ZoneId zone;
  bool primary = false;  // linked by the assignment rather than attached
};

struct Candidate {
  std::string id;
  ZoneId home_zone;
  bool partial = false;
  std::vector<CandidateStep> steps;  // ascending time_bin
};

struct ReconstructionOptions {
  // Residents per home zone, if the attacker knows them. Otherwise the count
  // is the largest number of distinct places occupied in any night bin.
  std::optional<std::map<ZoneId, std::int64_t>> cohort_sizes;
  NightWindow night;
  double max_speed_mps = 50.0;
  // Observations this close to a candidate's last position count as a stay.
  double stay_radius_m = 150.0;
  // Bins with more candidates or observations than this use greedy linking.
  std::size_t greedy_above = 512;
};

struct Reconstruction {
  Level level = Level::kAggregated;
  std::vector<Candidate> candidates;  // ordered by (home_zone, index)
  std::size_t empty_cohorts = 0;
  std::size_t greedy_bins = 0;
  std::size_t partial_candidates = 0;
};

namespace reconstruct_detail {

struct Observation {
  GeoPoint position;
  ZoneId zone;
};

struct Cohort {
  ZoneId home;
  // bin -> observations, in record order
  std::map<std::int64_t, std::vector<Observation>> bins;
};

inline constexpr double kForbidden = 1e15;

struct CohortResult {
  std::vector<Candidate> candidates;
  bool empty = false;
  std::size_t greedy_bins = 0;
  std::size_t partial = 0;
};

// Distinct places occupied in one bin: observations further than `radius_m`
// from every earlier one.
inline std::int64_t DistinctPlaces(const std::vector<Observation>& obs,
                                   double radius_m) {
  std::vector<const Observation*> reps;
  for (const Observation& o : obs) {
    const bool near = std::any_of(reps.begin(), reps.end(), [&](const Observation* r) {
      return haversine_distance(r->position, o.position) <= radius_m;
    });
    if (!near) reps.push_back(&o);
  }
  return static_cast<std::int64_t>(reps.size());
}

// Largest simultaneous occupancy over the night bins (over all bins when the
// cohort has no night records).
inline std::int64_t EstimateResidents(const Cohort& cohort,
                                      const TemporalResolution& temporal,
                                      const ReconstructionOptions& opt) {
  std::int64_t night_max = 0;
  std::int64_t any_max = 0;
  for (const auto& [bin, obs] : cohort.bins) {
    const std::int64_t n = DistinctPlaces(obs, opt.stay_radius_m);
    any_max = std::max(any_max, n);
    if (opt.night.contains(temporal.midpoint_hour(bin))) {
      night_max = std::max(night_max, n);
    }
  }
  return night_max > 0 ? night_max : any_max;
}

inline CohortResult LinkCohort(const Cohort& cohort, std::int64_t residents,
                               const ZoneGrid& grid,
                               const TemporalResolution& temporal,
                               const ReconstructionOptions& opt) {
  CohortResult out;
  if (residents <= 0 || cohort.bins.empty()) {
    out.empty = true;
    return out;
  }
  // Seed at the modal night zone of the cohort.
  std::vector<std::pair<const Observation*, std::int64_t>> all;
  for (const auto& [bin, obs] : cohort.bins) {
    for (const Observation& o : obs) all.emplace_back(&o, bin);
  }
  const ZoneId seed_zone = InferHomeFrom(
      all, [](const auto& e) { return e.first->zone; },
      [&](const auto& e) { return temporal.midpoint_hour(e.second); },
      opt.night);
  const GeoPoint seed = grid.centroid(seed_zone);

  struct Track {
    GeoPoint position;
    std::optional<std::int64_t> last_bin;
  };
  std::vector<Track> tracks;
  const auto new_candidate = [&](const GeoPoint& at, bool partial) {
    Candidate c;
    c.id = cohort.home.str() + "/" + std::to_string(out.candidates.size());
    c.home_zone = cohort.home;
    c.partial = partial;
    out.candidates.push_back(std::move(c));
    tracks.push_back(Track{at, std::nullopt});
  };
  for (std::int64_t k = 0; k < residents; ++k) new_candidate(seed, false);

  const double bin_s = static_cast<double>(temporal.bin_seconds());
  const auto reach = [&](const Track& t, std::int64_t bin) {
    if (!t.last_bin) return kForbidden;
    return opt.max_speed_mps * bin_s * static_cast<double>(bin - *t.last_bin + 1);
  };

  bool greedy_here = false;
  const auto solve = [&](const CostMatrix& cost) {
    if (cost.rows() > opt.greedy_above || cost.cols() > opt.greedy_above) {
      greedy_here = true;
      return SolveAssignmentGreedy(cost);
    }
    return SolveAssignment(cost);
  };
  const auto take = [&](std::size_t i, const Observation& o, std::int64_t bin,
                        bool primary) {
    out.candidates[i].steps.push_back(CandidateStep{bin, o.position, o.zone, primary});
    if (primary) {
      tracks[i].position = o.position;
      tracks[i].last_bin = bin;
    }
  };

  for (const auto& [bin, obs] : cohort.bins) {
    if (greedy_here) ++out.greedy_bins;
    greedy_here = false;
    const std::size_t n_obs = obs.size();
    std::vector<char> used(n_obs, 0);
    std::vector<char> moved(tracks.size(), 0);

    // 1. Stays: each candidate may keep an observation within stay_radius_m
    //    of where it was, or take one of the dummy "no observation" columns.
    {
      const std::size_t n_cand = tracks.size();
      CostMatrix cost(n_cand, n_obs + n_cand, opt.stay_radius_m);
      for (std::size_t i = 0; i < n_cand; ++i) {
        for (std::size_t j = 0; j < n_obs; ++j) {
          const double d = haversine_distance(tracks[i].position, obs[j].position);
          cost(i, j) = d <= opt.stay_radius_m ? d : kForbidden;
        }
      }
      const std::vector<int> match = solve(cost);
      for (std::size_t i = 0; i < n_cand; ++i) {
        if (match[i] == kUnassigned) continue;
        const auto j = static_cast<std::size_t>(match[i]);
        if (j >= n_obs || cost(i, j) >= kForbidden) continue;
        used[j] = 1;
        moved[i] = 1;
        take(i, obs[j], bin, true);
      }
    }
    // 2. Further fixes near a candidate that just stayed are its own.
    for (std::size_t j = 0; j < n_obs; ++j) {
      if (used[j]) continue;
      std::optional<std::size_t> best;
      double best_d = opt.stay_radius_m;
      for (std::size_t i = 0; i < tracks.size(); ++i) {
        if (!moved[i]) continue;
        const double d = haversine_distance(tracks[i].position, obs[j].position);
        if (d <= best_d) {
          best = i;
          best_d = d;
        }
      }
      if (best) {
        used[j] = 1;
        take(*best, obs[j], bin, false);
      }
    }
    // 3. Moves: remaining observations, grouped into places of radius
    //    stay_radius_m, against idle candidates, minimum total travel subject
    //    to the speed gate. A matched candidate takes the whole place.
    std::vector<std::size_t> idle;
    std::vector<std::vector<std::size_t>> places;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      if (!moved[i]) idle.push_back(i);
    }
    for (std::size_t j = 0; j < n_obs; ++j) {
      if (used[j]) continue;
      auto it = std::find_if(places.begin(), places.end(), [&](const auto& place) {
        return haversine_distance(obs[place.front()].position, obs[j].position) <=
               opt.stay_radius_m;
      });
      if (it == places.end()) {
        places.push_back({j});
      } else {
        it->push_back(j);
      }
    }
    if (!idle.empty() && !places.empty()) {
      CostMatrix cost(idle.size(), places.size());
      for (std::size_t a = 0; a < idle.size(); ++a) {
        const Track& t = tracks[idle[a]];
        const double limit = reach(t, bin);
        for (std::size_t c = 0; c < places.size(); ++c) {
          const double d = haversine_distance(t.position, obs[places[c].front()].position);
          cost(a, c) = d > limit ? kForbidden : d;
        }
      }
      const std::vector<int> match = solve(cost);
      for (std::size_t a = 0; a < idle.size(); ++a) {
        if (match[a] == kUnassigned) continue;
        const auto c = static_cast<std::size_t>(match[a]);
        if (cost(a, c) >= kForbidden) continue;
        moved[idle[a]] = 1;
        for (std::size_t k = 0; k < places[c].size(); ++k) {
          used[places[c][k]] = 1;
          take(idle[a], obs[places[c][k]], bin, k == 0);
        }
      }
    }
    // 4. Leftovers join the nearest candidate seen in this bin, else the
    //    nearest reachable one, else start a partial candidate.
    for (std::size_t j = 0; j < n_obs; ++j) {
      if (used[j]) continue;
      std::optional<std::size_t> best;
      double best_d = kForbidden;
      for (int pass = 0; pass < 2 && !best; ++pass) {
        for (std::size_t i = 0; i < tracks.size(); ++i) {
          if (pass == 0 && !moved[i]) continue;
          const double d = haversine_distance(tracks[i].position, obs[j].position);
          if (d <= reach(tracks[i], bin) && d < best_d) {
            best = i;
            best_d = d;
          }
        }
      }
      if (best) {
        take(*best, obs[j], bin, !moved[*best]);
        moved[*best] = 1;
        continue;
      }
      new_candidate(obs[j].position, true);
      ++out.partial;
      moved.push_back(1);
      take(tracks.size() - 1, obs[j], bin, true);
    }
  }
  if (greedy_here) ++out.greedy_bins;
  // Residents who never received an observation carry no information.
  std::erase_if(out.candidates, [](const Candidate& c) { return c.steps.empty(); });
  return out;
}

template <typename Row, typename ObsFn>
Reconstruction ReconstructCohorts(const std::vector<Row>& rows, Level level,
                                  const ZoneGrid& grid,
                                  const TemporalResolution& temporal,
                                  const ReconstructionOptions& opt, int threads,
                                  ObsFn to_observation) {
  std::map<ZoneId, Cohort> by_home;
  for (const Row& r : rows) {
    Cohort& c = by_home[r.home_zone];
    c.home = r.home_zone;
    c.bins[r.time_bin].push_back(to_observation(r));
  }
  std::vector<const Cohort*> cohorts;
  for (const auto& [home, c] : by_home) cohorts.push_back(&c);

  std::vector<CohortResult> results(cohorts.size());
  ParallelFor(cohorts.size(), threads, [&](std::size_t i) {
    const Cohort& c = *cohorts[i];
    std::int64_t residents = 0;
    if (opt.cohort_sizes) {
      const auto it = opt.cohort_sizes->find(c.home);
      if (it != opt.cohort_sizes->end()) residents = it->second;
    }
    if (residents <= 0) residents = EstimateResidents(c, temporal, opt);
    results[i] = LinkCohort(c, residents, grid, temporal, opt);
  });

  Reconstruction out;
  out.level = level;
  for (CohortResult& r : results) {
    if (r.empty) ++out.empty_cohorts;
    out.greedy_bins += r.greedy_bins;
    out.partial_candidates += r.partial;
    for (Candidate& c : r.candidates) out.candidates.push_back(std::move(c));
  }
  return out;
}

}  // namespace reconstruct_detail

inline Reconstruction reconstruct(const std::vector<AggPing>& rows,
                                  const ZoneGrid& grid,
                                  const TemporalResolution& temporal,
                                  const ReconstructionOptions& opt = {},
                                  int threads = 1) {
  return reconstruct_detail::ReconstructCohorts(
      rows, Level::kAggregated, grid, temporal, opt, threads,
      [&](const AggPing& r) {
        return reconstruct_detail::Observation{r.point, zone_of(r.point, grid)};
      });
}

inline Reconstruction reconstruct(const std::vector<CoarseAggPing>& rows,
                                  const ZoneGrid& grid,
                                  const TemporalResolution& temporal,
                                  const ReconstructionOptions& opt = {},
                                  int threads = 1) {
  return reconstruct_detail::ReconstructCohorts(
      rows, Level::kCoarseAggregated, grid, temporal, opt, threads,
      [&](const CoarseAggPing& r) {
        return reconstruct_detail::Observation{grid.centroid(r.visit_zone),
                                               r.visit_zone};
      });
}

// Number of users per inferred home zone, i.e. what a census would publish.
inline std::map<ZoneId, std::int64_t> CohortSizes(const std::vector<ZoneId>& homes) {
  std::map<ZoneId, std::int64_t> sizes;
  for (const ZoneId& h : homes) ++sizes[h];
  return sizes;
}

struct AccuracyReport {
  // Share of the true users' (zone, bin) cells recovered by their matched
  // candidate.
  double accuracy = 0.0;
  // Share of candidate steps that are correct.
  double precision = 0.0;
  double exact_trajectory_rate = 0.0;  // candidates with every step correct
  std::size_t candidates = 0;
  std::size_t steps = 0;
  std::size_t correct_steps = 0;
  std::size_t truth_cells = 0;
};

namespace reconstruct_detail {

// Distinct (time_bin, zone index) cells, sorted.
using CellSet = std::vector<std::pair<std::int64_t, std::uint32_t>>;

inline void SortUnique(CellSet& cells) {
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
}

inline std::uint32_t ZoneIndex(const ZoneId& z,
                               std::unordered_map<ZoneId, std::uint32_t>& ids) {
  return ids.try_emplace(z, static_cast<std::uint32_t>(ids.size())).first->second;
}

inline std::size_t Overlap(const CellSet& a, const CellSet& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

}  // namespace reconstruct_detail

// Scores candidates against the true traces on the (zone, bin) cells of
// `grid` and `temporal`, at both levels. A candidate's steps are its distinct
// cells. Candidates are matched to true users one-to-one within each home
// cohort by maximum cell overlap; a step is correct when the matched user
// occupied that zone in that bin. Accuracy divides the correct steps by all
// true cells, precision by all candidate steps.
inline AccuracyReport reconstruction_accuracy(
    const Reconstruction& recon, const std::vector<Trace>& truth_traces,
    const ZoneGrid& grid, const TemporalResolution& temporal,
    const NightWindow& night = {}, int threads = 1) {
  using reconstruct_detail::CellSet;
  AccuracyReport report;
  report.candidates = recon.candidates.size();
  if (recon.candidates.empty()) return report;

  std::map<ZoneId, std::vector<std::size_t>> cands_by_home;
  for (std::size_t c = 0; c < recon.candidates.size(); ++c) {
    cands_by_home[recon.candidates[c].home_zone].push_back(c);
  }
  const std::vector<ZoneId> homes = InferHomes(truth_traces, grid, night, threads);
  std::map<ZoneId, std::vector<std::size_t>> users_by_home;
  for (std::size_t u = 0; u < homes.size(); ++u) users_by_home[homes[u]].push_back(u);

  struct Work {
    const std::vector<std::size_t>* cands;
    const std::vector<std::size_t>* users;
  };
  static const std::vector<std::size_t> kNone;
  std::vector<Work> cohorts;
  for (const auto& [home, cands] : cands_by_home) {
    const auto it = users_by_home.find(home);
    cohorts.push_back(Work{&cands, it == users_by_home.end() ? &kNone : &it->second});
  }

  for (std::size_t u = 0; u < truth_traces.size(); ++u) {
    reconstruct_detail::CellSet cells;
    std::unordered_map<ZoneId, std::uint32_t> ids;
    for (const TimedPoint& f : truth_traces[u].fixes()) {
      cells.emplace_back(time_bin(f.t, temporal),
                         reconstruct_detail::ZoneIndex(zone_of(f.point, grid), ids));
    }
    reconstruct_detail::SortUnique(cells);
    report.truth_cells += cells.size();
  }

  struct CohortScore {
    std::size_t steps = 0;
    std::size_t correct = 0;
    std::size_t exact = 0;
  };
  std::vector<CohortScore> scores(cohorts.size());
  ParallelFor(cohorts.size(), threads, [&](std::size_t k) {
    const auto& cands = *cohorts[k].cands;
    const auto& users = *cohorts[k].users;
    std::unordered_map<ZoneId, std::uint32_t> zone_ids;
    std::vector<CellSet> cand_cells(cands.size());
    for (std::size_t ci = 0; ci < cands.size(); ++ci) {
      for (const CandidateStep& s : recon.candidates[cands[ci]].steps) {
        cand_cells[ci].emplace_back(s.time_bin,
                                    reconstruct_detail::ZoneIndex(s.zone, zone_ids));
      }
      reconstruct_detail::SortUnique(cand_cells[ci]);
      scores[k].steps += cand_cells[ci].size();
    }
    if (users.empty()) return;
    std::vector<CellSet> user_cells(users.size());
    for (std::size_t ui = 0; ui < users.size(); ++ui) {
      for (const TimedPoint& f : truth_traces[users[ui]].fixes()) {
        user_cells[ui].emplace_back(
            time_bin(f.t, temporal),
            reconstruct_detail::ZoneIndex(zone_of(f.point, grid), zone_ids));
      }
      reconstruct_detail::SortUnique(user_cells[ui]);
    }
    CostMatrix cost(cands.size(), users.size());
    for (std::size_t ci = 0; ci < cands.size(); ++ci) {
      for (std::size_t ui = 0; ui < users.size(); ++ui) {
        cost(ci, ui) =
            -static_cast<double>(reconstruct_detail::Overlap(cand_cells[ci], user_cells[ui]));
      }
    }
    const std::vector<int> match = SolveAssignment(cost);
    for (std::size_t ci = 0; ci < cands.size(); ++ci) {
      if (match[ci] == kUnassigned) continue;
      const auto got = static_cast<std::size_t>(
          -cost(ci, static_cast<std::size_t>(match[ci])));
      scores[k].correct += got;
      if (got == cand_cells[ci].size()) ++scores[k].exact;
    }
  });
  std::size_t exact = 0;
  for (const CohortScore& s : scores) {
    report.steps += s.steps;
    report.correct_steps += s.correct;
    exact += s.exact;
  }
  if (report.steps > 0) {
    report.precision = static_cast<double>(report.correct_steps) /
                       static_cast<double>(report.steps);
  }
  if (report.truth_cells > 0) {
    report.accuracy = static_cast<double>(report.correct_steps) /
                    static_cast<double>(report.truth_cells);
  }
  report.exact_trajectory_rate =
      static_cast<double>(exact) / static_cast<double>(report.candidates);
  return report;
}

}  // namespace geotrace
