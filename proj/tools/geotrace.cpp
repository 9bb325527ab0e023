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

// geotrace: synth | aggregate | attack | utility | sweep
//
// Failures print one line to stderr,
//   error: code=<Name> message="<text>"
// and exit non-zero. Verbosity comes from GEOTRACE_LOG (trace, debug, info,
// warn, error, off; default warn).

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "geotrace/geotrace.hpp"

namespace fs = std::filesystem;
using namespace geotrace;

namespace {

struct Common {
  std::string config;
  int threads = 1;
};

struct SynthArgs {
  std::optional<std::int64_t> users;
  std::optional<std::int64_t> days;
  std::optional<std::uint64_t> seed;
  std::optional<double> ping_rate;
  std::optional<double> p_explore;
  std::optional<double> noise_m;
  std::string out_dir = ".";
};

struct AggregateArgs {
  std::string pings;
  int level = 0;
  std::optional<double> cell_deg;
  std::optional<std::int64_t> bin_seconds;
  std::int64_t min_cohort = 0;
  bool no_collapse = false;
  std::string out;
};

struct AttackArgs {
  std::string input;
  std::string attack = "unicity";
  std::optional<double> cell_deg;
  std::optional<std::int64_t> bin_seconds;
  std::optional<int> p;
  std::optional<std::int64_t> targets;
  std::optional<std::int64_t> trials;
  bool exhaustive = false;
  std::optional<std::uint64_t> seed;
  bool min_p = false;
  std::string truth_pings;
  bool census = false;
  std::string dump;
  std::string out;
};

struct UtilityArgs {
  std::string input;
  std::string pings;
  std::string truth;
  std::optional<double> cell_deg;
  std::optional<std::int64_t> bin_seconds;
  std::optional<double> truth_cell_deg;
  std::string out;
  std::string od_out;
};

struct SweepArgs {
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string pings;
  std::string truth;
};

KeyValueConfig LoadConfig(const Common& c) {
  if (c.config.empty()) return KeyValueConfig::Parse("", "<defaults>");
  KeyValueConfig kv = KeyValueConfig::Load(c.config);
  CheckKnownKeys(kv);
  return kv;
}

template <typename T>
T Require(const std::optional<T>& v, const std::string& what) {
  if (!v) throw Error(ErrorCode::kInvalidArgument, what + " is required");
  return *v;
}

std::string ReadInput(const std::string& path, Level* level) {
  std::string text = csv::ReadFile(path);
  const auto detected = DetectLevel(csv::ReadHeader(text));
  if (!detected) {
    throw Error(ErrorCode::kMalformedRow,
                path + ": header matches no level: '" + csv::ReadHeader(text) + "'");
  }
  *level = *detected;
  return text;
}

ZoneGrid TruthGrid(const KeyValueConfig& kv, const std::optional<double>& cell) {
  const Region region = RegionFromConfig(kv);
  if (cell) return region.grid(*cell);
  return PopulationFromConfig(kv).grid;
}

void EnsureParent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

int RunSynth(const Common& c, const SynthArgs& a) {
  const KeyValueConfig kv = LoadConfig(c);
  PopulationConfig cfg = PopulationFromConfig(kv);
  cfg.seed = Require(a.seed, "--seed");
  if (a.users) cfg.n_users = *a.users;
  if (a.days) cfg.n_days = *a.days;
  if (a.ping_rate) cfg.ping_rate = *a.ping_rate;
  if (a.p_explore) cfg.p_explore = *a.p_explore;
  if (a.noise_m) cfg.gps_noise_m = *a.noise_m;
  const Population pop = generate_population(cfg, c.threads);
  fs::create_directories(a.out_dir);
  csv::WritePings(pop.traces, fs::path(a.out_dir) / "pings.csv");
  WriteTruth(pop.truth, fs::path(a.out_dir) / "truth.csv");
  spdlog::info("synth: {} users, {} pings -> {}", pop.traces.size(),
               TotalPings(pop.traces), a.out_dir);
  return 0;
}

int RunAggregate(const Common& c, const AggregateArgs& a) {
  const KeyValueConfig kv = LoadConfig(c);
  const Level level = LevelFromNumber(a.level);
  const std::vector<Trace> traces = csv::ReadPings(a.pings);
  std::string out;
  if (level == Level::kRaw) {
    out = csv::FormatPings(traces);
  } else {
    AggregationConfig cfg;
    cfg.level = level;
    cfg.grid = RegionFromConfig(kv).grid(Require(a.cell_deg, "--cell-deg"));
    cfg.temporal = TemporalResolution(Require(a.bin_seconds, "--bin-seconds"));
    cfg.min_cohort = a.min_cohort;
    cfg.collapse_duplicates = !a.no_collapse;
    if (const auto s = kv.get_int("home.night_start")) cfg.night.start_hour = int(*s);
    if (const auto e = kv.get_int("home.night_end")) cfg.night.end_hour = int(*e);
    switch (level) {
      case Level::kCoarse:
        out = csv::FormatLevel1(to_level1(traces, cfg, c.threads));
        break;
      case Level::kAggregated:
        out = csv::FormatLevel2(to_level2(traces, cfg, c.threads));
        break;
      default:
        out = csv::FormatLevel3(to_level3(traces, cfg, c.threads));
        break;
    }
  }
  EnsureParent(a.out);
  csv::AtomicWrite(a.out, out);
  spdlog::info("aggregate: level {} -> {}", a.level, a.out);
  return 0;
}

int RunAttack(const Common& c, const AttackArgs& a) {
  const KeyValueConfig kv = LoadConfig(c);
  Level level{};
  const std::string text = ReadInput(a.input, &level);
  std::vector<RiskRow> rows;
  std::string dump;

  if (a.attack == "unicity") {
    UnicityConfig ucfg;
    ucfg.p = a.p.value_or(int(kv.get_int("unicity.p").value_or(ucfg.p)));
    ucfg.n_targets = a.targets.value_or(kv.get_int("unicity.targets").value_or(0));
    ucfg.trials_per_target =
        a.trials.value_or(kv.get_int("unicity.trials").value_or(ucfg.trials_per_target));
    ucfg.exhaustive = a.exhaustive;
    ucfg.seed = Require(a.seed, "--seed");
    UserPointSets sets;
    double cell = 0.0;
    std::int64_t bin = 0;
    if (level == Level::kRaw) {
      cell = a.cell_deg.value_or(1e-4);
      bin = a.bin_seconds.value_or(60);
      sets = PointSetsNative(BuildTraces(csv::ParsePingRows(text)), cell, bin);
    } else if (level == Level::kCoarse) {
      cell = a.cell_deg.value_or(0.0);
      bin = a.bin_seconds.value_or(0);
      sets = PointSetsFromLevel1(csv::ParseLevel1(text));
    } else {
      throw Error(ErrorCode::kUnlinkableInput,
                  "unicity needs per-user records (level 0 or 1); use "
                  "--attack reconstruct for levels 2 and 3");
    }
    const UnicityResult r = unicity(sets, ucfg, c.threads);
    rows.push_back({"unicity", level, cell, bin, ucfg.p, r.unicity});
    rows.push_back({"unicity_stderr", level, cell, bin, ucfg.p, r.standard_error()});
    rows.push_back({"targets", level, cell, bin, ucfg.p, double(r.n_targets)});
    rows.push_back({"trials", level, cell, bin, ucfg.p, double(r.trials)});
    if (a.min_p) {
      const int mp = MinPointsForUnicity(
          sets, kv.get_double("unicity.min_p_threshold").value_or(0.95),
          int(kv.get_int("unicity.min_p_max").value_or(8)), ucfg, c.threads);
      rows.push_back({"min_p_for_threshold", level, cell, bin, std::nullopt, double(mp)});
    }
  } else if (a.attack == "reconstruct") {
    if (level != Level::kAggregated && level != Level::kCoarseAggregated) {
      throw Error(ErrorCode::kInvalidArgument,
                  "reconstruction needs de-linked records (level 2 or 3)");
    }
    const double cell = Require(a.cell_deg, "--cell-deg");
    const std::int64_t bin = Require(a.bin_seconds, "--bin-seconds");
    const ZoneGrid grid = RegionFromConfig(kv).grid(cell);
    const TemporalResolution temporal(bin);
    ReconstructionOptions opt;
    opt.max_speed_mps = kv.get_double("reconstruct.max_speed_mps").value_or(opt.max_speed_mps);
    std::vector<Trace> truth;
    if (!a.truth_pings.empty()) truth = csv::ReadPings(a.truth_pings);
    if (a.census) {
      if (truth.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "--census needs --truth-pings");
      }
      opt.cohort_sizes = CohortSizes(InferHomes(truth, grid, opt.night, c.threads));
    }
    const Reconstruction recon =
        level == Level::kAggregated
            ? reconstruct(csv::ParseLevel2(text), grid, temporal, opt, c.threads)
            : reconstruct(csv::ParseLevel3(text), grid, temporal, opt, c.threads);
    rows.push_back({"candidates", level, cell, bin, std::nullopt,
                    double(recon.candidates.size())});
    rows.push_back({"partial_candidates", level, cell, bin, std::nullopt,
                    double(recon.partial_candidates)});
    rows.push_back({"empty_cohorts", level, cell, bin, std::nullopt,
                    double(recon.empty_cohorts)});
    rows.push_back({"greedy_bins", level, cell, bin, std::nullopt,
                    double(recon.greedy_bins)});
    if (!truth.empty()) {
      const AccuracyReport acc =
          reconstruction_accuracy(recon, truth, grid, temporal, opt.night, c.threads);
      rows.push_back({"reconstruction_accuracy", level, cell, bin, std::nullopt,
                      acc.accuracy});
      rows.push_back({"reconstruction_precision", level, cell, bin, std::nullopt,
                      acc.precision});
      rows.push_back({"exact_trajectory_rate", level, cell, bin, std::nullopt,
                      acc.exact_trajectory_rate});
    }
    dump = FormatReconstruction(recon);
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "--attack must be unicity or reconstruct, got '" + a.attack + "'");
  }
  if (!a.dump.empty()) {
    if (dump.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "--dump applies to --attack reconstruct");
    }
    EnsureParent(a.dump);
    csv::AtomicWrite(a.dump, dump);
  }
  EnsureParent(a.out);
  csv::AtomicWrite(a.out, FormatRiskReport(rows));
  spdlog::info("attack {}: {} rows -> {}", a.attack, rows.size(), a.out);
  return 0;
}

int RunUtility(const Common& c, const UtilityArgs& a) {
  const KeyValueConfig kv = LoadConfig(c);
  const SweepConfig scfg = SweepFromConfig(kv);
  Level level{};
  const std::string text = ReadInput(a.input, &level);
  const std::vector<Trace> traces = csv::ReadPings(a.pings);
  const GroundTruth truth = ReadTruth(a.truth, TruthGrid(kv, a.truth_cell_deg));
  const double cell = Require(a.cell_deg, "--cell-deg");
  const std::int64_t bin = Require(a.bin_seconds, "--bin-seconds");
  const ZoneGrid grid = scfg.region.grid(cell);
  const TemporalResolution temporal(bin);
  const UtilityBaseline base = UtilityBaseline::From(traces, grid, temporal);

  UtilityReport report;
  ODMatrix od;
  switch (level) {
    case Level::kRaw: {
      const std::vector<Trace> published = BuildTraces(csv::ParsePingRows(text));
      report = ScoreRaw(published, truth, base, scfg.weights, scfg.night, c.threads);
      od = od_matrix(published, grid, temporal);
      break;
    }
    case Level::kCoarse: {
      const std::vector<CoarsePing> rows = csv::ParseLevel1(text);
      report = ScoreLevel1(rows, truth, base, scfg.weights, scfg.night);
      od = od_matrix(OccupancyFromLevel1(rows));
      break;
    }
    default: {
      // De-linked records: flows come from reconstructed candidates, cohort
      // sizes and homes from the producer's assignment on the raw pings.
      const std::vector<ZoneId> homes = InferHomes(traces, grid, scfg.night, c.threads);
      ReconstructionOptions opt = scfg.reconstruction;
      opt.night = scfg.night;
      if (scfg.census_cohort_sizes) opt.cohort_sizes = CohortSizes(homes);
      Reconstruction recon;
      Occupancy published;
      if (level == Level::kAggregated) {
        const std::vector<AggPing> rows = csv::ParseLevel2(text);
        recon = reconstruct(rows, grid, temporal, opt, c.threads);
        published = OccupancyFromLevel2(rows, grid);
      } else {
        const std::vector<CoarseAggPing> rows = csv::ParseLevel3(text);
        recon = reconstruct(rows, grid, temporal, opt, c.threads);
        published = OccupancyFromLevel3(rows);
      }
      std::map<std::string, ZoneId> by_user;
      for (std::size_t i = 0; i < traces.size(); ++i) {
        by_user.emplace(traces[i].user_id(), homes[i]);
      }
      report = ScoreDelinked(published, recon, by_user, truth, base, scfg.weights);
      od = od_matrix(OccupancyFromCandidates(recon));
      break;
    }
  }
  EnsureParent(a.out);
  csv::AtomicWrite(a.out, FormatUtilityReport(report, level, cell, bin));
  if (!a.od_out.empty()) {
    EnsureParent(a.od_out);
    csv::AtomicWrite(a.od_out, FormatOD(od));
  }
  spdlog::info("utility: composite {:.4f} -> {}", report.composite, a.out);
  return 0;
}

int RunSweep(const Common& c, const SweepArgs& a) {
  if (c.config.empty()) throw Error(ErrorCode::kInvalidArgument, "--config is required");
  const KeyValueConfig kv = LoadConfig(c);
  SweepConfig cfg = SweepFromConfig(kv);
  cfg.seed = Require(a.seed, "--seed");
  const std::string pings = !a.pings.empty() ? a.pings : kv.get_string("paths.pings").value_or("");
  const std::string truth_path =
      !a.truth.empty() ? a.truth : kv.get_string("paths.truth").value_or("");
  std::string out_dir = a.out_dir;
  if (out_dir.empty()) out_dir = kv.get_string("paths.out_dir").value_or("");
  if (out_dir.empty()) throw Error(ErrorCode::kInvalidArgument, "--out-dir is required");

  std::vector<Trace> traces;
  std::optional<GroundTruth> truth;
  if (!pings.empty() || !truth_path.empty()) {
    if (pings.empty() || truth_path.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "pings and truth paths go together");
    }
    traces = csv::ReadPings(pings);
    truth = ReadTruth(truth_path, PopulationFromConfig(kv).grid);
  } else {
    PopulationConfig pcfg = PopulationFromConfig(kv);
    if (!kv.has("population.seed")) pcfg.seed = cfg.seed;
    Population pop = generate_population(pcfg, c.threads);
    spdlog::info("sweep: generated {} users, {} pings", pop.traces.size(),
                 TotalPings(pop.traces));
    traces = std::move(pop.traces);
    truth = std::move(pop.truth);
  }
  const SweepResult result = sweep_detailed(traces, *truth, cfg, c.threads);
  fs::create_directories(out_dir);
  emit_curve(result.points, fs::path(out_dir) / "curve.csv");
  csv::AtomicWrite(fs::path(out_dir) / "curve_rungs.csv",
                   FormatBreakdown(result.breakdowns));
  for (const TradeoffPoint& p : result.points) {
    spdlog::info("{} risk={:.4f} utility={:.4f}", p.config_id, p.risk, p.utility);
  }
  return 0;
}

std::string Escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out.push_back('\\');
    out.push_back(ch == '\n' ? ' ' : ch);
  }
  return out;
}

int Fail(std::string_view code, std::string_view message, int exit_code = 1) {
  std::cerr << "error: code=" << code << " message=\"" << Escape(message) << "\"\n";
  return exit_code;
}

void SetUpLogging() {
  auto logger = spdlog::stderr_color_mt("geotrace");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("GEOTRACE_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

}  // namespace

int main(int argc, char** argv) {
  SetUpLogging();
  CLI::App app{"Location-trace aggregation, re-identification and utility toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config, "Key-value config file");
  app.add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic population");
  s->add_option("--users", synth.users);
  s->add_option("--days", synth.days);
  s->add_option("--seed", synth.seed, "Random seed (required)");
  s->add_option("--ping-rate", synth.ping_rate, "Mean fixes per hour");
  s->add_option("--p-explore", synth.p_explore);
  s->add_option("--noise-m", synth.noise_m, "GPS noise in meters");
  s->add_option("--out-dir", synth.out_dir, "Writes pings.csv and truth.csv here");

  AggregateArgs agg;
  auto* g = app.add_subcommand("aggregate", "Apply a level transform to a ping file");
  g->add_option("--pings", agg.pings)->required();
  g->add_option("--level", agg.level)->required()->check(CLI::Range(0, 3));
  g->add_option("--cell-deg", agg.cell_deg);
  g->add_option("--bin-seconds", agg.bin_seconds);
  g->add_option("--min-cohort", agg.min_cohort);
  g->add_flag("--no-collapse", agg.no_collapse, "Keep duplicate rows");
  g->add_option("--out", agg.out)->required();

  AttackArgs atk;
  auto* k = app.add_subcommand("attack", "Unicity or trajectory reconstruction");
  k->add_option("--input", atk.input, "Ping or level CSV")->required();
  k->add_option("--attack", atk.attack, "unicity | reconstruct");
  k->add_option("--cell-deg", atk.cell_deg);
  k->add_option("--bin-seconds", atk.bin_seconds);
  k->add_option("-p,--points", atk.p, "Known points per trial");
  k->add_option("--targets", atk.targets);
  k->add_option("--trials", atk.trials);
  k->add_flag("--exhaustive", atk.exhaustive);
  k->add_option("--seed", atk.seed, "Random seed (required for unicity)");
  k->add_flag("--min-p", atk.min_p, "Also search the smallest p reaching the threshold");
  k->add_option("--truth-pings", atk.truth_pings, "Raw pings for scoring");
  k->add_flag("--census", atk.census, "Give the attacker per-home cohort sizes");
  k->add_option("--dump", atk.dump, "Reconstructed candidates CSV");
  k->add_option("--out", atk.out)->required();

  UtilityArgs util;
  auto* u = app.add_subcommand("utility", "Score a level file against the truth");
  u->add_option("--input", util.input)->required();
  u->add_option("--pings", util.pings, "Raw pings the input was derived from")->required();
  u->add_option("--truth", util.truth)->required();
  u->add_option("--cell-deg", util.cell_deg);
  u->add_option("--bin-seconds", util.bin_seconds);
  u->add_option("--truth-cell-deg", util.truth_cell_deg);
  u->add_option("--out", util.out)->required();
  u->add_option("--od-out", util.od_out);

  SweepArgs swp;
  auto* w = app.add_subcommand("sweep", "Risk-utility curve over the configured rungs");
  w->add_option("--seed", swp.seed, "Random seed (required)");
  w->add_option("--out-dir", swp.out_dir);
  w->add_option("--pings", swp.pings);
  w->add_option("--truth", swp.truth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return Fail("InvalidArgument", e.what(), 2);
  }

  try {
    if (s->parsed()) return RunSynth(common, synth);
    if (g->parsed()) return RunAggregate(common, agg);
    if (k->parsed()) return RunAttack(common, atk);
    if (u->parsed()) return RunUtility(common, util);
    return RunSweep(common, swp);
  } catch (const Error& e) {
    return Fail(ErrorCodeName(e.code()), e.what());
  } catch (const fs::filesystem_error& e) {
    return Fail("IoError", e.what());
  } catch (const std::exception& e) {
    return Fail("Internal", e.what());
  }
}
