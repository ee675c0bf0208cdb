// Copyright 2026 The affectrl Authors
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

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "affectrl/errors.hpp"
#include "affectrl/experiments.hpp"
#include "test_support.hpp"

namespace affectrl::experiments {
namespace {

using affectrl::testing::ConfigPath;
using affectrl::testing::TempDir;

ScenarioConfig Shipped(const std::string& name) {
  return io::LoadConfig(ConfigPath(name));
}

SeedRun Series(std::uint64_t seed, std::vector<double> values) {
  SeedRun r;
  r.seed = seed;
  r.n_episodes = static_cast<int>(values.size());
  r.series["joy"] = std::move(values);
  return r;
}

// ---------------------------------------------------------------------------
// Summaries

TEST(Summarize, SingleSeedHasZeroStdev) {
  const RunSummary s = Summarize("x", {Series(1, {0.3, 0.7, 1.1})});
  EXPECT_EQ(s.series.at("joy").mean, (std::vector<double>{0.3, 0.7, 1.1}));
  EXPECT_EQ(s.series.at("joy").stdev, (std::vector<double>{0, 0, 0}));
}

TEST(Summarize, DuplicatedSeedsKeepMean) {
  const RunSummary s =
      Summarize("x", {Series(1, {0.1, 0.2}), Series(1, {0.1, 0.2}),
                      Series(1, {0.1, 0.2})});
  EXPECT_EQ(s.series.at("joy").mean, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(s.series.at("joy").stdev, (std::vector<double>{0, 0}));
}

TEST(Summarize, TwoSeedsByHand) {
  SeedRun a = Series(1, {1.0, 3.0});
  SeedRun b = Series(2, {3.0, 7.0});
  a.orderings["o"] = true;
  b.orderings["o"] = false;
  a.scalars["x"] = 2.0;
  b.scalars["x"] = 4.0;
  const RunSummary s = Summarize("x", {a, b});
  EXPECT_EQ(s.series.at("joy").mean, (std::vector<double>{2.0, 5.0}));
  EXPECT_EQ(s.series.at("joy").stdev, (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(s.scalars.at("x").mean, 3.0);
  EXPECT_EQ(s.scalars.at("x").stdev, 1.0);
  EXPECT_EQ(s.orderings.at("o").passes, 1);
  EXPECT_EQ(s.orderings.at("o").total, 2);
  EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{1, 2}));
}

TEST(Summarize, MismatchedSchedules) {
  EXPECT_THROW(Summarize("x", {Series(1, {1.0}), Series(2, {1.0, 2.0})}),
               MismatchedSchedules);
  SeedRun a = Series(1, {1.0}), b = Series(2, {1.0});
  b.series["extra"] = {0.0};
  EXPECT_THROW(Summarize("x", {a, b}), MismatchedSchedules);
  EXPECT_THROW(Summarize("x", {}), MismatchedSchedules);
}

TEST(Summary, JsonRoundTrip) {
  SeedRun a = Series(1, {1.0, 3.0});
  a.profiles["p"] = {{0, 1}, {0.5, 0.25}};
  a.scalars["s"] = 0.1;
  a.orderings["o"] = true;
  const RunSummary s = Summarize("x", {a, a});
  const nlohmann::json j = SummaryToJson(s);
  EXPECT_EQ(SummaryToJson(SummaryFromJson(j)), j);
}

TEST(PlotData, SeriesAndProfiles) {
  SeedRun a = Series(1, {1.0, 0.5});
  a.profiles["p"] = {{2, 3}, {0.5, 0.25}};
  const RunSummary s = Summarize("x", {a});
  const io::CsvTable t = PlotData(s, "joy");
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "mean", "stdev"}));
  EXPECT_EQ(t.rows, (std::vector<std::vector<std::string>>{{"0", "1", "0"},
                                                           {"1", "0.5", "0"}}));
  EXPECT_EQ(PlotData(s, "p").rows[1][0], "3");
  EXPECT_THROW(PlotData(s, "nope"), UnknownSeries);
}

// ---------------------------------------------------------------------------
// Habituation

// Independent oracle: iterate Q <- Q + alpha (r - Q) and read joy/distress
// off the one-step TD error.
struct HabituationOracle {
  std::vector<double> joy, distress;
  HabituationOracle(double alpha, int rewarded, int total) {
    double q = 0.0;
    for (int n = 0; n < total; ++n) {
      const double r = n < rewarded ? 1.0 : 0.0;
      const double d = r - q;
      joy.push_back(std::max(d, 0.0));
      distress.push_back(std::max(-d, 0.0));
      q += alpha * d;
    }
  }
};

TEST(Habituation, MatchesRecurrence) {
  const ScenarioConfig cfg = Shipped("habituation");
  const SeedRun run = HabituationSeed(cfg, 1);
  const HabituationOracle oracle(0.1, 100, cfg.schedule.n_episodes);
  for (int n = 0; n < cfg.schedule.n_episodes; ++n) {
    ASSERT_NEAR(run.series.at("joy")[n], oracle.joy[n], 1e-9) << n;
    ASSERT_NEAR(run.series.at("distress")[n], oracle.distress[n], 1e-9) << n;
  }
  for (int n = 0; n < 100; ++n) {
    EXPECT_NEAR(run.series.at("joy")[n], std::pow(0.9, n), 1e-9);
  }
  EXPECT_NEAR(run.series.at("distress")[100], 1.0 - std::pow(0.9, 100), 1e-9);
  EXPECT_EQ(run.series.at("hope")[3], 0.0);
  EXPECT_EQ(run.series.at("fear")[3], 0.0);
}

TEST(Habituation, FullLearningRateHabituatesAtOnce) {
  ScenarioConfig cfg = Shipped("habituation");
  cfg.agent.alpha = 1.0;
  const SeedRun run = HabituationSeed(cfg, 1);
  EXPECT_EQ(run.series.at("joy")[0], 1.0);
  EXPECT_EQ(run.series.at("joy")[1], 0.0);
}

TEST(Habituation, WrongEnvironment) {
  ScenarioConfig cfg = Shipped("habituation");
  cfg.environment = TwoArmedGamble{};
  cfg.schedule.phases.clear();
  EXPECT_THROW(RunHabituation(cfg), WrongEnvironment);
  EXPECT_THROW(RunCliffFear(cfg), WrongEnvironment);
  EXPECT_THROW(RunExtinction(cfg), WrongEnvironment);
  EXPECT_THROW(RunLottery(cfg), WrongEnvironment);
  cfg.environment = RepeatedRewardChain{};
  EXPECT_THROW(RunGamble(cfg), WrongEnvironment);
}

TEST(Habituation, PlotDataFollowsClosedForm) {
  const RunSummary s = RunHabituation(Shipped("habituation"));
  const io::CsvTable t = PlotData(s, "joy");
  for (int n = 0; n < 100; ++n) {
    EXPECT_NEAR(std::stod(t.rows[n][1]), std::pow(0.9, n), 1e-9);
    EXPECT_EQ(t.rows[n][2], "0");
  }
}

// ---------------------------------------------------------------------------
// Extinction

// Exact expectation over the 2^c punishment patterns of the conditioning
// phase: fear at the stimulus is P-hat(punish) * (|punish_r| + Q), with the
// Monte Carlo rollouts unbiased for it.
struct ExtinctionOracle {
  double fear_boundary = 0.0, fear_after = 0.0;
  ExtinctionOracle(int conditioning, double p, double punish, double alpha,
                   int exposures) {
    for (int mask = 0; mask < (1 << conditioning); ++mask) {
      double q = 0.0, weight = 1.0;
      int hits = 0;
      for (int e = 0; e < conditioning; ++e) {
        const bool hit = (mask >> e) & 1;
        weight *= hit ? p : 1.0 - p;
        hits += hit;
        q += alpha * ((hit ? punish : 0.0) - q);
      }
      fear_boundary += weight * (static_cast<double>(hits) / conditioning) *
                       (-punish + q);
      const double q_after = q * std::pow(1.0 - alpha, exposures);
      fear_after += weight *
                    (static_cast<double>(hits) / (conditioning + exposures)) *
                    (-punish + q_after);
    }
  }
  double ratio() const { return fear_after / fear_boundary; }
};

TEST(Extinction, OracleRatioBelowThreshold) {
  const ExtinctionOracle o(5, 0.5, -5.0, 0.1, 50);
  EXPECT_NEAR(o.ratio(), 0.12036947330988979, 1e-12);
  EXPECT_LT(o.ratio(), 0.2);
}

TEST(Extinction, RunAgreesWithOracle) {
  const ScenarioConfig cfg = Shipped("extinction");
  RunOptions opts;
  opts.jobs = 0;
  const RunSummary s = RunExtinction(cfg, opts);
  const ExtinctionOracle o(5, 0.5, -5.0, 0.1, 50);
  const auto& f = s.series.at("fear_at_stimulus");
  const double se = f.stdev[5] / std::sqrt(static_cast<double>(cfg.seeds.size()));
  EXPECT_NEAR(f.mean[5], o.fear_boundary, 4 * se);
  EXPECT_NEAR(s.scalars.at("extinction_ratio").mean, o.ratio(), 0.015);
  EXPECT_EQ(s.orderings.at("p_punish_monotone").passes, 100);
}

TEST(Extinction, PunishEstimateFollowsCountArithmetic) {
  const ScenarioConfig cfg = Shipped("extinction");
  const SeedRun run = ExtinctionSeed(cfg, 3);
  const auto& p = run.series.at("p_punish");
  const double hits = p[5] * 5.0;
  for (int e = 5; e <= 55; ++e) {
    EXPECT_NEAR(p[e], hits / e, 1e-15) << e;
  }
}

TEST(Extinction, FrozenAgentKeepsFear) {
  ScenarioConfig cfg = Shipped("extinction");
  cfg.agent.learn_values = false;
  cfg.agent.learn_model = false;
  const SeedRun run = ExtinctionSeed(cfg, 3);
  const auto& f = run.series.at("fear_at_stimulus");
  for (int e = 6; e <= 55; ++e) EXPECT_EQ(f[e], f[5]);
}

// ---------------------------------------------------------------------------
// Gamble

// Fixed point of the (optionally optimistic) Bellman operator on the exact
// gamble: the choice state is the only nonterminal state.
std::pair<double, double> GambleFixedPoint(const TwoArmedGamble& g, double beta) {
  const double safe = g.safe_r;
  const double mean = g.risky_p * g.risky_r + (1.0 - g.risky_p) * g.risky_loss;
  const double best = std::max(g.risky_r, g.risky_loss);
  return {safe, mean + beta * (best - mean)};
}

TEST(Gamble, ValueIterationOracleMatchesEvaluateQ) {
  const TwoArmedGamble g{0.5, 2.0, 0.1, -0.1};
  const QTable q = EvaluateQ(EnumerateMdp(g), policy::Greedy{}, 0.1, 0.9);
  const auto [safe, risky] = GambleFixedPoint(g, 0.0);
  EXPECT_DOUBLE_EQ(q.at(0, layout::kSafe), safe);
  EXPECT_NEAR(q.at(0, layout::kRisky), risky, 1e-15);
  EXPECT_LT(risky, safe);
  EXPECT_GT(GambleFixedPoint(g, 1.0).second, safe);
}

TEST(Gamble, AsymptoticChoiceMatchesOracle) {
  ScenarioConfig cfg = Shipped("gamble");
  cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  RunOptions opts;
  opts.jobs = 0;
  const RunSummary s = RunGamble(cfg, opts);
  const double eps = std::get<policy::EpsilonGreedy>(cfg.agent.policy).eps;
  // Greedy on the oracle values picks safe under Expected and risky under
  // full optimism; exploration spreads eps uniformly.
  EXPECT_NEAR(s.scalars.at("Expected/risky_fraction").mean, eps / 2, 0.03);
  EXPECT_NEAR(s.scalars.at("Optimistic-1/risky_fraction").mean, 1 - eps / 2,
              0.03);
  EXPECT_LT(s.scalars.at("Expected/risky_fraction").mean, 0.2);
  EXPECT_GT(s.scalars.at("Optimistic-1/risky_fraction").mean, 0.8);
}

TEST(Gamble, OptimisticValuesApproachBestOutcome) {
  ScenarioConfig cfg = Shipped("gamble");
  cfg.gamble->modes = {td::Optimistic{1.0}};
  const SeedRun run = GambleSeed(cfg, 1);
  const auto& q = run.series.at("Optimistic-1/q_start");
  const auto& risky = run.series.at("Optimistic-1/risky");
  // Last risky first-choice value seen is the optimistic fixed point.
  for (int e = cfg.schedule.n_episodes - 1; e >= 0; --e) {
    if (risky[e] == 1.0) {
      EXPECT_NEAR(q[e], 2.0, 1e-6);
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Cliff fear

TEST(CliffFear, ClosenessIsDiscountedCopyOfTheEdge) {
  const ScenarioConfig cfg = Shipped("cliff_fear");
  const SeedRun run = CliffFearSeed(cfg, 1);
  const auto& prof = run.profiles.at("closeness");
  ASSERT_EQ(prof.first, (std::vector<double>{0, 1, 2, 3}));
  const double edge = prof.second[3];
  EXPECT_GT(edge, 0.0);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(prof.second[k], std::pow(0.9, 3 - k) * edge, 1e-12 * edge);
  }
  EXPECT_TRUE(run.orderings.at("closeness"));
  EXPECT_TRUE(run.orderings.at("rumination"));
}

TEST(CliffFear, ConvergedGreedyValuesAreExact) {
  const ScenarioConfig cfg = Shipped("cliff_fear");
  Agent agent(cfg, 1, cfg.agent.td_mode, "t");
  // Moving forward from cell 5 reaches the goal unless it slips.
  EXPECT_NEAR(agent.q().at(5, layout::kForward), 0.9 * 10.0 + 0.1 * -10.0,
              1e-12);
}

TEST(CliffFear, RejectsPositionsOutsideCorridor) {
  ScenarioConfig cfg = Shipped("cliff_fear");
  cfg.cliff->positions = {0, 9};
  EXPECT_THROW(CliffFearSeed(cfg, 1), InvalidParameter);
}

// ---------------------------------------------------------------------------
// Lottery

TEST(Lottery, ExactValuesAndRevealSigns) {
  const ScenarioConfig cfg = Shipped("lottery");
  Agent agent(cfg, 1, cfg.agent.td_mode, "t");
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(agent.q().at(i, 0), std::pow(0.5, 3 - i) * 100.0, 1e-12);
  }
  const SeedRun run = LotterySeed(cfg, 1);
  EXPECT_TRUE(run.orderings.at("reveal_sign"));
  EXPECT_TRUE(run.orderings.at("ledger_bounds"));
  EXPECT_TRUE(run.orderings.at("bust_disappointment"));
  EXPECT_TRUE(run.orderings.at("telescoping"));
  EXPECT_GT(run.scalars.at("busts"), 0.0);
  EXPECT_GT(run.scalars.at("jackpots"), 0.0);
}

// ---------------------------------------------------------------------------
// Reproducibility, annotation

TEST(Reproducibility, TracesAreByteIdentical) {
  TempDir a_dir, b_dir_holder;
  const std::string b_dir = b_dir_holder / "b";
  ScenarioConfig cfg = Shipped("gamble");
  cfg.seeds = {4, 5};
  cfg.schedule.n_episodes = 200;
  RunOptions a;
  a.out_dir = a_dir.str();
  a.jobs = 1;
  RunOptions b = a;
  b.out_dir = b_dir;
  b.jobs = 2;
  const RunSummary sa = RunGamble(cfg, a);
  const RunSummary sb = RunGamble(cfg, b);
  EXPECT_EQ(SummaryToJson(sa), SummaryToJson(sb));
  int compared = 0;
  for (const auto& entry : std::filesystem::directory_iterator(a_dir.str())) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    EXPECT_EQ(io::ReadFile(entry.path().string()),
              io::ReadFile(b_dir + "/" + name))
        << name;
    ++compared;
  }
  EXPECT_GE(compared, 9);
}

io::CsvTable DropDerived(const io::CsvTable& t) {
  io::CsvTable out;
  std::vector<std::size_t> keep;
  const auto& derived = io::DerivedTraceColumns();
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (std::find(derived.begin(), derived.end(), t.header[i]) == derived.end()) {
      keep.push_back(i);
      out.header.push_back(t.header[i]);
    }
  }
  for (const auto& row : t.rows) {
    std::vector<std::string> r;
    for (std::size_t k : keep) r.push_back(row[k]);
    out.rows.push_back(r);
  }
  return out;
}

TEST(Annotate, ReproducesFrozenRunsBitExactly) {
  for (const char* name : {"lottery", "cliff_fear"}) {
    TempDir dir;
    ScenarioConfig cfg = Shipped(name);
    cfg.seeds = {11};
    cfg.schedule.n_episodes = 30;
    RunOptions opts;
    opts.out_dir = dir.str();
    RunScenario(cfg, opts);
    const io::CsvTable trace =
        io::ParseCsv(io::ReadFile(dir / "trace_seed11.csv"));
    const io::Snapshot snap = io::LoadSnapshot(dir / "snapshot_seed11.json");
    ASSERT_GT(trace.rows.size(), 0u);
    EXPECT_EQ(Annotate(trace, snap).rows, trace.rows) << name;
    // Stripping the derived columns and recomputing them gives them back.
    EXPECT_EQ(io::WriteCsv(Annotate(DropDerived(trace), snap)),
              io::WriteCsv(trace))
        << name;
  }
}

TEST(Annotate, SelfLoopWithUnchangedValue) {
  TabularExplicit t;
  t.n_states = 2;
  t.terminal = {1};
  t.transitions = {{0, 0, 0, 0.5, 0.0}, {0, 0, 1, 0.5, 1.0}};
  io::Snapshot snap;
  snap.config.scenario = "habituation";
  snap.config.environment = t;
  snap.config.seeds = {1};
  const TabularMdp m = EnumerateMdp(t);
  snap.q = QTable(m, 0.1, 0.9);
  snap.q.set(0, 0, 2.0);
  snap.model = TransitionModel::Exact(m);
  io::CsvTable trace;
  trace.header = {"state", "action", "reward", "next_state"};
  trace.rows = {{"0", "0", "0", "0"}};
  const io::CsvTable out = Annotate(trace, snap);
  ASSERT_EQ(out.header.at(4), "td_error");
  EXPECT_DOUBLE_EQ(std::stod(out.rows[0][4]), (0.9 - 1.0) * 2.0);
  EXPECT_EQ(out.rows[0][6], out.rows[0][4].substr(1));  // distress = -delta
}

TEST(Annotate, SchemaErrorsAndEmptyInput) {
  io::Snapshot snap;
  snap.config = Shipped("lottery");
  const TabularMdp m = EnumerateMdp(snap.config.environment);
  snap.q = QTable(m, 0.1, 1.0);
  snap.model = TransitionModel::Exact(m);
  io::CsvTable missing;
  missing.header = {"state", "action", "reward"};
  EXPECT_THROW(Annotate(missing, snap), SchemaMismatch);
  io::CsvTable bad;
  bad.header = {"state", "action", "reward", "next_state"};
  bad.rows = {{"0", "0", "zero", "1"}};
  EXPECT_THROW(Annotate(bad, snap), SchemaMismatch);
  bad.rows = {{"42", "0", "0", "1"}};
  EXPECT_THROW(Annotate(bad, snap), SchemaMismatch);

  const io::CsvTable empty = Annotate(io::CsvTable{}, snap);
  EXPECT_EQ(empty.header, io::TraceColumns());
  EXPECT_TRUE(empty.rows.empty());
  io::CsvTable header_only;
  header_only.header = io::TraceColumns();
  EXPECT_EQ(Annotate(header_only, snap).header, io::TraceColumns());
}

}  // namespace
}  // namespace affectrl::experiments
