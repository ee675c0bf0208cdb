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

#ifndef AFFECTRL_EXPERIMENTS_HPP_
#define AFFECTRL_EXPERIMENTS_HPP_

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "affectrl/config.hpp"
#include "affectrl/emotion.hpp"
#include "affectrl/io.hpp"
#include "affectrl/learner.hpp"
#include "affectrl/mdp.hpp"
#include "json.hpp"

namespace affectrl::experiments {

// Everything one seed produced.
struct SeedRun {
  std::uint64_t seed = 0;
  int n_episodes = 0;
  // Per-episode values (sum over the episode's steps for emotion fields).
  std::map<std::string, std::vector<double>> series;
  // (x, y) tables, e.g. fear by position.
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
      profiles;
  std::map<std::string, double> scalars;
  // Per-seed outcome of each ordering or property check.
  std::map<std::string, bool> orderings;
};

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> stdev;
};

struct ProfileStats {
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> stdev;
};

struct ScalarStats {
  double mean = 0.0;
  double stdev = 0.0;
};

struct OrderingStats {
  int passes = 0;
  int total = 0;
  double fraction = 0.0;
};

// Aggregate over seeds. Standard deviations are population deviations.
struct RunSummary {
  std::string scenario;
  std::vector<std::uint64_t> seeds;
  int n_episodes = 0;
  std::map<std::string, SeriesStats> series;
  std::map<std::string, ProfileStats> profiles;
  std::map<std::string, ScalarStats> scalars;
  std::map<std::string, OrderingStats> orderings;
};

struct RunOptions {
  // When nonempty, traces, snapshots and audits are written here.
  std::string out_dir;
  bool audit_rollouts = false;
  // Worker threads for seeds; 0 means hardware concurrency.
  int jobs = 1;
};

// Deterministic aggregation in the order given. Throws MismatchedSchedules
// when runs disagree on episode count or series lengths.
RunSummary Summarize(const std::string& scenario,
                     const std::vector<SeedRun>& runs);

// Scenario drivers. Each validates the environment kind (WrongEnvironment)
// and runs every seed of `cfg`.
RunSummary RunHabituation(const ScenarioConfig& cfg,
                          const RunOptions& opts = {});
RunSummary RunCliffFear(const ScenarioConfig& cfg, const RunOptions& opts = {});
RunSummary RunExtinction(const ScenarioConfig& cfg,
                         const RunOptions& opts = {});
RunSummary RunGamble(const ScenarioConfig& cfg, const RunOptions& opts = {});
RunSummary RunLottery(const ScenarioConfig& cfg, const RunOptions& opts = {});
// Dispatches on cfg.scenario.
RunSummary RunScenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

// Single-seed drivers, exposed for tests.
SeedRun HabituationSeed(const ScenarioConfig& cfg, std::uint64_t seed,
                        const RunOptions& opts = {});
SeedRun CliffFearSeed(const ScenarioConfig& cfg, std::uint64_t seed,
                      const RunOptions& opts = {});
SeedRun ExtinctionSeed(const ScenarioConfig& cfg, std::uint64_t seed,
                       const RunOptions& opts = {});
SeedRun GambleSeed(const ScenarioConfig& cfg, std::uint64_t seed,
                   const RunOptions& opts = {});
SeedRun LotterySeed(const ScenarioConfig& cfg, std::uint64_t seed,
                    const RunOptions& opts = {});

const std::vector<std::string>& ScenarioNames();

nlohmann::json SummaryToJson(const RunSummary& s);
RunSummary SummaryFromJson(const nlohmann::json& j);

// (x, mean, stdev) of a series or profile. Throws UnknownSeries.
io::CsvTable PlotData(const RunSummary& s, const std::string& series);

// Recomputes the derived columns of a trace against a frozen snapshot: the
// columns in io::DerivedTraceColumns() are dropped and recomputed in their
// canonical order at the end. Throws SchemaMismatch.
io::CsvTable Annotate(const io::CsvTable& trace, const io::Snapshot& snapshot);

// Stream of the anticipation performed after `step` of `episode`.
Rng AnticipationRng(std::uint64_t seed, int episode, int step);
std::string EpisodeKey(int episode);

// Learner + emotion state of one agent and the loop that drives it through
// episodes. Used by every scenario and by trace annotation tests.
class Agent {
 public:
  struct LoggedStep {
    Transition transition;
    StepResult result;
  };
  struct Episode {
    std::vector<LoggedStep> steps;
    double ret = 0.0;
    bool terminated = false;
    ActionId first_action = 0;
    // Q(s0, a0) before the episode began.
    double initial_q = 0.0;
  };

  // Pretrains according to cfg.agent.pretrain on the first-phase
  // environment. `td_mode` replaces cfg.agent.td_mode.
  Agent(const ScenarioConfig& cfg, std::uint64_t seed, const TdMode& td_mode,
        const std::string& run_id);

  Episode RunEpisode(EnvironmentInstance& env, int episode,
                     io::TraceWriter* trace, nlohmann::json* audit);

  // Rebuilds the exact model after a phase change, when configured.
  void OnSpecChange(const EnvironmentSpec& spec);

  QTable& q() { return q_; }
  TransitionModel& model() { return model_; }
  AnticipationLedger& ledger() { return ledger_; }
  const Rng& rng() const { return rng_; }
  const LearningConfig& learning() const { return learning_; }
  const EmotionConfig& emotion() const { return emotion_; }

  io::Snapshot MakeSnapshot(const EnvironmentInstance& env) const;

 private:
  ScenarioConfig cfg_;
  std::uint64_t seed_;
  std::string run_id_;
  QTable q_;
  TransitionModel model_;
  AnticipationLedger ledger_;
  Rng rng_;
  LearningConfig learning_;
  EmotionConfig emotion_;
};

}  // namespace affectrl::experiments

#endif  // AFFECTRL_EXPERIMENTS_HPP_
