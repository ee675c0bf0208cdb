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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <functional>
#include <memory>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "affectrl/errors.hpp"
#include "affectrl/experiments.hpp"

namespace affectrl::experiments {
namespace {

namespace fs = std::filesystem;

const char* const kEmotionFields[] = {"joy",  "distress",       "hope",
                                      "fear", "disappointment", "relief"};

template <typename Spec>
const Spec& RequireKind(const ScenarioConfig& cfg, const char* scenario) {
  const Spec* spec = std::get_if<Spec>(&cfg.environment);
  if (spec == nullptr) {
    throw WrongEnvironment(std::string(scenario) + " needs a " +
                           KindName(Spec{}) + " environment, got " +
                           KindName(cfg.environment));
  }
  return *spec;
}

std::string Path(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

std::string SafeName(std::string name) {
  for (char& c : name) {
    if (c == '/' || c == '\\' || c == ' ') c = '.';
  }
  return name;
}

// Owns the optional per-seed artifacts.
struct Artifacts {
  std::unique_ptr<io::TraceWriter> trace;
  std::unique_ptr<nlohmann::json> audit;
  std::string out_dir;
  std::string suffix;

  Artifacts(const RunOptions& opts, const std::string& tag, std::uint64_t seed)
      : out_dir(opts.out_dir) {
    suffix = (tag.empty() ? "" : SafeName(tag) + "_") + "seed" +
             std::to_string(seed);
    if (out_dir.empty()) return;
    fs::create_directories(out_dir);
    trace = std::make_unique<io::TraceWriter>(
        Path(out_dir, "trace_" + suffix + ".csv"));
    if (opts.audit_rollouts) {
      audit = std::make_unique<nlohmann::json>(nlohmann::json::array());
    }
  }

  io::TraceWriter* trace_ptr() { return trace.get(); }
  nlohmann::json* audit_ptr() { return audit.get(); }

  void Finish(const Agent& agent, const EnvironmentInstance& env) {
    if (out_dir.empty()) return;
    trace->Flush();
    io::SaveSnapshot(agent.MakeSnapshot(env),
                     Path(out_dir, "snapshot_" + suffix + ".json"));
    if (audit) {
      io::WriteFile(Path(out_dir, "audit_" + suffix + ".json"),
                    io::CanonicalDump(*audit));
    }
  }
};

// Episode starts at which the environment parameters change.
std::set<int> PhaseStarts(const ScenarioConfig& cfg) {
  std::set<int> starts;
  for (const Phase& p : cfg.schedule.phases) {
    if (p.start > 0) starts.insert(p.start);
  }
  return starts;
}

void RecordEpisode(SeedRun& run, const std::string& prefix, int e,
                   const Agent::Episode& ep) {
  double sums[6] = {0, 0, 0, 0, 0, 0};
  double td = 0.0;
  for (const auto& st : ep.steps) {
    const EmotionSignal& g = st.result.signal;
    sums[0] += g.joy;
    sums[1] += g.distress;
    sums[2] += g.hope;
    sums[3] += g.fear;
    sums[4] += g.disappointment;
    sums[5] += g.relief;
    td += st.result.td_error;
  }
  for (int i = 0; i < 6; ++i) run.series[prefix + kEmotionFields[i]][e] = sums[i];
  run.series[prefix + "td_error"][e] = td;
  run.series[prefix + "return"][e] = ep.ret;
  run.series[prefix + "steps"][e] = static_cast<double>(ep.steps.size());
  run.series[prefix + "q_start"][e] = ep.initial_q;
}

void InitSeries(SeedRun& run, const std::string& prefix, int n) {
  for (const char* f : kEmotionFields) run.series[prefix + f].assign(n, 0.0);
  for (const char* f : {"td_error", "return", "steps", "q_start"}) {
    run.series[prefix + f].assign(n, 0.0);
  }
}

// Plain episode loop; `done` sees the agent after the last episode.
template <typename PerEpisode, typename Done>
SeedRun RunEpisodes(const ScenarioConfig& cfg, std::uint64_t seed,
                    const RunOptions& opts, PerEpisode&& per_episode,
                    Done&& done) {
  SeedRun run;
  run.seed = seed;
  run.n_episodes = cfg.schedule.n_episodes;
  InitSeries(run, "", run.n_episodes);
  EnvironmentInstance env(SpecForEpisode(cfg, 0), seed);
  Agent agent(cfg, seed, cfg.agent.td_mode, cfg.scenario);
  Artifacts art(opts, "", seed);
  const std::set<int> starts = PhaseStarts(cfg);
  for (int e = 0; e < run.n_episodes; ++e) {
    if (starts.count(e)) {
      const EnvironmentSpec spec = SpecForEpisode(cfg, e);
      env.SetSpec(spec);
      agent.OnSpecChange(spec);
    }
    const Agent::Episode ep =
        agent.RunEpisode(env, e, art.trace_ptr(), art.audit_ptr());
    RecordEpisode(run, "", e, ep);
    per_episode(run, agent, e, ep);
  }
  art.Finish(agent, env);
  done(run, agent);
  return run;
}

void NoEpisodeHook(SeedRun&, Agent&, int, const Agent::Episode&) {}
void NoDoneHook(SeedRun&, Agent&) {}

std::vector<SeedRun> RunSeeds(
    const ScenarioConfig& cfg, const RunOptions& opts,
    const std::function<SeedRun(std::uint64_t)>& one) {
  const std::size_t n = cfg.seeds.size();
  std::vector<SeedRun> runs(n);
  std::vector<std::exception_ptr> errors(n);
  std::size_t jobs = opts.jobs > 0 ? static_cast<std::size_t>(opts.jobs)
                                   : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        spdlog::debug("{}: seed {} started", cfg.scenario, cfg.seeds[i]);
        runs[i] = one(cfg.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return runs;
}

void WriteOutputs(const RunSummary& s, const RunOptions& opts) {
  if (opts.out_dir.empty()) return;
  fs::create_directories(fs::path(opts.out_dir) / "plots");
  io::WriteFile(Path(opts.out_dir, "summary.json"),
                io::CanonicalDump(SummaryToJson(s)));
  auto plot = [&](const std::string& name) {
    io::WriteFile(
        (fs::path(opts.out_dir) / "plots" / (SafeName(name) + ".csv")).string(),
        io::WriteCsv(PlotData(s, name)));
  };
  for (const auto& [name, unused] : s.series) plot(name);
  for (const auto& [name, unused] : s.profiles) plot(name);
}

template <typename SeedFn>
RunSummary RunAll(const ScenarioConfig& cfg, const RunOptions& opts,
                  SeedFn seed_fn) {
  const auto runs = RunSeeds(cfg, opts, [&](std::uint64_t seed) {
    return seed_fn(cfg, seed, opts);
  });
  return Summarize(cfg.scenario, runs);
}

bool StrictlyIncreasing(const std::vector<double>& xs) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) return false;
  }
  return true;
}

bool NonDecreasing(const std::vector<double>& xs) {
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (xs[i] < xs[i - 1]) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Habituation

SeedRun HabituationSeed(const ScenarioConfig& cfg, std::uint64_t seed,
                        const RunOptions& opts) {
  RequireKind<RepeatedRewardChain>(cfg, "habituation");
  return RunEpisodes(cfg, seed, opts, NoEpisodeHook, NoDoneHook);
}

RunSummary RunHabituation(const ScenarioConfig& cfg, const RunOptions& opts) {
  RequireKind<RepeatedRewardChain>(cfg, "habituation");
  RunSummary s = RunAll(cfg, opts, HabituationSeed);
  WriteOutputs(s, opts);
  return s;
}

// ---------------------------------------------------------------------------
// Cliff fear: perception of control, rumination and closeness of threat

namespace {
void ProbeCliff(const ScenarioConfig& cfg, const CliffSweep& sweep,
                std::uint64_t seed, SeedRun& run, Agent& agent);
}  // namespace

SeedRun CliffFearSeed(const ScenarioConfig& cfg, std::uint64_t seed,
                      const RunOptions& opts) {
  const SlipperyCliff& cliff = RequireKind<SlipperyCliff>(cfg, "cliff_fear");
  const CliffSweep sweep = cfg.cliff.value_or(CliffSweep{});
  auto check_cell = [&](int c) {
    if (c < 0 || c >= cliff.length) {
      throw InvalidParameter("cliff_sweep position " + std::to_string(c) +
                             " is outside the corridor");
    }
  };
  for (int c : sweep.positions) check_cell(c);
  for (int c : sweep.closeness_positions) check_cell(c);
  check_cell(sweep.probe_cell);

  // Probes use the agent state as it stands after the episodes.
  return RunEpisodes(cfg, seed, opts, NoEpisodeHook,
                     [&](SeedRun& run, Agent& agent) {
                       ProbeCliff(cfg, sweep, seed, run, agent);
                     });
}

namespace {

void ProbeCliff(const ScenarioConfig& cfg, const CliffSweep& sweep,
                std::uint64_t seed, SeedRun& run, Agent& agent) {
  const Rng probe(seed, StreamId("probe"));
  AnticipationParams base = MakeEmotionConfig(cfg, cfg.agent.td_mode).anticipation;
  auto fear_at = [&](const PolicyKind& p, int depth, int n, int cell) {
    AnticipationParams params = base;
    params.sim_policy = p;
    params.depth = depth;
    params.n_rollouts = n;
    return Anticipate(agent.q(), agent.model(), static_cast<StateId>(cell),
                      params, probe)
        .fear;
  };

  for (const PolicyKind& p : sweep.sim_policies) {
    const std::string pn = PolicyName(p);
    for (int d : sweep.depths) {
      for (int n : sweep.n_rollouts) {
        const std::string tag =
            pn + "/d" + std::to_string(d) + "/n" + std::to_string(n);
        auto& prof = run.profiles["fear_by_position/" + tag];
        for (int c : sweep.positions) {
          const double f = fear_at(p, d, n, c);
          run.scalars["fear/" + tag + "/pos" + std::to_string(c)] = f;
          prof.first.push_back(c);
          prof.second.push_back(f);
        }
      }
    }
  }

  // Perception of control: fear rises along the policy list.
  std::vector<double> control;
  for (const PolicyKind& p : sweep.sim_policies) {
    control.push_back(fear_at(p, sweep.ordering_depth, sweep.ordering_rollouts,
                              sweep.probe_cell));
    run.scalars["control/" + PolicyName(p)] = control.back();
  }
  run.orderings["control"] = StrictlyIncreasing(control);

  // Rumination: deeper imagination never lowers fear.
  std::vector<int> depths = sweep.depths;
  std::sort(depths.begin(), depths.end());
  bool rumination = true;
  for (const PolicyKind& p : sweep.sim_policies) {
    std::vector<double> by_depth;
    for (int d : depths) {
      by_depth.push_back(
          fear_at(p, d, sweep.ordering_rollouts, sweep.probe_cell));
      run.scalars["rumination/" + PolicyName(p) + "/d" + std::to_string(d)] =
          by_depth.back();
    }
    rumination = rumination && NonDecreasing(by_depth);
  }
  run.orderings["rumination"] = rumination;

  // Closeness of threat: fear grows as the agent nears the slippery part.
  std::vector<double> closeness;
  auto& prof = run.profiles["closeness"];
  for (int c : sweep.closeness_positions) {
    closeness.push_back(fear_at(sweep.sim_policies.front(),
                                sweep.ordering_depth, sweep.closeness_rollouts,
                                c));
    prof.first.push_back(c);
    prof.second.push_back(closeness.back());
  }
  run.orderings["closeness"] = StrictlyIncreasing(closeness);
}

}  // namespace

RunSummary RunCliffFear(const ScenarioConfig& cfg, const RunOptions& opts) {
  RequireKind<SlipperyCliff>(cfg, "cliff_fear");
  RunSummary s = RunAll(cfg, opts, CliffFearSeed);
  WriteOutputs(s, opts);
  return s;
}

// ---------------------------------------------------------------------------
// Extinction by new learning

namespace {

int ExtinctionBoundary(const ScenarioConfig& cfg) {
  for (const Phase& p : cfg.schedule.phases) {
    if (p.start > 0) return p.start;
  }
  throw InvalidParameter("extinction needs a phase boundary after episode 0");
}

}  // namespace

SeedRun ExtinctionSeed(const ScenarioConfig& cfg, std::uint64_t seed,
                       const RunOptions& opts) {
  const RepeatedRewardChain& chain =
      RequireKind<RepeatedRewardChain>(cfg, "extinction");
  const ExtinctionSettings ext = cfg.extinction.value_or(ExtinctionSettings{});
  const int boundary = ExtinctionBoundary(cfg);
  const int n = cfg.schedule.n_episodes;
  if (boundary + ext.exposures >= n) {
    throw InvalidParameter("schedule too short for the requested exposures");
  }
  const StateId stimulus = static_cast<StateId>(chain.length - 1);
  const StateId punish = layout::ChainPunish(chain);
  const Rng probe(seed, StreamId("probe"));
  const AnticipationParams params =
      MakeEmotionConfig(cfg, cfg.agent.td_mode).anticipation;

  SeedRun run;
  run.seed = seed;
  run.n_episodes = n;
  InitSeries(run, "", n);
  run.series["fear_at_stimulus"].assign(n, 0.0);
  run.series["hope_at_stimulus"].assign(n, 0.0);
  run.series["p_punish"].assign(n, 0.0);
  EnvironmentInstance env(SpecForEpisode(cfg, 0), seed);
  Agent agent(cfg, seed, cfg.agent.td_mode, cfg.scenario);
  Artifacts art(opts, "", seed);
  const std::set<int> starts = PhaseStarts(cfg);
  for (int e = 0; e < n; ++e) {
    if (starts.count(e)) {
      const EnvironmentSpec spec = SpecForEpisode(cfg, e);
      env.SetSpec(spec);
      agent.OnSpecChange(spec);
    }
    // Exposure to the stimulus: what is anticipated before acting.
    const Anticipation a = Anticipate(agent.q(), agent.model(),
                                      env.mdp().start(), params, probe);
    run.series["fear_at_stimulus"][e] = a.fear;
    run.series["hope_at_stimulus"][e] = a.hope;
    run.series["p_punish"][e] = agent.model().Visited(stimulus, 0)
                                    ? agent.model().Probability(stimulus, 0, punish)
                                    : 0.0;
    RecordEpisode(run, "", e,
                  agent.RunEpisode(env, e, art.trace_ptr(), art.audit_ptr()));
  }
  art.Finish(agent, env);

  const auto& p = run.series["p_punish"];
  bool monotone = true;
  for (int e = boundary + 1; e <= boundary + ext.exposures; ++e) {
    monotone = monotone && p[e] <= p[e - 1];
  }
  run.orderings["p_punish_monotone"] = monotone;
  const auto& f = run.series["fear_at_stimulus"];
  run.orderings["fear_reduced"] =
      f[boundary + ext.exposures] < ext.max_ratio * f[boundary];
  run.scalars["fear_at_boundary"] = f[boundary];
  run.scalars["fear_after_exposures"] = f[boundary + ext.exposures];
  return run;
}

RunSummary RunExtinction(const ScenarioConfig& cfg, const RunOptions& opts) {
  RequireKind<RepeatedRewardChain>(cfg, "extinction");
  RunSummary s = RunAll(cfg, opts, ExtinctionSeed);
  const ExtinctionSettings ext = cfg.extinction.value_or(ExtinctionSettings{});
  const int boundary = ExtinctionBoundary(cfg);
  const auto& mean = s.series.at("fear_at_stimulus").mean;
  const double before = mean[boundary];
  const double after = mean[boundary + ext.exposures];
  s.scalars["extinction_ratio"] = {before > 0.0 ? after / before : 0.0, 0.0};
  WriteOutputs(s, opts);
  return s;
}

// ---------------------------------------------------------------------------
// Optimistic TD and gambling

SeedRun GambleSeed(const ScenarioConfig& cfg, std::uint64_t seed,
                   const RunOptions& opts) {
  RequireKind<TwoArmedGamble>(cfg, "gamble");
  const GambleSettings gs = cfg.gamble.value_or(GambleSettings{});
  const int n = cfg.schedule.n_episodes;
  const int window = std::max(
      1, static_cast<int>(std::ceil(gs.measure_fraction * n)));
  const int window_start = n - window;

  SeedRun run;
  run.seed = seed;
  run.n_episodes = n;
  struct ModeStats {
    double risky_fraction, win_joy, mean_fear, persistence;
  };
  std::vector<ModeStats> stats;
  for (const TdMode& mode : gs.modes) {
    const std::string name = TdModeName(mode);
    const std::string prefix = name + "/";
    InitSeries(run, prefix, n);
    run.series[prefix + "risky"].assign(n, 0.0);
    EnvironmentInstance env(SpecForEpisode(cfg, 0), seed);
    Agent agent(cfg, seed, mode, "gamble/" + name);
    Artifacts art(opts, name, seed);
    const AnticipationParams params = agent.emotion().anticipation;
    const std::set<int> starts = PhaseStarts(cfg);

    double win_joy = 0.0, fear_sum = 0.0, hope_sum = 0.0;
    int wins = 0, risky_in_window = 0, streaks = 0, streak_len = 0;
    bool in_streak = false;
    for (int e = 0; e < n; ++e) {
      if (starts.count(e)) {
        env.SetSpec(SpecForEpisode(cfg, e));
        agent.OnSpecChange(SpecForEpisode(cfg, e));
      }
      if (e >= window_start) {
        const Anticipation a =
            Anticipate(agent.q(), agent.model(), layout::kGambleChoice, params,
                       Rng(seed, StreamId("probe", {static_cast<std::uint64_t>(e)})));
        fear_sum += a.fear;
        hope_sum += a.hope;
      }
      const Agent::Episode ep =
          agent.RunEpisode(env, e, art.trace_ptr(), art.audit_ptr());
      RecordEpisode(run, prefix, e, ep);
      const bool risky = ep.first_action == layout::kRisky;
      run.series[prefix + "risky"][e] = risky ? 1.0 : 0.0;
      for (const auto& st : ep.steps) {
        if (st.transition.next_state == layout::kGambleWin) {
          win_joy += st.result.signal.joy;
          ++wins;
        }
      }
      if (e >= window_start) {
        risky_in_window += risky;
        if (risky && !in_streak) ++streaks;
        if (risky) ++streak_len;
        in_streak = risky;
      }
    }
    art.Finish(agent, env);
    ModeStats ms;
    ms.risky_fraction = static_cast<double>(risky_in_window) / window;
    ms.win_joy = wins > 0 ? win_joy / wins : 0.0;
    ms.mean_fear = fear_sum / window;
    ms.persistence = streaks > 0 ? static_cast<double>(streak_len) / streaks : 0.0;
    stats.push_back(ms);
    run.scalars[prefix + "risky_fraction"] = ms.risky_fraction;
    run.scalars[prefix + "win_joy"] = ms.win_joy;
    run.scalars[prefix + "win_count"] = wins;
    run.scalars[prefix + "mean_fear"] = ms.mean_fear;
    run.scalars[prefix + "mean_hope"] = hope_sum / window;
    run.scalars[prefix + "persistence"] = ms.persistence;
  }
  if (stats.size() >= 2) {
    // The second mode is compared against the first (the reference).
    const ModeStats& ref = stats[0];
    const ModeStats& alt = stats[1];
    run.orderings["risk"] = alt.risky_fraction > ref.risky_fraction;
    run.orderings["joy"] = alt.win_joy > ref.win_joy;
    run.orderings["fear"] = alt.mean_fear < ref.mean_fear;
    run.orderings["persistence"] = alt.persistence > ref.persistence;
  }
  return run;
}

RunSummary RunGamble(const ScenarioConfig& cfg, const RunOptions& opts) {
  RequireKind<TwoArmedGamble>(cfg, "gamble");
  RunSummary s = RunAll(cfg, opts, GambleSeed);
  WriteOutputs(s, opts);
  return s;
}

// ---------------------------------------------------------------------------
// Lottery: hope during reveals, disappointment on a bust

SeedRun LotterySeed(const ScenarioConfig& cfg, std::uint64_t seed,
                    const RunOptions& opts) {
  const LotteryReveal& lot = RequireKind<LotteryReveal>(cfg, "lottery");
  const StateId bust = layout::LotteryBust(lot);
  const bool frozen = !cfg.agent.learn_values &&
                      (cfg.emotion.exact_model || !cfg.agent.learn_model) &&
                      !cfg.emotion.rumination_writes_back;
  const bool telescoping_applies = frozen && cfg.agent.gamma == 1.0;
  bool bounds = true, bust_disappointment = true, signs = true,
       telescoping = true;
  int busts = 0, jackpots = 0, events = 0;
  double worst_telescoping = 0.0;
  SeedRun run = RunEpisodes(
      cfg, seed, opts,
      [&](SeedRun&, Agent&, int, const Agent::Episode& ep) {
        double sum = 0.0;
        for (std::size_t i = 0; i < ep.steps.size(); ++i) {
          const auto& st = ep.steps[i];
          const double d = st.result.td_error;
          sum += d;
          const bool is_bust = st.transition.next_state == bust;
          signs = signs && (is_bust ? d < 0.0 : d > 0.0);
          if (st.result.resolution) {
            const auto& r = *st.result.resolution;
            ++events;
            bounds = bounds &&
                     r.disappointment <= r.anticipated.anticipated_joy &&
                     r.relief <= r.anticipated.anticipated_distress &&
                     r.disappointment * r.relief == 0.0;
          }
          if (is_bust) {
            ++busts;
            if (i >= 1 && cfg.emotion.kappa > 0.0) {
              bust_disappointment = bust_disappointment &&
                                    st.result.signal.disappointment > 0.0;
            }
          } else if (st.transition.terminal) {
            ++jackpots;
          }
        }
        if (telescoping_applies && ep.terminated) {
          const double gap = std::abs(sum - (ep.ret - ep.initial_q));
          worst_telescoping = std::max(worst_telescoping, gap);
          telescoping = telescoping && gap <= 1e-9;
        }
      },
      NoDoneHook);
  run.orderings["ledger_bounds"] = bounds;
  run.orderings["bust_disappointment"] = bust_disappointment;
  run.orderings["reveal_sign"] = signs;
  if (telescoping_applies) run.orderings["telescoping"] = telescoping;
  run.scalars["busts"] = busts;
  run.scalars["jackpots"] = jackpots;
  run.scalars["resolutions"] = events;
  run.scalars["max_telescoping_gap"] = worst_telescoping;
  return run;
}

RunSummary RunLottery(const ScenarioConfig& cfg, const RunOptions& opts) {
  RequireKind<LotteryReveal>(cfg, "lottery");
  RunSummary s = RunAll(cfg, opts, LotterySeed);
  WriteOutputs(s, opts);
  return s;
}

RunSummary RunScenario(const ScenarioConfig& cfg, const RunOptions& opts) {
  if (cfg.scenario == "habituation") return RunHabituation(cfg, opts);
  if (cfg.scenario == "cliff_fear") return RunCliffFear(cfg, opts);
  if (cfg.scenario == "extinction") return RunExtinction(cfg, opts);
  if (cfg.scenario == "gamble") return RunGamble(cfg, opts);
  if (cfg.scenario == "lottery") return RunLottery(cfg, opts);
  throw InvalidParameter("unknown scenario '" + cfg.scenario + "'");
}

}  // namespace affectrl::experiments
