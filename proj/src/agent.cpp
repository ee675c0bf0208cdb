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
#include <cmath>
#include <charconv>

#include "affectrl/errors.hpp"
#include "affectrl/experiments.hpp"
#include "affectrl/format.hpp"

namespace affectrl::experiments {
namespace {

// Sarsa episodes on the true environment until max |delta| per episode stays
// below the tolerance for a full window.
void PretrainSarsa(const ScenarioConfig& cfg, std::uint64_t seed, QTable& q) {
  const PretrainConfig& pt = cfg.agent.pretrain;
  EnvironmentInstance env(SpecForEpisode(cfg, 0), seed);
  env.set_rng(Rng(seed, StreamId("pretrain-env")));
  Rng rng(seed, StreamId("pretrain-agent"));
  int quiet = 0;
  for (int e = 0; e < pt.max_episodes && quiet < pt.window; ++e) {
    StateId s = env.Reset();
    ActionId a = SelectAction(q, s, pt.policy, rng);
    double worst = 0.0;
    for (int step = 0; step < cfg.schedule.max_steps; ++step) {
      const StepOutcome o = env.Step(a);
      std::optional<ActionId> next;
      if (!o.terminal) next = SelectAction(q, o.next_state, pt.policy, rng);
      const double d = SarsaUpdate(q, s, a, o.reward, o.next_state, next);
      worst = std::max(worst, std::abs(d));
      if (o.terminal) break;
      s = o.next_state;
      a = *next;
    }
    quiet = worst < pt.tolerance ? quiet + 1 : 0;
  }
}

std::optional<long long> ParseInt(const std::string& s) {
  long long v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) return std::nullopt;
  return v;
}

double ParseReal(const std::string& s, const std::string& column) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw SchemaMismatch("column '" + column + "' holds non-numeric value '" +
                         s + "'");
  }
  return v;
}

}  // namespace

Rng AnticipationRng(std::uint64_t seed, int episode, int step) {
  return Rng(seed, StreamId("anticipate", {static_cast<std::uint64_t>(episode),
                                           static_cast<std::uint64_t>(step)}));
}

std::string EpisodeKey(int episode) {
  return "episode-" + std::to_string(episode);
}

// ---------------------------------------------------------------------------
// Agent

Agent::Agent(const ScenarioConfig& cfg, std::uint64_t seed,
             const TdMode& td_mode, const std::string& run_id)
    : cfg_(cfg),
      seed_(seed),
      run_id_(run_id),
      rng_(seed, StreamId("agent")) {
  cfg_.agent.td_mode = td_mode;
  learning_ = MakeLearningConfig(cfg_.agent);
  emotion_ = MakeEmotionConfig(cfg_, td_mode);
  ValidatePolicy(cfg_.agent.policy);
  ValidateAnticipation(emotion_.anticipation);

  const TabularMdp mdp = EnumerateMdp(SpecForEpisode(cfg_, 0));
  const AgentConfig& a = cfg_.agent;
  switch (a.pretrain.method) {
    case PretrainConfig::Method::kExact:
      q_ = EvaluateQ(mdp, a.pretrain.policy, a.alpha, a.gamma);
      break;
    case PretrainConfig::Method::kSarsa:
      q_ = QTable(mdp, a.alpha, a.gamma, a.initial_q);
      PretrainSarsa(cfg_, seed, q_);
      break;
    case PretrainConfig::Method::kNone:
      q_ = QTable(mdp, a.alpha, a.gamma, a.initial_q);
      break;
  }
  if (cfg_.emotion.exact_model) {
    model_ = TransitionModel::Exact(mdp);
    learning_.learn_model = false;
  } else {
    model_ = TransitionModel(mdp);
  }
}

void Agent::OnSpecChange(const EnvironmentSpec& spec) {
  if (cfg_.emotion.exact_model) model_ = TransitionModel::Exact(EnumerateMdp(spec));
}

Agent::Episode Agent::RunEpisode(EnvironmentInstance& env, int episode,
                                 io::TraceWriter* trace,
                                 nlohmann::json* audit) {
  Episode ep;
  StateId s = env.Reset();
  ActionId a = SelectAction(q_, s, cfg_.agent.policy, rng_);
  ep.first_action = a;
  ep.initial_q = q_.at(s, a);
  const std::string key = EpisodeKey(episode);
  const double eta = cfg_.emotion.motivation_eta;
  auto choose = [&](StateId next, const Anticipation& ant) {
    const std::vector<double> pref = MotivatedPreferences(q_, next, ant, eta);
    return SampleIndex(ActionProbabilities(pref, cfg_.agent.policy), rng_);
  };
  for (int step = 0; step < cfg_.schedule.max_steps; ++step) {
    const StepOutcome o = env.Step(a);
    const Transition t{s, a, o.reward, o.next_state, o.terminal};
    StepResult r = EmotionStep(q_, model_, t, choose, learning_, emotion_,
                               ledger_, key, AnticipationRng(seed_, episode, step));
    ep.ret += o.reward;
    if (trace != nullptr) {
      io::TraceRow row;
      row.run_id = run_id_;
      row.seed = seed_;
      row.episode = episode;
      row.step = step;
      row.state = s;
      row.action = a;
      row.reward = o.reward;
      row.next_state = o.next_state;
      row.terminal = o.terminal;
      row.next_action = r.next_action;
      row.td_error = r.td_error;
      row.signal = r.signal;
      trace->Append(row);
    }
    if (audit != nullptr && !r.anticipation.records.empty()) {
      nlohmann::json recs = nlohmann::json::array();
      for (const RolloutRecord& rec : r.anticipation.records) {
        recs.push_back({{"rollout", rec.rollout},
                        {"k", rec.k},
                        {"state", rec.state},
                        {"action", rec.action},
                        {"next_state", rec.next_state},
                        {"td_error", rec.td_error}});
      }
      audit->push_back({{"run_id", run_id_},
                        {"episode", episode},
                        {"step", step},
                        {"state", o.next_state},
                        {"hope", r.anticipation.hope},
                        {"fear", r.anticipation.fear},
                        {"records", recs}});
    }
    const bool done = o.terminal;
    const std::optional<ActionId> next = r.next_action;
    ep.steps.push_back({t, std::move(r)});
    if (done) {
      ep.terminated = true;
      break;
    }
    s = o.next_state;
    a = *next;
  }
  if (!ep.terminated) ledger_.Discard(key);
  return ep;
}

io::Snapshot Agent::MakeSnapshot(const EnvironmentInstance& env) const {
  io::Snapshot snap;
  snap.config = cfg_;
  snap.seed = seed_;
  snap.q = q_;
  snap.model = model_;
  snap.rng["agent"] = rng_.cursor();
  snap.rng["env"] = env.rng().cursor();
  return snap;
}

// ---------------------------------------------------------------------------
// Annotation

io::CsvTable Annotate(const io::CsvTable& trace, const io::Snapshot& snapshot) {
  if (trace.header.empty() && trace.rows.empty()) {
    io::CsvTable out;
    out.header = io::TraceColumns();
    return out;
  }
  const auto& derived = io::DerivedTraceColumns();
  auto column = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(trace.header.begin(), trace.header.end(), name);
    if (it == trace.header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - trace.header.begin());
  };
  std::size_t required[4];
  const char* names[4] = {"state", "action", "reward", "next_state"};
  for (int i = 0; i < 4; ++i) {
    const auto c = column(names[i]);
    if (!c) {
      throw SchemaMismatch(std::string("trace lacks required column '") +
                           names[i] + "'");
    }
    required[i] = *c;
  }
  const auto c_seed = column("seed");
  const auto c_episode = column("episode");
  const auto c_step = column("step");
  const auto c_terminal = column("terminal");
  const auto c_next_action = column("next_action");

  io::CsvTable out;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < trace.header.size(); ++i) {
    if (std::find(derived.begin(), derived.end(), trace.header[i]) ==
        derived.end()) {
      kept.push_back(i);
      out.header.push_back(trace.header[i]);
    }
  }
  for (const auto& d : derived) out.header.push_back(d);

  QTable q = snapshot.q;
  TransitionModel model = snapshot.model;
  LearningConfig learning = MakeLearningConfig(snapshot.config.agent);
  learning.learn_values = false;
  learning.learn_model = false;
  EmotionConfig emotion =
      MakeEmotionConfig(snapshot.config, snapshot.config.agent.td_mode);
  emotion.rumination_writes_back = false;
  AnticipationLedger ledger;

  auto integer = [&](const std::vector<std::string>& row, std::size_t col,
                     const std::string& name) {
    const auto v = ParseInt(row[col]);
    if (!v || *v < 0) {
      throw SchemaMismatch("column '" + name + "' holds invalid value '" +
                           row[col] + "'");
    }
    return *v;
  };
  auto state_of = [&](const std::vector<std::string>& row, std::size_t col,
                      const std::string& name) {
    const long long v = integer(row, col, name);
    if (static_cast<std::size_t>(v) >= q.n_states()) {
      throw SchemaMismatch("state " + std::to_string(v) +
                           " is outside the snapshot's environment");
    }
    return static_cast<StateId>(v);
  };

  std::optional<int> current_episode;
  int step_in_episode = 0;
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const auto& row = trace.rows[i];
    const StateId s = state_of(row, required[0], "state");
    const long long a_raw = integer(row, required[1], "action");
    if (static_cast<std::size_t>(a_raw) >= q.n_actions(s)) {
      throw SchemaMismatch("action " + std::to_string(a_raw) +
                           " is not valid in state " + std::to_string(s));
    }
    const ActionId a = static_cast<ActionId>(a_raw);
    const double r = ParseReal(row[required[2]], "reward");
    const StateId next = state_of(row, required[3], "next_state");
    const std::uint64_t seed =
        c_seed ? static_cast<std::uint64_t>(integer(row, *c_seed, "seed"))
               : snapshot.seed;
    const int episode =
        c_episode ? static_cast<int>(integer(row, *c_episode, "episode")) : 0;
    if (!current_episode || *current_episode != episode) {
      if (current_episode) ledger.Discard(EpisodeKey(*current_episode));
      current_episode = episode;
      step_in_episode = 0;
    }
    const int step =
        c_step ? static_cast<int>(integer(row, *c_step, "step")) : step_in_episode;
    ++step_in_episode;
    const bool terminal = c_terminal ? row[*c_terminal] == "1" ||
                                           row[*c_terminal] == "true"
                                     : q.is_terminal(next);

    std::optional<ActionId> next_action;
    if (c_next_action && !row[*c_next_action].empty()) {
      next_action =
          static_cast<ActionId>(integer(row, *c_next_action, "next_action"));
    } else if (i + 1 < trace.rows.size()) {
      const auto& nrow = trace.rows[i + 1];
      const int nep =
          c_episode ? static_cast<int>(integer(nrow, *c_episode, "episode")) : 0;
      if (nep == episode && state_of(nrow, required[0], "state") == next) {
        next_action =
            static_cast<ActionId>(integer(nrow, required[1], "action"));
      }
    }
    if (!terminal && !q.is_terminal(next)) {
      if (!next_action) {
        next_action = static_cast<ActionId>(
            std::max_element(q.row(next).begin(), q.row(next).end()) -
            q.row(next).begin());
      }
      if (*next_action >= q.n_actions(next)) {
        throw SchemaMismatch("next_action is not valid in its state");
      }
    }
    const Transition t{s, a, r, next, terminal};
    const StepResult res = EmotionStep(
        q, model, t,
        [&](StateId, const Anticipation&) { return *next_action; }, learning,
        emotion, ledger, EpisodeKey(episode),
        AnticipationRng(seed, episode, step));

    std::vector<std::string> line;
    for (std::size_t k : kept) line.push_back(row[k]);
    line.push_back(ShortestDouble(res.td_error));
    line.push_back(ShortestDouble(res.signal.joy));
    line.push_back(ShortestDouble(res.signal.distress));
    line.push_back(ShortestDouble(res.signal.hope));
    line.push_back(ShortestDouble(res.signal.fear));
    line.push_back(ShortestDouble(res.signal.disappointment));
    line.push_back(ShortestDouble(res.signal.relief));
    out.rows.push_back(std::move(line));
  }
  return out;
}

}  // namespace affectrl::experiments
