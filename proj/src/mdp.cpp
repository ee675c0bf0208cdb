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

#include "affectrl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "affectrl/errors.hpp"

namespace affectrl {
namespace {

void CheckProbability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidSpec(std::string(name) + " must lie in [0, 1], got " +
                      std::to_string(p));
  }
}

void CheckFinite(double v, const char* name) {
  if (!std::isfinite(v)) throw InvalidSpec(std::string(name) + " is not finite");
}

// Appends (next, p, r) unless p is zero.
void Push(std::vector<Outcome>& outs, StateId next, double p, double r) {
  if (p > 0.0) outs.push_back({next, p, r});
}

TabularMdp Build(const RepeatedRewardChain& c) {
  if (c.length <= 0) throw InvalidSpec("length must be positive");
  CheckProbability(c.punish_p, "punish_p");
  CheckFinite(c.reward, "reward");
  CheckFinite(c.punish_r, "punish_r");
  const std::size_t n = static_cast<std::size_t>(c.length);
  TabularMdp mdp(n + 2, 0);
  for (StateId s = 0; s < n; ++s) {
    std::vector<Outcome> outs;
    if (s + 1 < n) {
      Push(outs, s + 1, 1.0, 0.0);
    } else {
      Push(outs, layout::ChainGoal(c), 1.0 - c.punish_p, c.reward);
      Push(outs, layout::ChainPunish(c), c.punish_p, c.punish_r);
    }
    mdp.AddAction(s, "forward", std::move(outs));
  }
  mdp.MarkTerminal(layout::ChainGoal(c));
  mdp.MarkTerminal(layout::ChainPunish(c));
  return mdp;
}

TabularMdp Build(const SlipperyCliff& c) {
  if (c.length <= 0) throw InvalidSpec("length must be positive");
  if (c.cliff_start < 0) throw InvalidSpec("cliff_start must be nonnegative");
  CheckProbability(c.slip_p, "slip_p");
  CheckFinite(c.goal_r, "goal_r");
  CheckFinite(c.fall_penalty, "fall_penalty");
  const std::size_t n = static_cast<std::size_t>(c.length);
  const StateId goal = layout::CliffGoal(c);
  const StateId bottom = layout::CliffBottom(c);
  TabularMdp mdp(n + 2, 0);
  for (StateId s = 0; s < n; ++s) {
    const double slip =
        static_cast<int>(s) >= c.cliff_start ? c.slip_p : 0.0;
    for (ActionId a : {layout::kForward, layout::kBack}) {
      const StateId target =
          a == layout::kForward ? s + 1 : (s == 0 ? 0 : s - 1);
      const double r = target == goal ? c.goal_r : 0.0;
      std::vector<Outcome> outs;
      Push(outs, target, 1.0 - slip, r);
      Push(outs, bottom, slip, c.fall_penalty);
      mdp.AddAction(s, a == layout::kForward ? "forward" : "back",
                    std::move(outs));
    }
  }
  mdp.MarkTerminal(goal);
  mdp.MarkTerminal(bottom);
  return mdp;
}

TabularMdp Build(const TwoArmedGamble& g) {
  CheckProbability(g.risky_p, "risky_p");
  CheckFinite(g.safe_r, "safe_r");
  CheckFinite(g.risky_r, "risky_r");
  CheckFinite(g.risky_loss, "risky_loss");
  TabularMdp mdp(4, layout::kGambleChoice);
  mdp.AddAction(layout::kGambleChoice, "safe",
                {{layout::kGambleSafeEnd, 1.0, g.safe_r}});
  std::vector<Outcome> risky;
  Push(risky, layout::kGambleWin, g.risky_p, g.risky_r);
  Push(risky, layout::kGambleLose, 1.0 - g.risky_p, g.risky_loss);
  mdp.AddAction(layout::kGambleChoice, "risky", std::move(risky));
  mdp.MarkTerminal(layout::kGambleSafeEnd);
  mdp.MarkTerminal(layout::kGambleWin);
  mdp.MarkTerminal(layout::kGambleLose);
  return mdp;
}

TabularMdp Build(const LotteryReveal& l) {
  if (l.k <= 0) throw InvalidSpec("k must be positive");
  CheckProbability(l.p, "p");
  CheckFinite(l.jackpot_r, "jackpot_r");
  const std::size_t k = static_cast<std::size_t>(l.k);
  TabularMdp mdp(k + 2, 0);
  for (StateId s = 0; s < k; ++s) {
    std::vector<Outcome> outs;
    if (s + 1 < k) {
      Push(outs, s + 1, l.p, 0.0);
    } else {
      Push(outs, layout::LotteryJackpot(l), l.p, l.jackpot_r);
    }
    Push(outs, layout::LotteryBust(l), 1.0 - l.p, 0.0);
    mdp.AddAction(s, "hold", std::move(outs));
  }
  mdp.MarkTerminal(layout::LotteryJackpot(l));
  mdp.MarkTerminal(layout::LotteryBust(l));
  return mdp;
}

TabularMdp Build(const TabularExplicit& t) {
  if (t.n_states == 0) throw InvalidSpec("n_states must be positive");
  if (t.start >= t.n_states) throw InvalidSpec("start out of range");
  // (state, action) -> next -> (probability, probability-weighted reward)
  std::map<std::pair<StateId, ActionId>,
           std::map<StateId, std::pair<double, double>>>
      table;
  for (const auto& tr : t.transitions) {
    if (tr.state >= t.n_states || tr.next >= t.n_states) {
      throw InvalidSpec("transition state out of range");
    }
    CheckProbability(tr.probability, "probability");
    CheckFinite(tr.reward, "reward");
    auto& cell = table[{tr.state, tr.action}][tr.next];
    cell.first += tr.probability;
    cell.second += tr.probability * tr.reward;
  }
  std::vector<bool> terminal(t.n_states, false);
  for (StateId s : t.terminal) {
    if (s >= t.n_states) throw InvalidSpec("terminal state out of range");
    terminal[s] = true;
  }
  TabularMdp mdp(t.n_states, t.start);
  for (StateId s = 0; s < t.n_states; ++s) {
    if (terminal[s]) {
      if (table.lower_bound({s, 0}) != table.lower_bound({s + 1, 0})) {
        throw InvalidSpec("terminal state " + std::to_string(s) +
                          " has transitions");
      }
      mdp.MarkTerminal(s);
      continue;
    }
    for (ActionId a = 0;; ++a) {
      auto it = table.find({s, a});
      if (it == table.end()) break;
      std::vector<Outcome> outs;
      for (const auto& [next, pr] : it->second) {
        if (pr.first > 0.0) outs.push_back({next, pr.first, pr.second / pr.first});
      }
      mdp.AddAction(s, "a" + std::to_string(a), std::move(outs));
    }
  }
  for (const auto& [key, unused] : table) {
    if (key.second >= mdp.n_actions(key.first) && !terminal[key.first]) {
      throw InvalidSpec("action ids of state " + std::to_string(key.first) +
                        " are not contiguous from 0");
    }
  }
  return mdp;
}

}  // namespace

TabularMdp::TabularMdp(std::size_t n_states, StateId start)
    : start_(start),
      terminal_(n_states, false),
      outcomes_(n_states),
      names_(n_states) {}

std::size_t TabularMdp::max_actions() const {
  std::size_t m = 0;
  for (const auto& row : outcomes_) m = std::max(m, row.size());
  return m;
}

const std::vector<Outcome>& TabularMdp::outcomes(StateId s, ActionId a) const {
  if (s >= n_states() || a >= n_actions(s)) {
    throw IndexOutOfRange("no action " + std::to_string(a) + " in state " +
                          std::to_string(s));
  }
  return outcomes_[s][a];
}

const std::string& TabularMdp::action_name(StateId s, ActionId a) const {
  outcomes(s, a);
  return names_[s][a];
}

void TabularMdp::MarkTerminal(StateId s) {
  terminal_.at(s) = true;
  outcomes_[s] = {{{s, 1.0, 0.0}}};
  names_[s] = {"noop"};
}

ActionId TabularMdp::AddAction(StateId s, std::string name,
                               std::vector<Outcome> outs) {
  outcomes_.at(s).push_back(std::move(outs));
  names_[s].push_back(std::move(name));
  return outcomes_[s].size() - 1;
}

void TabularMdp::Validate() const {
  if (n_states() == 0) throw InvalidSpec("MDP has no states");
  if (start_ >= n_states()) throw InvalidSpec("start state out of range");
  for (StateId s = 0; s < n_states(); ++s) {
    if (outcomes_[s].empty()) {
      throw InvalidSpec("state " + std::to_string(s) + " has no actions");
    }
    for (ActionId a = 0; a < outcomes_[s].size(); ++a) {
      double sum = 0.0;
      for (const Outcome& o : outcomes_[s][a]) {
        if (o.next >= n_states()) throw InvalidSpec("next state out of range");
        CheckProbability(o.probability, "probability");
        CheckFinite(o.reward, "reward");
        sum += o.probability;
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        throw InvalidSpec("transition probabilities of (" + std::to_string(s) +
                          ", " + std::to_string(a) + ") sum to " +
                          std::to_string(sum));
      }
    }
  }
}

std::string KindName(const EnvironmentSpec& spec) {
  struct Visitor {
    std::string operator()(const RepeatedRewardChain&) const {
      return "RepeatedRewardChain";
    }
    std::string operator()(const SlipperyCliff&) const { return "SlipperyCliff"; }
    std::string operator()(const TwoArmedGamble&) const {
      return "TwoArmedGamble";
    }
    std::string operator()(const LotteryReveal&) const { return "LotteryReveal"; }
    std::string operator()(const TabularExplicit&) const {
      return "TabularExplicit";
    }
  };
  return std::visit(Visitor{}, spec);
}

TabularMdp EnumerateMdp(const EnvironmentSpec& spec) {
  TabularMdp mdp = std::visit([](const auto& s) { return Build(s); }, spec);
  mdp.Validate();
  return mdp;
}

EnvironmentInstance::EnvironmentInstance(const EnvironmentSpec& spec,
                                         std::uint64_t seed)
    : spec_(spec),
      mdp_(EnumerateMdp(spec)),
      state_(mdp_.start()),
      rng_(seed, StreamId("env")) {}

StateId EnvironmentInstance::Reset() {
  state_ = mdp_.start();
  return state_;
}

StepOutcome EnvironmentInstance::Step(ActionId action) {
  if (mdp_.is_terminal(state_)) {
    throw SteppedTerminal("state " + std::to_string(state_) + " is absorbing");
  }
  if (action >= mdp_.n_actions(state_)) {
    throw InvalidAction("action " + std::to_string(action) +
                        " is not valid in state " + std::to_string(state_));
  }
  const std::vector<Outcome>& outs = mdp_.outcomes(state_, action);
  std::vector<double> probs(outs.size());
  for (std::size_t i = 0; i < outs.size(); ++i) probs[i] = outs[i].probability;
  const Outcome& o = outs[SampleIndex(probs, rng_)];
  state_ = o.next;
  return {o.next, o.reward, mdp_.is_terminal(o.next)};
}

void EnvironmentInstance::SetSpec(const EnvironmentSpec& spec) {
  TabularMdp next = EnumerateMdp(spec);
  bool same = spec.index() == spec_.index() &&
              next.n_states() == mdp_.n_states() &&
              next.start() == mdp_.start() &&
              next.terminal_mask() == mdp_.terminal_mask();
  for (StateId s = 0; same && s < next.n_states(); ++s) {
    same = next.n_actions(s) == mdp_.n_actions(s);
  }
  if (!same) throw InvalidSpec("phase change alters the environment layout");
  spec_ = spec;
  mdp_ = std::move(next);
}

}  // namespace affectrl
