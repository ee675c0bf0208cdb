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

#ifndef AFFECTRL_MDP_HPP_
#define AFFECTRL_MDP_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "affectrl/rng.hpp"

namespace affectrl {

using StateId = std::size_t;
using ActionId = std::size_t;

struct Outcome {
  StateId next = 0;
  double probability = 0.0;
  double reward = 0.0;
};

struct StepOutcome {
  StateId next_state = 0;
  double reward = 0.0;
  bool terminal = false;
};

// Fully enumerated finite MDP. Terminal states carry a single no-op action
// that self-loops with probability 1 and reward 0.
class TabularMdp {
 public:
  TabularMdp() = default;
  TabularMdp(std::size_t n_states, StateId start);

  std::size_t n_states() const { return outcomes_.size(); }
  StateId start() const { return start_; }
  bool is_terminal(StateId s) const { return terminal_.at(s); }
  const std::vector<bool>& terminal_mask() const { return terminal_; }
  std::size_t n_actions(StateId s) const { return outcomes_.at(s).size(); }
  std::size_t max_actions() const;
  const std::vector<Outcome>& outcomes(StateId s, ActionId a) const;
  const std::string& action_name(StateId s, ActionId a) const;

  void MarkTerminal(StateId s);
  // Appends an action to state s and returns its id.
  ActionId AddAction(StateId s, std::string name, std::vector<Outcome> outs);

  // Throws InvalidSpec on bad probabilities, dangling indices or states
  // without actions.
  void Validate() const;

 private:
  StateId start_ = 0;
  std::vector<bool> terminal_;
  std::vector<std::vector<std::vector<Outcome>>> outcomes_;
  std::vector<std::vector<std::string>> names_;
};

// A linear chain of `length` single-action states. The last step pays
// `reward`, or `punish_r` with probability `punish_p`.
struct RepeatedRewardChain {
  int length = 1;
  double reward = 1.0;
  double punish_p = 0.0;
  double punish_r = 0.0;
};

// 1 x length corridor with actions {forward, back}. Any move made from a cell
// at or beyond `cliff_start` falls off the cliff with probability `slip_p`.
struct SlipperyCliff {
  int length = 5;
  double slip_p = 0.0;
  int cliff_start = 0;
  double goal_r = 1.0;
  double fall_penalty = -10.0;
};

struct TwoArmedGamble {
  double safe_r = 0.5;
  double risky_r = 10.0;
  double risky_p = 0.04;
  double risky_loss = -0.2;
};

// k sequential reveals, each matching with probability p. All k matches pay
// jackpot_r; the first mismatch ends the episode with 0.
struct LotteryReveal {
  int k = 3;
  double p = 0.5;
  double jackpot_r = 100.0;
};

struct TabularExplicit {
  struct Transition {
    StateId state = 0;
    ActionId action = 0;
    StateId next = 0;
    double probability = 0.0;
    double reward = 0.0;
  };
  std::size_t n_states = 0;
  StateId start = 0;
  std::vector<StateId> terminal;
  std::vector<Transition> transitions;
};

using EnvironmentSpec = std::variant<RepeatedRewardChain, SlipperyCliff,
                                     TwoArmedGamble, LotteryReveal,
                                     TabularExplicit>;

std::string KindName(const EnvironmentSpec& spec);

// Well-known state and action indices of the built-in environments.
namespace layout {
inline StateId ChainGoal(const RepeatedRewardChain& c) { return c.length; }
inline StateId ChainPunish(const RepeatedRewardChain& c) {
  return c.length + 1;
}
inline StateId CliffGoal(const SlipperyCliff& c) { return c.length; }
inline StateId CliffBottom(const SlipperyCliff& c) { return c.length + 1; }
inline constexpr ActionId kForward = 0;
inline constexpr ActionId kBack = 1;
inline constexpr StateId kGambleChoice = 0;
inline constexpr StateId kGambleSafeEnd = 1;
inline constexpr StateId kGambleWin = 2;
inline constexpr StateId kGambleLose = 3;
inline constexpr ActionId kSafe = 0;
inline constexpr ActionId kRisky = 1;
inline StateId LotteryJackpot(const LotteryReveal& l) { return l.k; }
inline StateId LotteryBust(const LotteryReveal& l) { return l.k + 1; }
}  // namespace layout

// Exact transition tables; outcomes with zero probability are omitted.
// Throws InvalidSpec.
TabularMdp EnumerateMdp(const EnvironmentSpec& spec);

class EnvironmentInstance {
 public:
  // Throws InvalidSpec.
  EnvironmentInstance(const EnvironmentSpec& spec, std::uint64_t seed);

  // Returns to the start state. The random stream is not rewound.
  StateId Reset();
  // Throws InvalidAction, SteppedTerminal.
  StepOutcome Step(ActionId action);

  // Swaps in new parameters of the same shape (used at phase boundaries).
  // Throws InvalidSpec if the state/action layout differs.
  void SetSpec(const EnvironmentSpec& spec);

  StateId current_state() const { return state_; }
  const EnvironmentSpec& spec() const { return spec_; }
  const TabularMdp& mdp() const { return mdp_; }
  const Rng& rng() const { return rng_; }
  void set_rng(const Rng& rng) { rng_ = rng; }

 private:
  EnvironmentSpec spec_;
  TabularMdp mdp_;
  StateId state_ = 0;
  Rng rng_;
};

}  // namespace affectrl

#endif  // AFFECTRL_MDP_HPP_
