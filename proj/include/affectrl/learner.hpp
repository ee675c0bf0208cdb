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

#ifndef AFFECTRL_LEARNER_HPP_
#define AFFECTRL_LEARNER_HPP_

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "affectrl/mdp.hpp"
#include "affectrl/rng.hpp"

namespace affectrl {

// Action values Q(s, a) with learning rate alpha and discount gamma. Rows are
// ragged: state s has exactly n_actions(s) entries.
class QTable {
 public:
  QTable() = default;
  // Shape (and terminal mask) taken from `mdp`. Throws InvalidParameter when
  // alpha is outside (0, 1] or gamma outside [0, 1].
  QTable(const TabularMdp& mdp, double alpha, double gamma,
         double initial = 0.0);
  QTable(std::vector<std::vector<double>> values, std::vector<bool> terminal,
         double alpha, double gamma);

  std::size_t n_states() const { return values_.size(); }
  std::size_t n_actions(StateId s) const;
  bool is_terminal(StateId s) const;
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }

  // Throws IndexOutOfRange.
  double at(StateId s, ActionId a) const;
  void set(StateId s, ActionId a, double v);
  std::span<const double> row(StateId s) const;

  const std::vector<std::vector<double>>& values() const { return values_; }
  const std::vector<bool>& terminal_mask() const { return terminal_; }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  void CheckIndex(StateId s, ActionId a) const;

  std::vector<std::vector<double>> values_;
  std::vector<bool> terminal_;
  double alpha_ = 0.1;
  double gamma_ = 0.9;
};

namespace policy {
struct Greedy {
  friend bool operator==(const Greedy&, const Greedy&) = default;
};
struct EpsilonGreedy {
  double eps = 0.1;
  friend bool operator==(const EpsilonGreedy&, const EpsilonGreedy&) = default;
};
struct Softmax {
  double tau = 1.0;
  friend bool operator==(const Softmax&, const Softmax&) = default;
};
// Selection probability proportional to Q. When the smallest value is not
// positive, every value is first shifted by -min(Q) + shift_eps.
struct Proportional {
  double shift_eps = 0.01;
  friend bool operator==(const Proportional&, const Proportional&) = default;
};
}  // namespace policy

using PolicyKind = std::variant<policy::Greedy, policy::EpsilonGreedy,
                                policy::Softmax, policy::Proportional>;

// Throws InvalidParameter when a policy parameter is out of range.
void ValidatePolicy(const PolicyKind& policy);

// Distribution over the entries of `values`. Throws NoActions when empty.
std::vector<double> ActionProbabilities(std::span<const double> values,
                                        const PolicyKind& policy);
std::vector<double> ActionProbabilities(const QTable& q, StateId s,
                                        const PolicyKind& policy);
// Draws from ActionProbabilities. Consumes randomness only when more than
// one action has positive probability.
ActionId SelectAction(const QTable& q, StateId s, const PolicyKind& policy,
                      Rng& rng);
// V_pi(s) = sum_a pi(a|s) Q(s,a); zero for terminal states.
double StateValue(const QTable& q, StateId s, const PolicyKind& policy);

// delta = r + gamma * Q(s', a') - Q(s, a). The bootstrap term is zero when
// a_next is empty or s_next is terminal. Throws IndexOutOfRange.
double TdError(const QTable& q, StateId s, ActionId a, double r,
               StateId s_next, std::optional<ActionId> a_next);
// Applies Q(s, a) += alpha * delta and returns delta.
double SarsaUpdate(QTable& q, StateId s, ActionId a, double r, StateId s_next,
                   std::optional<ActionId> a_next);

// Empirical transition and reward statistics. Counts are stored as reals so
// that an exact model can be seeded directly with probabilities.
class TransitionModel {
 public:
  struct Prediction {
    StateId next = 0;
    double probability = 0.0;
    double reward = 0.0;
  };

  TransitionModel() = default;
  explicit TransitionModel(const TabularMdp& shape);
  // Counts equal to the true probabilities, reward sums to P * r.
  static TransitionModel Exact(const TabularMdp& mdp);

  // counts[s][a][s_next] += 1, reward_sum[s][a][s_next] += r.
  void Update(StateId s, ActionId a, double r, StateId s_next);
  bool Visited(StateId s, ActionId a) const;
  // Outcomes with positive count in increasing order of next state. Throws
  // Unvisited, IndexOutOfRange.
  std::vector<Prediction> Predict(StateId s, ActionId a) const;
  // P-hat(s_next | s, a); Throws Unvisited.
  double Probability(StateId s, ActionId a, StateId s_next) const;

  std::size_t n_states() const { return counts_.size(); }
  std::size_t n_actions(StateId s) const { return counts_.at(s).size(); }
  double count(StateId s, ActionId a, StateId s_next) const;
  double reward_sum(StateId s, ActionId a, StateId s_next) const;
  double visit_count(StateId s, ActionId a) const;

  using Tensor = std::vector<std::vector<std::vector<double>>>;
  const Tensor& counts() const { return counts_; }
  const Tensor& reward_sums() const { return reward_sum_; }
  // Rebuilds a model from serialized tensors. Throws InvalidParameter on
  // shape mismatch or negative counts.
  static TransitionModel FromTensors(Tensor counts, Tensor reward_sums);

  friend bool operator==(const TransitionModel&,
                         const TransitionModel&) = default;

 private:
  void CheckIndex(StateId s, ActionId a) const;

  Tensor counts_;
  Tensor reward_sum_;
  std::vector<std::vector<double>> visits_;
};

namespace td {
struct Expected {
  friend bool operator==(const Expected&, const Expected&) = default;
};
struct Optimistic {
  double beta = 1.0;
  friend bool operator==(const Optimistic&, const Optimistic&) = default;
};
struct Pessimistic {
  double beta = 1.0;
  friend bool operator==(const Pessimistic&, const Pessimistic&) = default;
};
}  // namespace td

using TdMode = std::variant<td::Expected, td::Optimistic, td::Pessimistic>;

void ValidateTdMode(const TdMode& mode);

// Combines per-outcome TD errors: the probability-weighted mean, moved a
// fraction beta of the way toward the best (Optimistic) or worst
// (Pessimistic) outcome with positive probability.
double BlendOutcomes(std::span<const double> probabilities,
                     std::span<const double> deltas, const TdMode& mode);

// Model-based TD error of (s, a) under `mode`, with successor values
// V_pi(s') taken under `value_policy`. Throws Unvisited.
double ExpectedTd(const QTable& q, const TransitionModel& m, StateId s,
                  ActionId a, const TdMode& mode,
                  const PolicyKind& value_policy);

// Solves Q(s,a) = sum_s' P (r + gamma V_pi(s')) on the exact MDP by in-place
// sweeps until no entry changes (or max_sweeps is reached). With Greedy this
// is value iteration.
QTable EvaluateQ(const TabularMdp& mdp, const PolicyKind& policy, double alpha,
                 double gamma, int max_sweeps = 100000);

std::string PolicyName(const PolicyKind& policy);
std::string TdModeName(const TdMode& mode);

}  // namespace affectrl

#endif  // AFFECTRL_LEARNER_HPP_
