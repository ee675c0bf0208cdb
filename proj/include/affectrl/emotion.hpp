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

#ifndef AFFECTRL_EMOTION_HPP_
#define AFFECTRL_EMOTION_HPP_

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "affectrl/learner.hpp"
#include "affectrl/mdp.hpp"
#include "affectrl/rng.hpp"

namespace affectrl {

struct EmotionSignal {
  double joy = 0.0;
  double distress = 0.0;
  double hope = 0.0;
  double fear = 0.0;
  double disappointment = 0.0;
  double relief = 0.0;
  friend bool operator==(const EmotionSignal&, const EmotionSignal&) = default;
};

// (max(delta, 0), max(-delta, 0)).
std::pair<double, double> JoyDistress(double delta);

enum class Aggregation { kMean, kMax };

struct AnticipationParams {
  int n_rollouts = 1;
  int depth = 1;
  PolicyKind sim_policy = policy::Greedy{};
  // Weight gamma^k applied to the k-th imagined TD error.
  double gamma = 0.9;
  Aggregation aggregation = Aggregation::kMean;
  // How each imagined TD error is computed from the model's outcomes.
  TdMode td_mode = td::Expected{};
};

void ValidateAnticipation(const AnticipationParams& params);

struct RolloutRecord {
  int rollout = 0;
  int k = 0;
  StateId state = 0;
  ActionId action = 0;
  StateId next_state = 0;
  double td_error = 0.0;
};

struct Anticipation {
  double hope = 0.0;
  double fear = 0.0;
  std::vector<RolloutRecord> records;
  // Mean of (H - F) over rollouts grouped by their first imagined action;
  // zero for actions never tried first.
  std::vector<double> first_action_net;
};

// Imagines params.n_rollouts traces of at most params.depth steps from s using
// the model and current values, without modifying either. Rollout i draws
// actions from base.Split(2i) and outcomes from base.Split(2i+1), so runs that
// differ only in depth or policy share their random numbers. A rollout stops
// at a terminal state or at an (s, a) the model has never seen. Throws
// InvalidState.
Anticipation Anticipate(const QTable& q, const TransitionModel& m, StateId s,
                        const AnticipationParams& params, const Rng& base);

// Hope and fear registered for outcomes that have not resolved yet.
class AnticipationLedger {
 public:
  struct Entry {
    double anticipated_joy = 0.0;
    double anticipated_distress = 0.0;
  };
  struct Resolution {
    double disappointment = 0.0;
    double relief = 0.0;
    Entry anticipated;
  };

  void Register(const std::string& key, double hope, double fear);
  // Compares realized joy/distress with the registered amounts and removes
  // the entry. Throws UnknownKey.
  Resolution Resolve(const std::string& key, double realized_delta);
  // Drops an entry without resolving it (e.g. truncated episodes).
  void Discard(const std::string& key);
  bool Pending(const std::string& key) const;
  const std::map<std::string, Entry>& pending() const { return pending_; }

 private:
  std::map<std::string, Entry> pending_;
};

enum class UpdateRule { kSarsa, kModelBased };

struct LearningConfig {
  bool learn_values = true;
  bool learn_model = true;
  UpdateRule update = UpdateRule::kSarsa;
  TdMode td_mode = td::Expected{};
  PolicyKind value_policy = policy::Greedy{};
};

struct EmotionConfig {
  AnticipationParams anticipation;
  double kappa = 1.0;
  // When true, every imagined TD error is applied to Q as a learning step.
  bool rumination_writes_back = false;
};

struct Transition {
  StateId state = 0;
  ActionId action = 0;
  double reward = 0.0;
  StateId next_state = 0;
  bool terminal = false;
};

struct StepResult {
  EmotionSignal signal;
  double td_error = 0.0;
  std::optional<ActionId> next_action;
  Anticipation anticipation;
  std::optional<AnticipationLedger::Resolution> resolution;
};

// Chooses the action taken from the successor state, given what was
// anticipated there. Not called when the successor is terminal.
using NextActionFn =
    std::function<ActionId(StateId next_state, const Anticipation&)>;

// One environment step of the agent:
//   1. model update (if learning the model),
//   2. anticipation at the successor state (skipped when terminal),
//   3. choice of the next action,
//   4. realized TD error and value update,
//   5. kappa * hope / kappa * fear registered under `key`,
//   6. on terminal steps, resolution of `key` if it is pending.
StepResult EmotionStep(QTable& q, TransitionModel& m, const Transition& t,
                       const NextActionFn& next_action,
                       const LearningConfig& learning,
                       const EmotionConfig& emotion,
                       AnticipationLedger& ledger, const std::string& key,
                       const Rng& anticipation_rng);

// Q(s, .) plus eta times the anticipated net affect of each first action.
std::vector<double> MotivatedPreferences(const QTable& q, StateId s,
                                         const Anticipation& anticipation,
                                         double eta);

}  // namespace affectrl

#endif  // AFFECTRL_EMOTION_HPP_
