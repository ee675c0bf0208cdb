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

#include "affectrl/emotion.hpp"

#include <algorithm>
#include <limits>

#include "affectrl/errors.hpp"

namespace affectrl {
namespace {

// Imagined TD error of (s, a) after sampling `sampled` from `preds`. In the
// Expected mode this is the plain sample error; otherwise the sample error is
// blended with the best (worst) per-outcome error the model allows.
double ImaginedDelta(const QTable& q, StateId s, ActionId a,
                     const std::vector<TransitionModel::Prediction>& preds,
                     std::size_t sampled, std::optional<ActionId> a_next,
                     const AnticipationParams& params) {
  const auto& p = preds[sampled];
  const double sample = TdError(q, s, a, p.reward, p.next, a_next);
  double beta = 0.0;
  bool optimistic = true;
  if (const auto* o = std::get_if<td::Optimistic>(&params.td_mode)) {
    beta = o->beta;
  } else if (const auto* n = std::get_if<td::Pessimistic>(&params.td_mode)) {
    beta = n->beta;
    optimistic = false;
  }
  if (beta == 0.0) return sample;
  const double current = q.at(s, a);
  double extreme = optimistic ? -std::numeric_limits<double>::infinity()
                              : std::numeric_limits<double>::infinity();
  for (const auto& o : preds) {
    const double d = o.reward +
                     q.gamma() * StateValue(q, o.next, params.sim_policy) -
                     current;
    extreme = optimistic ? std::max(extreme, d) : std::min(extreme, d);
  }
  return (1.0 - beta) * sample + beta * extreme;
}

}  // namespace

std::pair<double, double> JoyDistress(double delta) {
  return {delta > 0.0 ? delta : 0.0, delta < 0.0 ? -delta : 0.0};
}

void ValidateAnticipation(const AnticipationParams& params) {
  if (params.n_rollouts < 1) {
    throw InvalidParameter("n_rollouts must be positive");
  }
  if (params.depth < 1) throw InvalidParameter("depth must be positive");
  if (!(params.gamma >= 0.0 && params.gamma <= 1.0)) {
    throw InvalidParameter("anticipation gamma must lie in [0, 1]");
  }
  ValidatePolicy(params.sim_policy);
  ValidateTdMode(params.td_mode);
}

Anticipation Anticipate(const QTable& q, const TransitionModel& m, StateId s,
                        const AnticipationParams& params, const Rng& base) {
  ValidateAnticipation(params);
  if (s >= q.n_states() || s >= m.n_states()) {
    throw InvalidState("state " + std::to_string(s) + " out of range");
  }
  Anticipation out;
  const std::size_t n_first = q.n_actions(s);
  out.first_action_net.assign(n_first, 0.0);
  if (q.is_terminal(s)) return out;

  std::vector<double> net_sum(n_first, 0.0);
  std::vector<int> net_count(n_first, 0);
  double hope_acc = 0.0;
  double fear_acc = 0.0;
  for (int i = 0; i < params.n_rollouts; ++i) {
    Rng action_rng = base.Split(2 * static_cast<std::uint64_t>(i));
    Rng outcome_rng = base.Split(2 * static_cast<std::uint64_t>(i) + 1);
    double h = 0.0;
    double f = 0.0;
    double weight = 1.0;
    StateId cur = s;
    ActionId act =
        SampleIndex(ActionProbabilities(q, cur, params.sim_policy), action_rng);
    const ActionId first = act;
    for (int k = 0; k < params.depth; ++k) {
      if (!m.Visited(cur, act)) break;
      const auto preds = m.Predict(cur, act);
      std::vector<double> probs(preds.size());
      for (std::size_t j = 0; j < preds.size(); ++j) {
        probs[j] = preds[j].probability;
      }
      const std::size_t idx = SampleIndex(probs, outcome_rng);
      const StateId next = preds[idx].next;
      std::optional<ActionId> next_act;
      if (!q.is_terminal(next)) {
        next_act = SampleIndex(
            ActionProbabilities(q, next, params.sim_policy), action_rng);
      }
      const double delta =
          ImaginedDelta(q, cur, act, preds, idx, next_act, params);
      if (delta > 0.0) h += weight * delta;
      if (delta < 0.0) f -= weight * delta;
      out.records.push_back({i, k, cur, act, next, delta});
      if (!next_act.has_value()) break;
      weight *= params.gamma;
      cur = next;
      act = *next_act;
    }
    if (params.aggregation == Aggregation::kMax) {
      hope_acc = std::max(hope_acc, h);
      fear_acc = std::max(fear_acc, f);
    } else {
      hope_acc += h;
      fear_acc += f;
    }
    net_sum[first] += h - f;
    ++net_count[first];
  }
  if (params.aggregation == Aggregation::kMean) {
    hope_acc /= params.n_rollouts;
    fear_acc /= params.n_rollouts;
  }
  out.hope = hope_acc;
  out.fear = fear_acc;
  for (std::size_t a = 0; a < n_first; ++a) {
    if (net_count[a] > 0) out.first_action_net[a] = net_sum[a] / net_count[a];
  }
  return out;
}

void AnticipationLedger::Register(const std::string& key, double hope,
                                  double fear) {
  if (!(hope >= 0.0) || !(fear >= 0.0)) {
    throw InvalidParameter("anticipated amounts must be nonnegative");
  }
  Entry& e = pending_[key];
  e.anticipated_joy += hope;
  e.anticipated_distress += fear;
}

AnticipationLedger::Resolution AnticipationLedger::Resolve(
    const std::string& key, double realized_delta) {
  auto it = pending_.find(key);
  if (it == pending_.end()) throw UnknownKey("no pending entry '" + key + "'");
  const Entry e = it->second;
  pending_.erase(it);
  const auto [joy, distress] = JoyDistress(realized_delta);
  const double shortfall =
      e.anticipated_joy > 0.0 ? std::max(0.0, e.anticipated_joy - joy) : 0.0;
  const double spared = e.anticipated_distress > 0.0
                            ? std::max(0.0, e.anticipated_distress - distress)
                            : 0.0;
  // One resolution yields a single signed correction: shortfall of joy
  // against distress that did not materialize.
  const double net = shortfall - spared;
  Resolution r;
  r.disappointment = net > 0.0 ? net : 0.0;
  r.relief = net < 0.0 ? -net : 0.0;
  r.anticipated = e;
  return r;
}

void AnticipationLedger::Discard(const std::string& key) {
  pending_.erase(key);
}

bool AnticipationLedger::Pending(const std::string& key) const {
  return pending_.count(key) > 0;
}

StepResult EmotionStep(QTable& q, TransitionModel& m, const Transition& t,
                       const NextActionFn& next_action,
                       const LearningConfig& learning,
                       const EmotionConfig& emotion,
                       AnticipationLedger& ledger, const std::string& key,
                       const Rng& anticipation_rng) {
  StepResult out;
  if (learning.learn_model) m.Update(t.state, t.action, t.reward, t.next_state);

  const bool terminal = t.terminal || q.is_terminal(t.next_state);
  if (!terminal) {
    out.anticipation =
        Anticipate(q, m, t.next_state, emotion.anticipation, anticipation_rng);
    out.next_action = next_action(t.next_state, out.anticipation);
  }

  out.td_error =
      TdError(q, t.state, t.action, t.reward, t.next_state, out.next_action);
  if (learning.learn_values) {
    double step = out.td_error;
    if (learning.update == UpdateRule::kModelBased &&
        m.Visited(t.state, t.action)) {
      step = ExpectedTd(q, m, t.state, t.action, learning.td_mode,
                        learning.value_policy);
    }
    q.set(t.state, t.action, q.at(t.state, t.action) + q.alpha() * step);
  }
  if (emotion.rumination_writes_back) {
    for (const RolloutRecord& r : out.anticipation.records) {
      q.set(r.state, r.action, q.at(r.state, r.action) + q.alpha() * r.td_error);
    }
  }

  const auto [joy, distress] = JoyDistress(out.td_error);
  out.signal.joy = joy;
  out.signal.distress = distress;
  out.signal.hope = out.anticipation.hope;
  out.signal.fear = out.anticipation.fear;
  if (!terminal) {
    ledger.Register(key, emotion.kappa * out.anticipation.hope,
                    emotion.kappa * out.anticipation.fear);
  } else if (ledger.Pending(key)) {
    out.resolution = ledger.Resolve(key, out.td_error);
    out.signal.disappointment = out.resolution->disappointment;
    out.signal.relief = out.resolution->relief;
  }
  return out;
}

std::vector<double> MotivatedPreferences(const QTable& q, StateId s,
                                         const Anticipation& anticipation,
                                         double eta) {
  const auto row = q.row(s);
  std::vector<double> pref(row.begin(), row.end());
  if (eta == 0.0) return pref;
  for (std::size_t a = 0;
       a < pref.size() && a < anticipation.first_action_net.size(); ++a) {
    pref[a] += eta * anticipation.first_action_net[a];
  }
  return pref;
}

}  // namespace affectrl
