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

#include "affectrl/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "affectrl/errors.hpp"
#include "affectrl/format.hpp"

namespace affectrl {
namespace {

void CheckRates(double alpha, double gamma) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw InvalidParameter("alpha must lie in (0, 1], got " +
                           std::to_string(alpha));
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw InvalidParameter("gamma must lie in [0, 1], got " +
                           std::to_string(gamma));
  }
}

std::vector<double> GreedyMass(std::span<const double> values) {
  const double best = *std::max_element(values.begin(), values.end());
  std::size_t ties = 0;
  for (double v : values) ties += v == best;
  std::vector<double> p(values.size(), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == best) p[i] = 1.0 / static_cast<double>(ties);
  }
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// QTable

QTable::QTable(const TabularMdp& mdp, double alpha, double gamma,
               double initial)
    : terminal_(mdp.terminal_mask()), alpha_(alpha), gamma_(gamma) {
  CheckRates(alpha, gamma);
  values_.resize(mdp.n_states());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    values_[s].assign(mdp.n_actions(s), mdp.is_terminal(s) ? 0.0 : initial);
  }
}

QTable::QTable(std::vector<std::vector<double>> values,
               std::vector<bool> terminal, double alpha, double gamma)
    : values_(std::move(values)),
      terminal_(std::move(terminal)),
      alpha_(alpha),
      gamma_(gamma) {
  CheckRates(alpha, gamma);
  if (terminal_.size() != values_.size()) {
    throw InvalidParameter("terminal mask and value table differ in size");
  }
  for (const auto& row : values_) {
    for (double v : row) {
      if (!std::isfinite(v)) throw InvalidParameter("Q value is not finite");
    }
  }
}

void QTable::CheckIndex(StateId s, ActionId a) const {
  if (s >= values_.size() || a >= values_[s].size()) {
    throw IndexOutOfRange("Q index (" + std::to_string(s) + ", " +
                          std::to_string(a) + ") out of range");
  }
}

std::size_t QTable::n_actions(StateId s) const {
  if (s >= values_.size()) {
    throw IndexOutOfRange("state " + std::to_string(s) + " out of range");
  }
  return values_[s].size();
}

bool QTable::is_terminal(StateId s) const {
  if (s >= terminal_.size()) {
    throw IndexOutOfRange("state " + std::to_string(s) + " out of range");
  }
  return terminal_[s];
}

double QTable::at(StateId s, ActionId a) const {
  CheckIndex(s, a);
  return values_[s][a];
}

void QTable::set(StateId s, ActionId a, double v) {
  CheckIndex(s, a);
  values_[s][a] = v;
}

std::span<const double> QTable::row(StateId s) const {
  n_actions(s);
  return values_[s];
}

// ---------------------------------------------------------------------------
// Policies

void ValidatePolicy(const PolicyKind& policy) {
  if (const auto* e = std::get_if<policy::EpsilonGreedy>(&policy)) {
    if (!(e->eps >= 0.0 && e->eps <= 1.0)) {
      throw InvalidParameter("eps must lie in [0, 1]");
    }
  } else if (const auto* t = std::get_if<policy::Softmax>(&policy)) {
    if (!(t->tau > 0.0)) throw InvalidParameter("tau must be positive");
  } else if (const auto* p = std::get_if<policy::Proportional>(&policy)) {
    if (!(p->shift_eps > 0.0)) {
      throw InvalidParameter("shift_eps must be positive");
    }
  }
}

std::vector<double> ActionProbabilities(std::span<const double> values,
                                        const PolicyKind& kind) {
  if (values.empty()) throw NoActions("state has no actions");
  ValidatePolicy(kind);
  const std::size_t n = values.size();
  if (std::holds_alternative<policy::Greedy>(kind)) return GreedyMass(values);
  if (const auto* e = std::get_if<policy::EpsilonGreedy>(&kind)) {
    std::vector<double> p = GreedyMass(values);
    const double uniform = e->eps / static_cast<double>(n);
    for (double& x : p) x = (1.0 - e->eps) * x + uniform;
    return p;
  }
  std::vector<double> w(n);
  if (const auto* s = std::get_if<policy::Softmax>(&kind)) {
    const double best = *std::max_element(values.begin(), values.end());
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = std::exp((values[i] - best) / s->tau);
    }
  } else {
    const auto& prop = std::get<policy::Proportional>(kind);
    const double lo = *std::min_element(values.begin(), values.end());
    const double shift = lo > 0.0 ? 0.0 : prop.shift_eps - lo;
    for (std::size_t i = 0; i < n; ++i) w[i] = values[i] + shift;
  }
  double total = 0.0;
  for (double x : w) total += x;
  for (double& x : w) x /= total;
  return w;
}

std::vector<double> ActionProbabilities(const QTable& q, StateId s,
                                        const PolicyKind& policy) {
  return ActionProbabilities(q.row(s), policy);
}

ActionId SelectAction(const QTable& q, StateId s, const PolicyKind& policy,
                      Rng& rng) {
  return SampleIndex(ActionProbabilities(q, s, policy), rng);
}

double StateValue(const QTable& q, StateId s, const PolicyKind& policy) {
  if (q.is_terminal(s)) return 0.0;
  const std::vector<double> p = ActionProbabilities(q, s, policy);
  double v = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] > 0.0) v += p[a] * q.at(s, a);
  }
  return v;
}

// ---------------------------------------------------------------------------
// TD errors

double TdError(const QTable& q, StateId s, ActionId a, double r,
               StateId s_next, std::optional<ActionId> a_next) {
  const double current = q.at(s, a);
  double bootstrap = 0.0;
  if (a_next.has_value() && !q.is_terminal(s_next)) {
    bootstrap = q.at(s_next, *a_next);
  } else {
    q.n_actions(s_next);  // range check
  }
  return r + q.gamma() * bootstrap - current;
}

double SarsaUpdate(QTable& q, StateId s, ActionId a, double r, StateId s_next,
                   std::optional<ActionId> a_next) {
  const double delta = TdError(q, s, a, r, s_next, a_next);
  q.set(s, a, q.at(s, a) + q.alpha() * delta);
  return delta;
}

// ---------------------------------------------------------------------------
// TransitionModel

TransitionModel::TransitionModel(const TabularMdp& shape) {
  const std::size_t n = shape.n_states();
  counts_.resize(n);
  reward_sum_.resize(n);
  visits_.resize(n);
  for (StateId s = 0; s < n; ++s) {
    const std::size_t na = shape.n_actions(s);
    counts_[s].assign(na, std::vector<double>(n, 0.0));
    reward_sum_[s].assign(na, std::vector<double>(n, 0.0));
    visits_[s].assign(na, 0.0);
  }
}

TransitionModel TransitionModel::Exact(const TabularMdp& mdp) {
  TransitionModel m(mdp);
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    for (ActionId a = 0; a < mdp.n_actions(s); ++a) {
      for (const Outcome& o : mdp.outcomes(s, a)) {
        m.counts_[s][a][o.next] += o.probability;
        m.reward_sum_[s][a][o.next] += o.probability * o.reward;
      }
      double total = 0.0;
      for (double c : m.counts_[s][a]) total += c;
      m.visits_[s][a] = total;
    }
  }
  return m;
}

TransitionModel TransitionModel::FromTensors(Tensor counts,
                                             Tensor reward_sums) {
  TransitionModel m;
  const std::size_t n = counts.size();
  if (reward_sums.size() != n) {
    throw InvalidParameter("count and reward tensors differ in shape");
  }
  m.visits_.resize(n);
  for (StateId s = 0; s < n; ++s) {
    if (reward_sums[s].size() != counts[s].size()) {
      throw InvalidParameter("count and reward tensors differ in shape");
    }
    m.visits_[s].assign(counts[s].size(), 0.0);
    for (ActionId a = 0; a < counts[s].size(); ++a) {
      if (counts[s][a].size() != n || reward_sums[s][a].size() != n) {
        throw InvalidParameter("count and reward tensors differ in shape");
      }
      for (double c : counts[s][a]) {
        if (!(c >= 0.0) || !std::isfinite(c)) {
          throw InvalidParameter("counts must be finite and nonnegative");
        }
        m.visits_[s][a] += c;
      }
    }
  }
  m.counts_ = std::move(counts);
  m.reward_sum_ = std::move(reward_sums);
  return m;
}

void TransitionModel::CheckIndex(StateId s, ActionId a) const {
  if (s >= counts_.size() || a >= counts_[s].size()) {
    throw IndexOutOfRange("model index (" + std::to_string(s) + ", " +
                          std::to_string(a) + ") out of range");
  }
}

void TransitionModel::Update(StateId s, ActionId a, double r, StateId s_next) {
  CheckIndex(s, a);
  if (s_next >= counts_.size()) {
    throw IndexOutOfRange("next state " + std::to_string(s_next) +
                          " out of range");
  }
  counts_[s][a][s_next] += 1.0;
  reward_sum_[s][a][s_next] += r;
  visits_[s][a] += 1.0;
}

bool TransitionModel::Visited(StateId s, ActionId a) const {
  CheckIndex(s, a);
  return visits_[s][a] > 0.0;
}

std::vector<TransitionModel::Prediction> TransitionModel::Predict(
    StateId s, ActionId a) const {
  if (!Visited(s, a)) {
    throw Unvisited("(" + std::to_string(s) + ", " + std::to_string(a) +
                    ") has never been observed");
  }
  std::vector<Prediction> out;
  const auto& c = counts_[s][a];
  for (StateId n = 0; n < c.size(); ++n) {
    if (c[n] > 0.0) {
      out.push_back({n, c[n] / visits_[s][a], reward_sum_[s][a][n] / c[n]});
    }
  }
  return out;
}

double TransitionModel::Probability(StateId s, ActionId a,
                                    StateId s_next) const {
  if (!Visited(s, a)) {
    throw Unvisited("(" + std::to_string(s) + ", " + std::to_string(a) +
                    ") has never been observed");
  }
  return count(s, a, s_next) / visits_[s][a];
}

double TransitionModel::count(StateId s, ActionId a, StateId s_next) const {
  CheckIndex(s, a);
  return counts_[s][a].at(s_next);
}

double TransitionModel::reward_sum(StateId s, ActionId a,
                                   StateId s_next) const {
  CheckIndex(s, a);
  return reward_sum_[s][a].at(s_next);
}

double TransitionModel::visit_count(StateId s, ActionId a) const {
  CheckIndex(s, a);
  return visits_[s][a];
}

// ---------------------------------------------------------------------------
// Optimistic / pessimistic TD

void ValidateTdMode(const TdMode& mode) {
  double beta = 0.0;
  if (const auto* o = std::get_if<td::Optimistic>(&mode)) beta = o->beta;
  if (const auto* p = std::get_if<td::Pessimistic>(&mode)) beta = p->beta;
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw InvalidParameter("beta must lie in [0, 1]");
  }
}

double BlendOutcomes(std::span<const double> probabilities,
                     std::span<const double> deltas, const TdMode& mode) {
  ValidateTdMode(mode);
  double expected = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(probabilities[i] > 0.0)) continue;
    expected += probabilities[i] * deltas[i];
    best = std::max(best, deltas[i]);
    worst = std::min(worst, deltas[i]);
  }
  // Written as an offset from the mean so the result is monotone in beta
  // under rounding.
  if (const auto* o = std::get_if<td::Optimistic>(&mode)) {
    return o->beta == 0.0 ? expected : expected + o->beta * (best - expected);
  }
  if (const auto* p = std::get_if<td::Pessimistic>(&mode)) {
    return p->beta == 0.0 ? expected
                          : expected - p->beta * (expected - worst);
  }
  return expected;
}

double ExpectedTd(const QTable& q, const TransitionModel& m, StateId s,
                  ActionId a, const TdMode& mode,
                  const PolicyKind& value_policy) {
  const auto preds = m.Predict(s, a);
  const double current = q.at(s, a);
  std::vector<double> probs, deltas;
  for (const auto& p : preds) {
    probs.push_back(p.probability);
    deltas.push_back(p.reward + q.gamma() * StateValue(q, p.next, value_policy) -
                     current);
  }
  return BlendOutcomes(probs, deltas, mode);
}

QTable EvaluateQ(const TabularMdp& mdp, const PolicyKind& policy, double alpha,
                 double gamma, int max_sweeps) {
  QTable q(mdp, alpha, gamma);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool changed = false;
    for (StateId s = 0; s < mdp.n_states(); ++s) {
      if (mdp.is_terminal(s)) continue;
      for (ActionId a = 0; a < mdp.n_actions(s); ++a) {
        double v = 0.0;
        for (const Outcome& o : mdp.outcomes(s, a)) {
          v += o.probability *
               (o.reward + gamma * StateValue(q, o.next, policy));
        }
        if (v != q.at(s, a)) {
          q.set(s, a, v);
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  return q;
}

std::string PolicyName(const PolicyKind& policy) {
  if (const auto* e = std::get_if<policy::EpsilonGreedy>(&policy)) {
    return "EpsilonGreedy-" + ShortestDouble(e->eps);
  }
  if (const auto* t = std::get_if<policy::Softmax>(&policy)) {
    return "Softmax-" + ShortestDouble(t->tau);
  }
  if (const auto* p = std::get_if<policy::Proportional>(&policy)) {
    return "Proportional-" + ShortestDouble(p->shift_eps);
  }
  return "Greedy";
}

std::string TdModeName(const TdMode& mode) {
  if (const auto* o = std::get_if<td::Optimistic>(&mode)) {
    return "Optimistic-" + ShortestDouble(o->beta);
  }
  if (const auto* p = std::get_if<td::Pessimistic>(&mode)) {
    return "Pessimistic-" + ShortestDouble(p->beta);
  }
  return "Expected";
}

}  // namespace affectrl
