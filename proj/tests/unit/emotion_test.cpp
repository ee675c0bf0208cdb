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

#include <gtest/gtest.h>

#include "affectrl/emotion.hpp"
#include "affectrl/errors.hpp"

namespace affectrl {
namespace {

AnticipationParams Params(int n, int depth, PolicyKind sim = policy::Greedy{},
                          double gamma = 0.9) {
  AnticipationParams p;
  p.n_rollouts = n;
  p.depth = depth;
  p.sim_policy = sim;
  p.gamma = gamma;
  return p;
}

ActionId Argmax(const QTable& q, StateId s) {
  const auto row = q.row(s);
  return static_cast<ActionId>(std::max_element(row.begin(), row.end()) -
                               row.begin());
}

NextActionFn GreedyNext(const QTable& q) {
  return [&q](StateId s, const Anticipation&) { return Argmax(q, s); };
}

EmotionConfig Emotion(const AnticipationParams& p, double kappa = 1.0) {
  EmotionConfig e;
  e.anticipation = p;
  e.kappa = kappa;
  return e;
}

TEST(JoyDistress, Examples) {
  EXPECT_EQ(JoyDistress(0.7), std::make_pair(0.7, 0.0));
  EXPECT_EQ(JoyDistress(-0.3), std::make_pair(0.0, 0.3));
  EXPECT_EQ(JoyDistress(0.0), std::make_pair(0.0, 0.0));
}

TEST(JoyDistressProperty, SplitIsExact) {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double d = 200.0 * rng.Uniform() - 100.0;
    const auto [joy, distress] = JoyDistress(d);
    ASSERT_GE(joy, 0.0);
    ASSERT_GE(distress, 0.0);
    ASSERT_EQ(joy * distress, 0.0);
    ASSERT_EQ(joy - distress, d);
  }
}

// Fresh values on a three-step chain paying 1 at the end: the single greedy
// path is silent until its last step, whose imagined error is 1 weighted by
// gamma^2.
TEST(Anticipate, HandSimulatedChain) {
  const TabularMdp m = EnumerateMdp(RepeatedRewardChain{3, 1.0});
  const QTable q(m, 0.1, 0.9);
  const TransitionModel model = TransitionModel::Exact(m);
  const Anticipation a = Anticipate(q, model, 0, Params(1, 3), Rng(1));
  double h = 0.0;
  for (int k = 0; k < 3; ++k) h += (k == 2 ? 1.0 : 0.0) * std::pow(0.9, k);
  EXPECT_NEAR(a.hope, h, 1e-15);
  EXPECT_NEAR(a.hope, 0.81, 1e-15);
  EXPECT_EQ(a.fear, 0.0);
  ASSERT_EQ(a.records.size(), 3u);
  EXPECT_EQ(a.records[0].td_error, 0.0);
  EXPECT_EQ(a.records[2].td_error, 1.0);
}

TEST(Anticipate, ConvergedChainIsSilent) {
  const TabularMdp m = EnumerateMdp(RepeatedRewardChain{4, 1.0});
  const QTable q = EvaluateQ(m, policy::Greedy{}, 0.1, 0.9);
  const TransitionModel model = TransitionModel::Exact(m);
  for (StateId s = 0; s < 4; ++s) {
    const Anticipation a = Anticipate(q, model, s, Params(10, 6), Rng(s));
    EXPECT_EQ(a.hope, 0.0);
    EXPECT_EQ(a.fear, 0.0);
  }
}

TEST(Anticipate, NoPositiveImaginedErrorsMeansNoHope) {
  const SlipperyCliff spec{6, 0.1, 3, 10.0, -10.0};
  const TabularMdp m = EnumerateMdp(spec);
  // Values above anything reachable: every imagined error is negative.
  const QTable q(m, 0.1, 0.9, 100.0);
  const TransitionModel model = TransitionModel::Exact(m);
  for (StateId s = 0; s < 6; ++s) {
    const Anticipation a =
        Anticipate(q, model, s, Params(20, 6, policy::EpsilonGreedy{1.0}), Rng(3));
    EXPECT_EQ(a.hope, 0.0);
    EXPECT_GT(a.fear, 0.0);
  }
}

TEST(Anticipate, StopsAtUnvisitedPairs) {
  const TabularMdp m = EnumerateMdp(RepeatedRewardChain{3, 1.0});
  const QTable q(m, 0.1, 0.9);
  TransitionModel model(m);
  model.Update(0, 0, 0.0, 1);
  const Anticipation a = Anticipate(q, model, 0, Params(5, 3), Rng(1));
  for (const auto& r : a.records) EXPECT_EQ(r.k, 0);
  EXPECT_EQ(a.records.size(), 5u);
  EXPECT_EQ(Anticipate(q, model, 1, Params(5, 3), Rng(1)).records.size(), 0u);
}

TEST(Anticipate, Errors) {
  const TabularMdp m = EnumerateMdp(RepeatedRewardChain{3, 1.0});
  const QTable q(m, 0.1, 0.9);
  const TransitionModel model = TransitionModel::Exact(m);
  EXPECT_THROW(Anticipate(q, model, 99, Params(1, 1), Rng(1)), InvalidState);
  EXPECT_THROW(Anticipate(q, model, 0, Params(0, 1), Rng(1)), InvalidParameter);
  EXPECT_THROW(Anticipate(q, model, 0, Params(1, 0), Rng(1)), InvalidParameter);
  EXPECT_THROW(Anticipate(q, model, 0, Params(1, 1, policy::Greedy{}, 1.5), Rng(1)),
               InvalidParameter);
}

TEST(Anticipate, MaxAggregationDominatesMean) {
  const TabularMdp m = EnumerateMdp(SlipperyCliff{6, 0.1, 3, 10, -10});
  const QTable q = EvaluateQ(m, policy::Greedy{}, 0.1, 0.9);
  const TransitionModel model = TransitionModel::Exact(m);
  AnticipationParams mean = Params(50, 6, policy::EpsilonGreedy{1.0});
  AnticipationParams max = mean;
  max.aggregation = Aggregation::kMax;
  const Anticipation a = Anticipate(q, model, 2, mean, Rng(8));
  const Anticipation b = Anticipate(q, model, 2, max, Rng(8));
  EXPECT_GE(b.fear, a.fear);
  EXPECT_GE(b.hope, a.hope);
}

// Converged silence: on random deterministic acyclic MDPs with exact model
// and greedy-consistent values, nothing is anticipated.
TEST(AnticipateProperty, ConvergedSilenceOnRandomDeterministicMdps) {
  Rng rng(1234);
  for (int trial = 0; trial < 200; ++trial) {
    TabularExplicit t;
    t.n_states = 2 + rng.NextU64() % 8;
    t.terminal = {t.n_states - 1};
    for (StateId s = 0; s + 1 < t.n_states; ++s) {
      const std::size_t n_act = 1 + rng.NextU64() % 3;
      for (ActionId a = 0; a < n_act; ++a) {
        const StateId next = s + 1 + rng.NextU64() % (t.n_states - 1 - s);
        t.transitions.push_back({s, a, next, 1.0, 4.0 * rng.Uniform() - 2.0});
      }
    }
    const TabularMdp m = EnumerateMdp(t);
    const QTable q = EvaluateQ(m, policy::Greedy{}, 0.1, 0.9);
    const TransitionModel model = TransitionModel::Exact(m);
    for (StateId s = 0; s + 1 < t.n_states; ++s) {
      const Anticipation a = Anticipate(q, model, s, Params(4, 8), rng.Split(s));
      ASSERT_EQ(a.hope, 0.0) << "trial " << trial;
      ASSERT_EQ(a.fear, 0.0) << "trial " << trial;
    }
  }
}

// Rollouts share random numbers across depths, so deeper imagination only
// appends terms.
TEST(AnticipateProperty, NondecreasingInDepth) {
  const TabularMdp m = EnumerateMdp(SlipperyCliff{6, 0.2, 2, 10, -10});
  const QTable q = EvaluateQ(m, policy::Greedy{}, 0.1, 0.9);
  const TransitionModel model = TransitionModel::Exact(m);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const PolicyKind p :
         {PolicyKind(policy::Greedy{}), PolicyKind(policy::EpsilonGreedy{1.0})}) {
      double last_h = 0.0, last_f = 0.0;
      for (int d = 1; d <= 10; ++d) {
        const Anticipation a = Anticipate(q, model, 1, Params(10, d, p), Rng(seed));
        ASSERT_GE(a.fear, last_f);
        ASSERT_GE(a.hope, last_h);
        last_f = a.fear;
        last_h = a.hope;
      }
    }
  }
}

TEST(AnticipateProperty, DoesNotDependOnCallHistory) {
  const TabularMdp m = EnumerateMdp(SlipperyCliff{6, 0.1, 3, 10, -10});
  const QTable q = EvaluateQ(m, policy::Greedy{}, 0.1, 0.9);
  const TransitionModel model = TransitionModel::Exact(m);
  const Rng base(5, 6);
  const Anticipation a = Anticipate(q, model, 3, Params(20, 6), base);
  const Anticipation b = Anticipate(q, model, 3, Params(20, 6), base);
  EXPECT_EQ(a.hope, b.hope);
  EXPECT_EQ(a.fear, b.fear);
}

TEST(Ledger, RegisterExamples) {
  AnticipationLedger l;
  l.Register("k", 0.8, 0.0);
  EXPECT_EQ(l.pending().at("k").anticipated_joy, 0.8);
  EXPECT_EQ(l.pending().at("k").anticipated_distress, 0.0);

  AnticipationLedger two;
  two.Register("k", 0.3, 0.0);
  two.Register("k", 0.5, 0.0);
  EXPECT_DOUBLE_EQ(two.pending().at("k").anticipated_joy, 0.8);

  AnticipationLedger zero;
  zero.Register("k", 0.0, 0.0);
  EXPECT_TRUE(zero.Pending("k"));
  EXPECT_THROW(zero.Register("k", -1.0, 0.0), InvalidParameter);
}

TEST(Ledger, ResolveExamples) {
  AnticipationLedger l;
  l.Register("a", 0.8, 0.0);
  auto r = l.Resolve("a", 0.0);
  EXPECT_EQ(r.disappointment, 0.8);
  EXPECT_EQ(r.relief, 0.0);

  l.Register("b", 0.0, 0.5);
  r = l.Resolve("b", 0.0);
  EXPECT_EQ(r.relief, 0.5);
  EXPECT_EQ(r.disappointment, 0.0);

  l.Register("c", 0.3, 0.0);
  r = l.Resolve("c", 0.5);
  EXPECT_EQ(r.disappointment, 0.0);
  EXPECT_EQ(r.relief, 0.0);
}

TEST(Ledger, EntriesResolveExactlyOnce) {
  AnticipationLedger l;
  l.Register("a", 0.1, 0.2);
  l.Resolve("a", 0.0);
  EXPECT_FALSE(l.Pending("a"));
  EXPECT_THROW(l.Resolve("a", 0.0), UnknownKey);
  l.Register("b", 1.0, 0.0);
  l.Discard("b");
  EXPECT_THROW(l.Resolve("b", 0.0), UnknownKey);
}

TEST(LedgerProperty, Bounds) {
  Rng rng(44);
  for (int i = 0; i < 20000; ++i) {
    AnticipationLedger l;
    const double aj = rng.Uniform() < 0.2 ? 0.0 : 5.0 * rng.Uniform();
    const double ad = rng.Uniform() < 0.2 ? 0.0 : 5.0 * rng.Uniform();
    l.Register("k", aj, ad);
    const double d = 10.0 * rng.Uniform() - 5.0;
    const auto r = l.Resolve("k", d);
    ASSERT_GE(r.disappointment, 0.0);
    ASSERT_GE(r.relief, 0.0);
    ASSERT_LE(r.disappointment, aj);
    ASSERT_LE(r.relief, ad);
    ASSERT_EQ(r.disappointment * r.relief, 0.0);
  }
}

TEST(EmotionStep, FullyLearnedStepIsSilent) {
  const TabularMdp m = EnumerateMdp(RepeatedRewardChain{3, 1.0});
  QTable q = EvaluateQ(m, policy::Greedy{}, 0.1, 0.9);
  TransitionModel model = TransitionModel::Exact(m);
  AnticipationLedger ledger;
  LearningConfig learning;
  learning.learn_model = false;
  const EmotionConfig emotion = Emotion(Params(10, 3));
  for (StateId s = 0; s < 3; ++s) {
    const Transition t{s, 0, s == 2 ? 1.0 : 0.0, s + 1, s == 2};
    const StepResult r = EmotionStep(q, model, t, GreedyNext(q), learning,
                                     emotion, ledger, "ep", Rng(s));
    EXPECT_EQ(r.signal, EmotionSignal{}) << "s=" << s;
    EXPECT_EQ(r.td_error, 0.0);
  }
}

TEST(EmotionStep, FirstHabituationEpisode) {
  const TabularMdp m = EnumerateMdp(RepeatedRewardChain{1, 1.0});
  QTable q(m, 0.1, 0.9);
  TransitionModel model(m);
  AnticipationLedger ledger;
  const StepResult r =
      EmotionStep(q, model, {0, 0, 1.0, 1, true}, GreedyNext(q), LearningConfig{},
                  Emotion(Params(1, 1)), ledger, "ep", Rng(1));
  EmotionSignal expect;
  expect.joy = 1.0;
  EXPECT_EQ(r.signal, expect);
  EXPECT_FALSE(r.resolution.has_value());
  EXPECT_FALSE(r.next_action.has_value());
  EXPECT_DOUBLE_EQ(q.at(0, 0), 0.1);
  EXPECT_EQ(model.visit_count(0, 0), 1.0);
}

TEST(EmotionStep, BustAfterHopeIsDistressAndDisappointment) {
  const LotteryReveal spec{3, 0.5, 100.0};
  const TabularMdp m = EnumerateMdp(spec);
  QTable q = EvaluateQ(m, policy::Greedy{}, 0.1, 1.0);
  TransitionModel model = TransitionModel::Exact(m);
  AnticipationLedger ledger;
  LearningConfig frozen;
  frozen.learn_values = false;
  frozen.learn_model = false;
  const EmotionConfig emotion = Emotion(Params(32, 1, policy::Greedy{}, 1.0));
  const StepResult first = EmotionStep(q, model, {0, 0, 0.0, 1, false},
                                       GreedyNext(q), frozen, emotion, ledger,
                                       "ep", Rng(1));
  EXPECT_GT(first.td_error, 0.0);
  EXPECT_GT(first.anticipation.hope, 0.0);
  EXPECT_TRUE(ledger.Pending("ep"));
  const StepResult bust =
      EmotionStep(q, model, {1, 0, 0.0, layout::LotteryBust(spec), true},
                  GreedyNext(q), frozen, emotion, ledger, "ep", Rng(2));
  EXPECT_DOUBLE_EQ(bust.td_error, -25.0);
  EXPECT_GT(bust.signal.distress, 0.0);
  EXPECT_GT(bust.signal.disappointment, 0.0);
  ASSERT_TRUE(bust.resolution.has_value());
  EXPECT_EQ(bust.signal.disappointment, bust.resolution->disappointment);
  EXPECT_FALSE(ledger.Pending("ep"));
}

TEST(EmotionStep, KappaScalesRegistration) {
  const TabularMdp m = EnumerateMdp(LotteryReveal{3, 0.5, 100.0});
  QTable q = EvaluateQ(m, policy::Greedy{}, 0.1, 1.0);
  TransitionModel model = TransitionModel::Exact(m);
  LearningConfig frozen;
  frozen.learn_values = false;
  frozen.learn_model = false;
  AnticipationLedger full, half;
  const auto p = Params(8, 1, policy::Greedy{}, 1.0);
  const StepResult a = EmotionStep(q, model, {0, 0, 0.0, 1, false}, GreedyNext(q),
                                   frozen, Emotion(p, 1.0), full, "k", Rng(3));
  EmotionStep(q, model, {0, 0, 0.0, 1, false}, GreedyNext(q), frozen,
              Emotion(p, 0.5), half, "k", Rng(3));
  EXPECT_EQ(full.pending().at("k").anticipated_joy, a.anticipation.hope);
  EXPECT_EQ(half.pending().at("k").anticipated_joy, 0.5 * a.anticipation.hope);
  EXPECT_EQ(half.pending().at("k").anticipated_distress,
            0.5 * a.anticipation.fear);
}

TEST(EmotionStep, FrozenLearningLeavesStateUntouched) {
  const TabularMdp m = EnumerateMdp(SlipperyCliff{6, 0.1, 3, 10, -10});
  QTable q = EvaluateQ(m, policy::Greedy{}, 0.1, 0.9);
  TransitionModel model = TransitionModel::Exact(m);
  const QTable q0 = q;
  const TransitionModel m0 = model;
  LearningConfig frozen;
  frozen.learn_values = false;
  frozen.learn_model = false;
  AnticipationLedger ledger;
  EmotionStep(q, model, {3, 0, 0.0, 4, false}, GreedyNext(q), frozen,
              Emotion(Params(20, 6)), ledger, "k", Rng(1));
  EXPECT_EQ(q, q0);
  EXPECT_EQ(model, m0);
}

TEST(EmotionStep, RuminationWriteBackChangesValues) {
  const TabularMdp m = EnumerateMdp(SlipperyCliff{6, 0.1, 3, 10, -10});
  QTable q = EvaluateQ(m, policy::Greedy{}, 0.1, 0.9);
  TransitionModel model = TransitionModel::Exact(m);
  const QTable q0 = q;
  LearningConfig frozen;
  frozen.learn_values = false;
  frozen.learn_model = false;
  EmotionConfig emotion = Emotion(Params(20, 6, policy::EpsilonGreedy{1.0}));
  emotion.rumination_writes_back = true;
  AnticipationLedger ledger;
  EmotionStep(q, model, {3, 0, 0.0, 4, false}, GreedyNext(q), frozen, emotion,
              ledger, "k", Rng(1));
  EXPECT_NE(q, q0);
}

TEST(EmotionStep, ModelBasedUpdateUsesExpectedTd) {
  const TabularMdp m = EnumerateMdp(TwoArmedGamble{0.5, 2.0, 0.1, -0.1});
  QTable q(m, 0.1, 0.9);
  TransitionModel model(m);
  model.Update(0, 1, 2.0, layout::kGambleWin);
  LearningConfig learning;
  learning.update = UpdateRule::kModelBased;
  learning.td_mode = td::Expected{};
  AnticipationLedger ledger;
  // The observed loss enters the model first; the update uses the 50/50
  // estimate, not the single sample.
  const StepResult r =
      EmotionStep(q, model, {0, 1, -0.1, layout::kGambleLose, true},
                  GreedyNext(q), learning, Emotion(Params(1, 1)), ledger, "k",
                  Rng(1));
  EXPECT_DOUBLE_EQ(r.td_error, -0.1);
  EXPECT_DOUBLE_EQ(q.at(0, 1), 0.1 * (0.5 * 2.0 + 0.5 * -0.1));
}

TEST(EmotionStepProperty, Deterministic) {
  const TabularMdp m = EnumerateMdp(SlipperyCliff{6, 0.1, 3, 10, -10});
  auto run = [&] {
    QTable q(m, 0.1, 0.9);
    TransitionModel model = TransitionModel::Exact(m);
    AnticipationLedger ledger;
    EnvironmentInstance env(SlipperyCliff{6, 0.1, 3, 10, -10}, 5);
    std::vector<EmotionSignal> out;
    Rng pick(5);
    StateId s = env.Reset();
    ActionId a = 0;
    for (int i = 0; i < 300; ++i) {
      const StepOutcome o = env.Step(a);
      auto next = [&](StateId, const Anticipation&) {
        return static_cast<ActionId>(pick.NextU64() % 2);
      };
      const StepResult r = EmotionStep(
          q, model, {s, a, o.reward, o.next_state, o.terminal}, next,
          LearningConfig{}, Emotion(Params(5, 4, policy::EpsilonGreedy{0.5})),
          ledger, "ep" + std::to_string(i), Rng(9, i));
      out.push_back(r.signal);
      if (o.terminal) {
        s = env.Reset();
        a = 0;
      } else {
        s = o.next_state;
        a = *r.next_action;
      }
    }
    return out;
  };
  EXPECT_EQ(run(), run());
}

TEST(MotivatedPreferences, AddsNetAffect) {
  const QTable q({{1.0, 2.0}, {0.0}}, {false, true}, 0.1, 0.9);
  Anticipation a;
  a.first_action_net = {0.5, -1.0};
  EXPECT_EQ(MotivatedPreferences(q, 0, a, 0.0), (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(MotivatedPreferences(q, 0, a, 2.0), (std::vector<double>{2.0, 0.0}));
}

}  // namespace
}  // namespace affectrl
