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

#ifndef AFFECTRL_CONFIG_HPP_
#define AFFECTRL_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "affectrl/emotion.hpp"
#include "affectrl/learner.hpp"
#include "affectrl/mdp.hpp"
#include "json.hpp"

namespace affectrl {

struct PretrainConfig {
  enum class Method { kNone, kExact, kSarsa };
  Method method = Method::kNone;
  // Exact: policy evaluated on the true MDP. Sarsa: behaviour policy.
  PolicyKind policy = policy::Greedy{};
  // Sarsa pretraining stops once max |delta| stays below `tolerance` for
  // `window` consecutive episodes.
  double tolerance = 1e-3;
  int window = 50;
  int max_episodes = 100000;
};

struct AgentConfig {
  double alpha = 0.1;
  double gamma = 0.9;
  PolicyKind policy = policy::Greedy{};
  TdMode td_mode = td::Expected{};
  UpdateRule update = UpdateRule::kSarsa;
  bool learn_values = true;
  bool learn_model = true;
  double initial_q = 0.0;
  PretrainConfig pretrain;
};

struct EmotionSettings {
  int n_rollouts = 1;
  int depth = 1;
  PolicyKind sim_policy = policy::Greedy{};
  double gamma = 0.9;
  double kappa = 1.0;
  Aggregation aggregation = Aggregation::kMean;
  // Use the true transition tables instead of the learned counts.
  bool exact_model = false;
  double motivation_eta = 0.0;
  bool rumination_writes_back = false;
};

// Parameter overrides applied from episode `start` onwards.
struct Phase {
  int start = 0;
  nlohmann::json params = nlohmann::json::object();
};

struct Schedule {
  int n_episodes = 1;
  int max_steps = 1000;
  std::vector<Phase> phases;
};

struct CliffSweep {
  // Ordered from most to least perceived control.
  std::vector<PolicyKind> sim_policies = {policy::Greedy{},
                                          policy::EpsilonGreedy{1.0}};
  std::vector<int> depths = {1, 3, 6, 10};
  std::vector<int> n_rollouts = {20, 100};
  std::vector<int> positions = {0, 1, 2, 3, 4, 5};
  int probe_cell = 5;
  int ordering_depth = 6;
  int ordering_rollouts = 20;
  std::vector<int> closeness_positions = {0, 1, 2, 3};
  int closeness_rollouts = 100;
};

struct GambleSettings {
  std::vector<TdMode> modes = {td::Expected{}, td::Optimistic{1.0}};
  // Trailing fraction of episodes over which choice statistics and fear are
  // measured.
  double measure_fraction = 0.25;
};

struct ExtinctionSettings {
  int exposures = 50;
  double max_ratio = 0.2;
};

struct ScenarioConfig {
  std::string scenario;
  std::string notes;
  EnvironmentSpec environment;
  AgentConfig agent;
  EmotionSettings emotion;
  Schedule schedule;
  std::vector<std::uint64_t> seeds;
  std::string output_dir = "out";
  std::optional<CliffSweep> cliff;
  std::optional<GambleSettings> gamble;
  std::optional<ExtinctionSettings> extinction;
};

// Environment parameters in force at `episode` (base spec with every phase
// whose start <= episode applied in order).
EnvironmentSpec SpecForEpisode(const ScenarioConfig& cfg, int episode);

LearningConfig MakeLearningConfig(const AgentConfig& agent);
EmotionConfig MakeEmotionConfig(const ScenarioConfig& cfg,
                                const TdMode& td_mode);

}  // namespace affectrl

#endif  // AFFECTRL_CONFIG_HPP_
