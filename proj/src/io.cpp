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

#include "affectrl/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "affectrl/errors.hpp"
#include "affectrl/format.hpp"

namespace affectrl::io {

using nlohmann::json;

namespace {

const std::set<std::string> kScenarios = {"habituation", "cliff_fear",
                                          "extinction", "gamble", "lottery"};

std::string Join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string Index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

// Walks a JSON document collecting every problem it finds.
class Reader {
 public:
  std::vector<FieldError> errors;

  void Fail(const std::string& path, const std::string& reason) {
    errors.push_back({path, reason});
  }

  bool Object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    Fail(path, "must be an object");
    return false;
  }

  void Keys(const json& obj, const std::string& path,
            const std::set<std::string>& allowed) {
    for (const auto& [key, unused] : obj.items()) {
      if (!allowed.count(key)) Fail(Join(path, key), "unknown field");
    }
  }

  const json* Find(const json& obj, const std::string& key,
                   const std::string& path, bool required) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) Fail(Join(path, key), "required");
      return nullptr;
    }
    return &*it;
  }

  double Number(const json& obj, const std::string& key,
                const std::string& path, double def, double lo, double hi,
                bool lo_open = false, bool required = false) {
    const json* v = Find(obj, key, path, required);
    if (v == nullptr) return def;
    if (!v->is_number()) {
      Fail(Join(path, key), "must be a number");
      return def;
    }
    const double x = v->get<double>();
    const bool ok = std::isfinite(x) && (lo_open ? x > lo : x >= lo) && x <= hi;
    if (!ok) {
      Fail(Join(path, key), "out of range: " + ShortestDouble(x) + " not in " +
                                (lo_open ? "(" : "[") + ShortestDouble(lo) +
                                ", " + ShortestDouble(hi) + "]");
      return def;
    }
    return x;
  }

  double Real(const json& obj, const std::string& key, const std::string& path,
              double def, bool required = false) {
    const double inf = std::numeric_limits<double>::max();
    return Number(obj, key, path, def, -inf, inf, false, required);
  }

  long long Int(const json& obj, const std::string& key,
                const std::string& path, long long def, long long lo,
                long long hi, bool required = false) {
    const json* v = Find(obj, key, path, required);
    if (v == nullptr) return def;
    return IntValue(*v, Join(path, key), def, lo, hi);
  }

  long long IntValue(const json& v, const std::string& path, long long def,
                     long long lo, long long hi) {
    if (!v.is_number_integer()) {
      Fail(path, "must be an integer");
      return def;
    }
    if (v.is_number_unsigned() &&
        v.get<unsigned long long>() >
            static_cast<unsigned long long>(std::numeric_limits<long long>::max())) {
      Fail(path, "out of range");
      return def;
    }
    const long long x = v.get<long long>();
    if (x < lo || x > hi) {
      Fail(path, "out of range: " + std::to_string(x) + " not in [" +
                     std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return def;
    }
    return x;
  }

  bool Bool(const json& obj, const std::string& key, const std::string& path,
            bool def) {
    const json* v = Find(obj, key, path, false);
    if (v == nullptr) return def;
    if (!v->is_boolean()) {
      Fail(Join(path, key), "must be true or false");
      return def;
    }
    return v->get<bool>();
  }

  std::string String(const json& obj, const std::string& key,
                     const std::string& path, const std::string& def,
                     bool required = false) {
    const json* v = Find(obj, key, path, required);
    if (v == nullptr) return def;
    if (!v->is_string()) {
      Fail(Join(path, key), "must be a string");
      return def;
    }
    return v->get<std::string>();
  }

  std::string Choice(const json& obj, const std::string& key,
                     const std::string& path, const std::string& def,
                     const std::set<std::string>& options) {
    std::string s = String(obj, key, path, def);
    if (!options.count(s)) {
      std::string list;
      for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
      Fail(Join(path, key), "must be one of {" + list + "}, got '" + s + "'");
      return def;
    }
    return s;
  }

  std::vector<int> IntList(const json& obj, const std::string& key,
                           const std::string& path,
                           const std::vector<int>& def, long long lo,
                           long long hi) {
    const json* v = Find(obj, key, path, false);
    if (v == nullptr) return def;
    if (!v->is_array() || v->empty()) {
      Fail(Join(path, key), "must be a nonempty array of integers");
      return def;
    }
    std::vector<int> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      out.push_back(static_cast<int>(
          IntValue((*v)[i], Index(Join(path, key), i), lo, lo, hi)));
    }
    return out;
  }

  PolicyKind Policy(const json& j, const std::string& path) {
    json obj = j;
    if (j.is_string()) obj = json{{"kind", j}};
    if (!Object(obj, path)) return policy::Greedy{};
    const std::string kind =
        Choice(obj, "kind", path, "Greedy",
               {"Greedy", "EpsilonGreedy", "Softmax", "Proportional"});
    if (kind == "EpsilonGreedy") {
      Keys(obj, path, {"kind", "eps"});
      return policy::EpsilonGreedy{Number(obj, "eps", path, 0.1, 0.0, 1.0)};
    }
    if (kind == "Softmax") {
      Keys(obj, path, {"kind", "tau"});
      return policy::Softmax{
          Number(obj, "tau", path, 1.0, 0.0, 1e300, /*lo_open=*/true)};
    }
    if (kind == "Proportional") {
      Keys(obj, path, {"kind", "shift_eps"});
      return policy::Proportional{
          Number(obj, "shift_eps", path, 0.01, 0.0, 1e300, /*lo_open=*/true)};
    }
    Keys(obj, path, {"kind"});
    return policy::Greedy{};
  }

  TdMode Mode(const json& j, const std::string& path) {
    json obj = j;
    if (j.is_string()) obj = json{{"kind", j}};
    if (!Object(obj, path)) return td::Expected{};
    const std::string kind = Choice(obj, "kind", path, "Expected",
                                    {"Expected", "Optimistic", "Pessimistic"});
    if (kind == "Expected") {
      Keys(obj, path, {"kind"});
      return td::Expected{};
    }
    Keys(obj, path, {"kind", "beta"});
    const double beta = Number(obj, "beta", path, 1.0, 0.0, 1.0);
    if (kind == "Optimistic") return td::Optimistic{beta};
    return td::Pessimistic{beta};
  }

  EnvironmentSpec Spec(const json& j, const std::string& path) {
    if (!Object(j, path)) return RepeatedRewardChain{};
    Keys(j, path, {"kind", "params"});
    const std::string kind = Choice(
        j, "kind", path, "RepeatedRewardChain",
        {"RepeatedRewardChain", "SlipperyCliff", "TwoArmedGamble",
         "LotteryReveal", "TabularExplicit"});
    json params = json::object();
    if (const json* p = Find(j, "params", path, false)) params = *p;
    const std::string pp = Join(path, "params");
    if (!Object(params, pp)) return RepeatedRewardChain{};
    const long long max_size = 1 << 20;
    if (kind == "RepeatedRewardChain") {
      Keys(params, pp, {"length", "reward", "punish_p", "punish_r"});
      RepeatedRewardChain c;
      c.length = static_cast<int>(Int(params, "length", pp, 1, 1, max_size));
      c.reward = Real(params, "reward", pp, 1.0);
      c.punish_p = Number(params, "punish_p", pp, 0.0, 0.0, 1.0);
      c.punish_r = Real(params, "punish_r", pp, 0.0);
      return c;
    }
    if (kind == "SlipperyCliff") {
      Keys(params, pp,
           {"length", "slip_p", "cliff_start", "goal_r", "fall_penalty"});
      SlipperyCliff c;
      c.length = static_cast<int>(Int(params, "length", pp, 5, 1, max_size));
      c.slip_p = Number(params, "slip_p", pp, 0.0, 0.0, 1.0);
      c.cliff_start =
          static_cast<int>(Int(params, "cliff_start", pp, 0, 0, max_size));
      c.goal_r = Real(params, "goal_r", pp, 1.0);
      c.fall_penalty = Real(params, "fall_penalty", pp, -10.0);
      return c;
    }
    if (kind == "TwoArmedGamble") {
      Keys(params, pp, {"safe_r", "risky_r", "risky_p", "risky_loss"});
      TwoArmedGamble g;
      g.safe_r = Real(params, "safe_r", pp, 0.5);
      g.risky_r = Real(params, "risky_r", pp, 10.0);
      g.risky_p = Number(params, "risky_p", pp, 0.04, 0.0, 1.0);
      g.risky_loss = Real(params, "risky_loss", pp, -0.2);
      return g;
    }
    if (kind == "LotteryReveal") {
      Keys(params, pp, {"k", "p", "jackpot_r"});
      LotteryReveal l;
      l.k = static_cast<int>(Int(params, "k", pp, 3, 1, max_size));
      l.p = Number(params, "p", pp, 0.5, 0.0, 1.0);
      l.jackpot_r = Real(params, "jackpot_r", pp, 100.0);
      return l;
    }
    Keys(params, pp, {"n_states", "start", "terminal", "transitions"});
    TabularExplicit t;
    t.n_states = static_cast<std::size_t>(
        Int(params, "n_states", pp, 1, 1, max_size, /*required=*/true));
    t.start = static_cast<StateId>(
        Int(params, "start", pp, 0, 0, static_cast<long long>(t.n_states) - 1));
    if (const json* term = Find(params, "terminal", pp, false)) {
      if (!term->is_array()) {
        Fail(Join(pp, "terminal"), "must be an array of state indices");
      } else {
        for (std::size_t i = 0; i < term->size(); ++i) {
          t.terminal.push_back(static_cast<StateId>(
              IntValue((*term)[i], Index(Join(pp, "terminal"), i), 0, 0,
                       static_cast<long long>(t.n_states) - 1)));
        }
      }
    }
    const json* trs = Find(params, "transitions", pp, true);
    if (trs != nullptr && !trs->is_array()) {
      Fail(Join(pp, "transitions"), "must be an array");
    } else if (trs != nullptr) {
      for (std::size_t i = 0; i < trs->size(); ++i) {
        const std::string tp = Index(Join(pp, "transitions"), i);
        const json& tr = (*trs)[i];
        if (!Object(tr, tp)) continue;
        Keys(tr, tp, {"state", "action", "next", "p", "r"});
        const long long hi = static_cast<long long>(t.n_states) - 1;
        TabularExplicit::Transition x;
        x.state = static_cast<StateId>(Int(tr, "state", tp, 0, 0, hi, true));
        x.action =
            static_cast<ActionId>(Int(tr, "action", tp, 0, 0, max_size, true));
        x.next = static_cast<StateId>(Int(tr, "next", tp, 0, 0, hi, true));
        x.probability = Number(tr, "p", tp, 1.0, 0.0, 1.0, false, true);
        x.reward = Real(tr, "r", tp, 0.0);
        t.transitions.push_back(x);
      }
    }
    return t;
  }
};

void ThrowIfErrors(const Reader& r) {
  if (!r.errors.empty()) throw ValidationError(r.errors);
}

// Byte offset -> 1-based (line, column).
std::pair<std::size_t, std::size_t> LineColumn(const std::string& text,
                                               std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json CursorToJson(const Rng::Cursor& c) {
  return {{"seed", c.seed}, {"stream", c.stream}, {"counter", c.counter}};
}

}  // namespace

// ---------------------------------------------------------------------------
// JSON helpers

json ParseJson(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    const auto [line, col] = LineColumn(text, offset);
    throw ParseError(e.what(), line, col);
  }
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string CanonicalDump(const json& j) { return j.dump(2) + "\n"; }

json PolicyToJson(const PolicyKind& p) {
  if (const auto* e = std::get_if<policy::EpsilonGreedy>(&p)) {
    return {{"kind", "EpsilonGreedy"}, {"eps", e->eps}};
  }
  if (const auto* s = std::get_if<policy::Softmax>(&p)) {
    return {{"kind", "Softmax"}, {"tau", s->tau}};
  }
  if (const auto* q = std::get_if<policy::Proportional>(&p)) {
    return {{"kind", "Proportional"}, {"shift_eps", q->shift_eps}};
  }
  return {{"kind", "Greedy"}};
}

json TdModeToJson(const TdMode& m) {
  if (const auto* o = std::get_if<td::Optimistic>(&m)) {
    return {{"kind", "Optimistic"}, {"beta", o->beta}};
  }
  if (const auto* p = std::get_if<td::Pessimistic>(&m)) {
    return {{"kind", "Pessimistic"}, {"beta", p->beta}};
  }
  return {{"kind", "Expected"}};
}

json SpecToJson(const EnvironmentSpec& spec) {
  json params;
  if (const auto* c = std::get_if<RepeatedRewardChain>(&spec)) {
    params = {{"length", c->length},
              {"reward", c->reward},
              {"punish_p", c->punish_p},
              {"punish_r", c->punish_r}};
  } else if (const auto* s = std::get_if<SlipperyCliff>(&spec)) {
    params = {{"length", s->length},
              {"slip_p", s->slip_p},
              {"cliff_start", s->cliff_start},
              {"goal_r", s->goal_r},
              {"fall_penalty", s->fall_penalty}};
  } else if (const auto* g = std::get_if<TwoArmedGamble>(&spec)) {
    params = {{"safe_r", g->safe_r},
              {"risky_r", g->risky_r},
              {"risky_p", g->risky_p},
              {"risky_loss", g->risky_loss}};
  } else if (const auto* l = std::get_if<LotteryReveal>(&spec)) {
    params = {{"k", l->k}, {"p", l->p}, {"jackpot_r", l->jackpot_r}};
  } else {
    const auto& t = std::get<TabularExplicit>(spec);
    json trs = json::array();
    for (const auto& x : t.transitions) {
      trs.push_back({{"state", x.state},
                     {"action", x.action},
                     {"next", x.next},
                     {"p", x.probability},
                     {"r", x.reward}});
    }
    params = {{"n_states", t.n_states},
              {"start", t.start},
              {"terminal", t.terminal},
              {"transitions", trs}};
  }
  return {{"kind", KindName(spec)}, {"params", params}};
}

EnvironmentSpec SpecFromJson(const json& j, const std::string& path) {
  Reader r;
  EnvironmentSpec spec = r.Spec(j, path);
  ThrowIfErrors(r);
  try {
    EnumerateMdp(spec);
  } catch (const InvalidSpec& e) {
    throw ValidationError(path, e.what());
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Scenario configs

ScenarioConfig ConfigFromJson(const json& j) {
  Reader r;
  ScenarioConfig cfg;
  if (!r.Object(j, "(root)")) ThrowIfErrors(r);
  r.Keys(j, "",
         {"scenario", "notes", "environment", "agent", "emotion", "schedule",
          "seeds", "output_dir", "cliff_sweep", "gamble", "extinction"});
  cfg.scenario = r.Choice(j, "scenario", "", "habituation", kScenarios);
  if (!j.contains("scenario")) r.Fail("scenario", "required");
  cfg.notes = r.String(j, "notes", "", "");
  cfg.output_dir = r.String(j, "output_dir", "", "out");

  // environment
  const std::size_t env_errors_before = r.errors.size();
  if (const json* env = r.Find(j, "environment", "", true)) {
    cfg.environment = r.Spec(*env, "environment");
    if (r.errors.size() == env_errors_before) {
      try {
        EnumerateMdp(cfg.environment);
      } catch (const InvalidSpec& e) {
        r.Fail("environment", e.what());
      }
    }
  }

  // agent
  if (const json* a = r.Find(j, "agent", "", false); a && r.Object(*a, "agent")) {
    const std::string p = "agent";
    r.Keys(*a, p,
           {"alpha", "gamma", "policy", "td_mode", "update", "learn_values",
            "learn_model", "initial_q", "pretrain"});
    cfg.agent.alpha = r.Number(*a, "alpha", p, 0.1, 0.0, 1.0, true);
    cfg.agent.gamma = r.Number(*a, "gamma", p, 0.9, 0.0, 1.0);
    if (const json* x = r.Find(*a, "policy", p, false)) {
      cfg.agent.policy = r.Policy(*x, "agent.policy");
    }
    if (const json* x = r.Find(*a, "td_mode", p, false)) {
      cfg.agent.td_mode = r.Mode(*x, "agent.td_mode");
    }
    cfg.agent.update =
        r.Choice(*a, "update", p, "sarsa", {"sarsa", "model_based"}) ==
                "model_based"
            ? UpdateRule::kModelBased
            : UpdateRule::kSarsa;
    cfg.agent.learn_values = r.Bool(*a, "learn_values", p, true);
    cfg.agent.learn_model = r.Bool(*a, "learn_model", p, true);
    cfg.agent.initial_q = r.Real(*a, "initial_q", p, 0.0);
    if (const json* pt = r.Find(*a, "pretrain", p, false);
        pt && r.Object(*pt, "agent.pretrain")) {
      const std::string pp = "agent.pretrain";
      r.Keys(*pt, pp,
             {"method", "policy", "tolerance", "window", "max_episodes"});
      const std::string m =
          r.Choice(*pt, "method", pp, "none", {"none", "exact", "sarsa"});
      cfg.agent.pretrain.method = m == "exact"   ? PretrainConfig::Method::kExact
                                  : m == "sarsa" ? PretrainConfig::Method::kSarsa
                                                 : PretrainConfig::Method::kNone;
      if (const json* x = r.Find(*pt, "policy", pp, false)) {
        cfg.agent.pretrain.policy = r.Policy(*x, "agent.pretrain.policy");
      }
      cfg.agent.pretrain.tolerance =
          r.Number(*pt, "tolerance", pp, 1e-3, 0.0, 1e300, true);
      cfg.agent.pretrain.window =
          static_cast<int>(r.Int(*pt, "window", pp, 50, 1, 1000000));
      cfg.agent.pretrain.max_episodes = static_cast<int>(
          r.Int(*pt, "max_episodes", pp, 100000, 1, 100000000));
    }
  }

  // emotion
  if (const json* e = r.Find(j, "emotion", "", false);
      e && r.Object(*e, "emotion")) {
    const std::string p = "emotion";
    r.Keys(*e, p,
           {"n_rollouts", "depth", "sim_policy", "gamma", "kappa",
            "aggregation", "model", "motivation_eta",
            "rumination_writes_back"});
    cfg.emotion.n_rollouts =
        static_cast<int>(r.Int(*e, "n_rollouts", p, 1, 1, 1000000));
    cfg.emotion.depth = static_cast<int>(r.Int(*e, "depth", p, 1, 1, 1000000));
    if (const json* x = r.Find(*e, "sim_policy", p, false)) {
      cfg.emotion.sim_policy = r.Policy(*x, "emotion.sim_policy");
    }
    cfg.emotion.gamma = r.Number(*e, "gamma", p, 0.9, 0.0, 1.0);
    cfg.emotion.kappa = r.Number(*e, "kappa", p, 1.0, 0.0, 1.0);
    cfg.emotion.aggregation =
        r.Choice(*e, "aggregation", p, "mean", {"mean", "max"}) == "max"
            ? Aggregation::kMax
            : Aggregation::kMean;
    cfg.emotion.exact_model =
        r.Choice(*e, "model", p, "learned", {"learned", "exact"}) == "exact";
    cfg.emotion.motivation_eta = r.Real(*e, "motivation_eta", p, 0.0);
    cfg.emotion.rumination_writes_back =
        r.Bool(*e, "rumination_writes_back", p, false);
  }

  // schedule
  if (const json* s = r.Find(j, "schedule", "", true);
      s && r.Object(*s, "schedule")) {
    const std::string p = "schedule";
    r.Keys(*s, p, {"n_episodes", "max_steps", "phases"});
    cfg.schedule.n_episodes =
        static_cast<int>(r.Int(*s, "n_episodes", p, 1, 1, 100000000, true));
    cfg.schedule.max_steps =
        static_cast<int>(r.Int(*s, "max_steps", p, 1000, 1, 100000000));
    if (const json* ph = r.Find(*s, "phases", p, false)) {
      if (!ph->is_array()) {
        r.Fail("schedule.phases", "must be an array");
      } else {
        int last = -1;
        for (std::size_t i = 0; i < ph->size(); ++i) {
          const std::string pp = Index("schedule.phases", i);
          const json& x = (*ph)[i];
          if (!r.Object(x, pp)) continue;
          r.Keys(x, pp, {"start", "params"});
          Phase phase;
          phase.start = static_cast<int>(
              r.Int(x, "start", pp, 0, 0, 100000000, true));
          if (const json* prm = r.Find(x, "params", pp, false)) {
            if (r.Object(*prm, Join(pp, "params"))) phase.params = *prm;
          }
          if (phase.start <= last) {
            r.Fail(Join(pp, "start"), "phases must be strictly increasing");
          }
          if (phase.start >= cfg.schedule.n_episodes) {
            r.Fail(Join(pp, "start"), "beyond the last episode");
          }
          last = phase.start;
          cfg.schedule.phases.push_back(std::move(phase));
        }
      }
    }
  }

  // seeds
  if (const json* s = r.Find(j, "seeds", "", true)) {
    if (!s->is_array() || s->empty()) {
      r.Fail("seeds", "must be a nonempty array of nonnegative integers");
    } else {
      for (std::size_t i = 0; i < s->size(); ++i) {
        const json& v = (*s)[i];
        if (!v.is_number_integer() ||
            (v.is_number_integer() && !v.is_number_unsigned() &&
             v.get<long long>() < 0)) {
          r.Fail(Index("seeds", i), "must be a nonnegative integer");
          continue;
        }
        cfg.seeds.push_back(v.get<std::uint64_t>());
      }
    }
  }

  // scenario sections
  if (const json* c = r.Find(j, "cliff_sweep", "", false);
      c && r.Object(*c, "cliff_sweep")) {
    const std::string p = "cliff_sweep";
    r.Keys(*c, p,
           {"sim_policies", "depths", "n_rollouts", "positions", "probe_cell",
            "ordering_depth", "ordering_rollouts", "closeness_positions",
            "closeness_rollouts"});
    CliffSweep sw;
    if (const json* x = r.Find(*c, "sim_policies", p, false)) {
      if (!x->is_array() || x->empty()) {
        r.Fail("cliff_sweep.sim_policies", "must be a nonempty array");
      } else {
        sw.sim_policies.clear();
        for (std::size_t i = 0; i < x->size(); ++i) {
          sw.sim_policies.push_back(
              r.Policy((*x)[i], Index("cliff_sweep.sim_policies", i)));
        }
      }
    }
    sw.depths = r.IntList(*c, "depths", p, sw.depths, 1, 1000000);
    sw.n_rollouts = r.IntList(*c, "n_rollouts", p, sw.n_rollouts, 1, 1000000);
    sw.positions = r.IntList(*c, "positions", p, sw.positions, 0, 1 << 20);
    sw.probe_cell =
        static_cast<int>(r.Int(*c, "probe_cell", p, sw.probe_cell, 0, 1 << 20));
    sw.ordering_depth = static_cast<int>(
        r.Int(*c, "ordering_depth", p, sw.ordering_depth, 1, 1000000));
    sw.ordering_rollouts = static_cast<int>(
        r.Int(*c, "ordering_rollouts", p, sw.ordering_rollouts, 1, 1000000));
    sw.closeness_positions = r.IntList(*c, "closeness_positions", p,
                                       sw.closeness_positions, 0, 1 << 20);
    sw.closeness_rollouts = static_cast<int>(
        r.Int(*c, "closeness_rollouts", p, sw.closeness_rollouts, 1, 1000000));
    cfg.cliff = sw;
  }
  if (const json* g = r.Find(j, "gamble", "", false);
      g && r.Object(*g, "gamble")) {
    const std::string p = "gamble";
    r.Keys(*g, p, {"modes", "measure_fraction"});
    GambleSettings gs;
    if (const json* x = r.Find(*g, "modes", p, false)) {
      if (!x->is_array() || x->empty()) {
        r.Fail("gamble.modes", "must be a nonempty array");
      } else {
        gs.modes.clear();
        for (std::size_t i = 0; i < x->size(); ++i) {
          gs.modes.push_back(r.Mode((*x)[i], Index("gamble.modes", i)));
        }
      }
    }
    gs.measure_fraction =
        r.Number(*g, "measure_fraction", p, 0.25, 0.0, 1.0, true);
    cfg.gamble = gs;
  }
  if (const json* x = r.Find(j, "extinction", "", false);
      x && r.Object(*x, "extinction")) {
    const std::string p = "extinction";
    r.Keys(*x, p, {"exposures", "max_ratio"});
    ExtinctionSettings es;
    es.exposures = static_cast<int>(r.Int(*x, "exposures", p, 50, 1, 100000000));
    es.max_ratio = r.Number(*x, "max_ratio", p, 0.2, 0.0, 1.0);
    cfg.extinction = es;
  }

  // Phase overrides must produce valid environments of the same layout.
  if (r.errors.empty()) {
    for (std::size_t i = 0; i < cfg.schedule.phases.size(); ++i) {
      const std::string pp = Index("schedule.phases", i) + ".params";
      try {
        EnvironmentInstance probe(cfg.environment, 0);
        probe.SetSpec(SpecForEpisode(cfg, cfg.schedule.phases[i].start));
      } catch (const ValidationError& e) {
        for (const auto& fe : e.errors()) r.Fail(pp, fe.reason);
      } catch (const Error& e) {
        r.Fail(pp, e.what());
      }
    }
  }
  ThrowIfErrors(r);
  return cfg;
}

json ConfigToJson(const ScenarioConfig& cfg) {
  json j;
  j["scenario"] = cfg.scenario;
  if (!cfg.notes.empty()) j["notes"] = cfg.notes;
  j["environment"] = SpecToJson(cfg.environment);
  const AgentConfig& a = cfg.agent;
  const char* method = a.pretrain.method == PretrainConfig::Method::kExact
                           ? "exact"
                       : a.pretrain.method == PretrainConfig::Method::kSarsa
                           ? "sarsa"
                           : "none";
  j["agent"] = {
      {"alpha", a.alpha},
      {"gamma", a.gamma},
      {"policy", PolicyToJson(a.policy)},
      {"td_mode", TdModeToJson(a.td_mode)},
      {"update", a.update == UpdateRule::kModelBased ? "model_based" : "sarsa"},
      {"learn_values", a.learn_values},
      {"learn_model", a.learn_model},
      {"initial_q", a.initial_q},
      {"pretrain",
       {{"method", method},
        {"policy", PolicyToJson(a.pretrain.policy)},
        {"tolerance", a.pretrain.tolerance},
        {"window", a.pretrain.window},
        {"max_episodes", a.pretrain.max_episodes}}}};
  const EmotionSettings& e = cfg.emotion;
  j["emotion"] = {
      {"n_rollouts", e.n_rollouts},
      {"depth", e.depth},
      {"sim_policy", PolicyToJson(e.sim_policy)},
      {"gamma", e.gamma},
      {"kappa", e.kappa},
      {"aggregation", e.aggregation == Aggregation::kMax ? "max" : "mean"},
      {"model", e.exact_model ? "exact" : "learned"},
      {"motivation_eta", e.motivation_eta},
      {"rumination_writes_back", e.rumination_writes_back}};
  json phases = json::array();
  for (const Phase& p : cfg.schedule.phases) {
    phases.push_back({{"start", p.start}, {"params", p.params}});
  }
  j["schedule"] = {{"n_episodes", cfg.schedule.n_episodes},
                   {"max_steps", cfg.schedule.max_steps},
                   {"phases", phases}};
  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir;
  if (cfg.cliff) {
    const CliffSweep& c = *cfg.cliff;
    json pols = json::array();
    for (const auto& p : c.sim_policies) pols.push_back(PolicyToJson(p));
    j["cliff_sweep"] = {{"sim_policies", pols},
                        {"depths", c.depths},
                        {"n_rollouts", c.n_rollouts},
                        {"positions", c.positions},
                        {"probe_cell", c.probe_cell},
                        {"ordering_depth", c.ordering_depth},
                        {"ordering_rollouts", c.ordering_rollouts},
                        {"closeness_positions", c.closeness_positions},
                        {"closeness_rollouts", c.closeness_rollouts}};
  }
  if (cfg.gamble) {
    json modes = json::array();
    for (const auto& m : cfg.gamble->modes) modes.push_back(TdModeToJson(m));
    j["gamble"] = {{"modes", modes},
                   {"measure_fraction", cfg.gamble->measure_fraction}};
  }
  if (cfg.extinction) {
    j["extinction"] = {{"exposures", cfg.extinction->exposures},
                       {"max_ratio", cfg.extinction->max_ratio}};
  }
  return j;
}

ScenarioConfig LoadConfig(const std::string& path) {
  return ConfigFromJson(ParseJson(ReadFile(path)));
}

// ---------------------------------------------------------------------------
// Snapshots

json SnapshotToJson(const Snapshot& s) {
  json rng = json::object();
  for (const auto& [name, cursor] : s.rng) rng[name] = CursorToJson(cursor);
  json terminal = json::array();
  for (bool t : s.q.terminal_mask()) terminal.push_back(t);
  return {{"format_version", kSnapshotVersion},
          {"seed", s.seed},
          {"config", ConfigToJson(s.config)},
          {"q",
           {{"alpha", s.q.alpha()},
            {"gamma", s.q.gamma()},
            {"terminal", terminal},
            {"values", s.q.values()}}},
          {"model",
           {{"counts", s.model.counts()},
            {"reward_sum", s.model.reward_sums()}}},
          {"rng", rng}};
}

Snapshot SnapshotFromJson(const json& j) {
  if (!j.is_object() || !j.contains("format_version") ||
      !j["format_version"].is_number_integer()) {
    throw ValidationError("format_version", "required");
  }
  const long long version = j["format_version"].get<long long>();
  if (version != kSnapshotVersion) {
    throw VersionMismatch("snapshot format_version " + std::to_string(version) +
                          " is not supported (expected " +
                          std::to_string(kSnapshotVersion) + ")");
  }
  Snapshot s;
  try {
    s.config = ConfigFromJson(j.at("config"));
    s.seed = j.at("seed").get<std::uint64_t>();
    const json& q = j.at("q");
    s.q = QTable(q.at("values").get<std::vector<std::vector<double>>>(),
                 q.at("terminal").get<std::vector<bool>>(),
                 q.at("alpha").get<double>(), q.at("gamma").get<double>());
    const json& m = j.at("model");
    s.model = TransitionModel::FromTensors(
        m.at("counts").get<TransitionModel::Tensor>(),
        m.at("reward_sum").get<TransitionModel::Tensor>());
    for (const auto& [name, c] : j.at("rng").items()) {
      s.rng[name] = {c.at("seed").get<std::uint64_t>(),
                     c.at("stream").get<std::uint64_t>(),
                     c.at("counter").get<std::uint64_t>()};
    }
  } catch (const json::exception& e) {
    throw ValidationError("snapshot", e.what());
  } catch (const InvalidParameter& e) {
    throw ValidationError("snapshot", e.what());
  }
  if (s.model.n_states() != s.q.n_states()) {
    throw ValidationError("model", "state count differs from q");
  }
  return s;
}

void SaveSnapshot(const Snapshot& s, const std::string& path) {
  WriteFile(path, CanonicalDump(SnapshotToJson(s)));
}

Snapshot LoadSnapshot(const std::string& path) {
  return SnapshotFromJson(ParseJson(ReadFile(path)));
}

// ---------------------------------------------------------------------------
// Traces

const std::vector<std::string>& TraceColumns() {
  static const std::vector<std::string> kColumns = {
      "run_id",   "seed",       "episode",     "step",     "state",
      "action",   "reward",     "next_state",  "terminal", "next_action",
      "td_error", "joy",        "distress",    "hope",     "fear",
      "disappointment", "relief"};
  return kColumns;
}

const std::vector<std::string>& DerivedTraceColumns() {
  static const std::vector<std::string> kColumns = {
      "td_error", "joy", "distress", "hope", "fear", "disappointment",
      "relief"};
  return kColumns;
}

std::string FormatTraceField(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string FormatTraceRow(const TraceRow& r) {
  std::string line;
  line += FormatTraceField(r.run_id);
  line += ',' + std::to_string(r.seed);
  line += ',' + std::to_string(r.episode);
  line += ',' + std::to_string(r.step);
  line += ',' + std::to_string(r.state);
  line += ',' + std::to_string(r.action);
  line += ',' + ShortestDouble(r.reward);
  line += ',' + std::to_string(r.next_state);
  line += r.terminal ? ",1" : ",0";
  line += ',' + (r.next_action ? std::to_string(*r.next_action) : "");
  line += ',' + ShortestDouble(r.td_error);
  line += ',' + ShortestDouble(r.signal.joy);
  line += ',' + ShortestDouble(r.signal.distress);
  line += ',' + ShortestDouble(r.signal.hope);
  line += ',' + ShortestDouble(r.signal.fear);
  line += ',' + ShortestDouble(r.signal.disappointment);
  line += ',' + ShortestDouble(r.signal.relief);
  return line;
}

TraceWriter::TraceWriter(const std::string& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open trace '" + path + "' for writing");
}

void TraceWriter::Append(const TraceRow& row) {
  if (!header_written_) {
    std::string header;
    for (const auto& c : TraceColumns()) {
      header += (header.empty() ? "" : ",") + c;
    }
    out_ << header << '\n';
    header_written_ = true;
  }
  out_ << FormatTraceRow(row) << '\n';
  if (!out_) throw IoError("failed writing trace '" + path_ + "'");
  ++rows_;
}

void TraceWriter::Flush() {
  out_.flush();
  if (!out_) throw IoError("failed writing trace '" + path_ + "'");
}

CsvTable ParseCsv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1, col = 1, quote_line = 1, quote_col = 1;
  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    records.push_back(std::move(record));
    record.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i, ++col) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
          ++col;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') {
          ++line;
          col = 0;
        }
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      in_quotes = true;
      field_started = true;
      quote_line = line;
      quote_col = col;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      end_record();
      ++line;
      col = 0;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) {
    throw ParseError("unterminated quoted field", quote_line, quote_col);
  }
  if (field_started || !field.empty() || !record.empty()) end_record();

  CsvTable table;
  if (records.empty()) return table;
  table.header = std::move(records.front());
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].size() != table.header.size()) {
      throw ParseError("row has " + std::to_string(records[i].size()) +
                           " fields, header has " +
                           std::to_string(table.header.size()),
                       i + 1, 1);
    }
    table.rows.push_back(std::move(records[i]));
  }
  return table;
}

std::string WriteCsv(const CsvTable& table) {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& rec) {
    for (std::size_t i = 0; i < rec.size(); ++i) {
      if (i > 0) out += ',';
      out += FormatTraceField(rec[i]);
    }
    out += '\n';
  };
  if (table.header.empty()) return out;
  emit(table.header);
  for (const auto& r : table.rows) emit(r);
  return out;
}

}  // namespace affectrl::io

namespace affectrl {

EnvironmentSpec SpecForEpisode(const ScenarioConfig& cfg, int episode) {
  if (cfg.schedule.phases.empty()) return cfg.environment;
  nlohmann::json j = io::SpecToJson(cfg.environment);
  for (const Phase& p : cfg.schedule.phases) {
    if (p.start > episode) break;
    for (const auto& [key, value] : p.params.items()) j["params"][key] = value;
  }
  return io::SpecFromJson(j);
}

LearningConfig MakeLearningConfig(const AgentConfig& agent) {
  LearningConfig l;
  l.learn_values = agent.learn_values;
  l.learn_model = agent.learn_model;
  l.update = agent.update;
  l.td_mode = agent.td_mode;
  l.value_policy = agent.policy;
  return l;
}

EmotionConfig MakeEmotionConfig(const ScenarioConfig& cfg,
                                const TdMode& td_mode) {
  EmotionConfig e;
  e.anticipation.n_rollouts = cfg.emotion.n_rollouts;
  e.anticipation.depth = cfg.emotion.depth;
  e.anticipation.sim_policy = cfg.emotion.sim_policy;
  e.anticipation.gamma = cfg.emotion.gamma;
  e.anticipation.aggregation = cfg.emotion.aggregation;
  e.anticipation.td_mode = td_mode;
  e.kappa = cfg.emotion.kappa;
  e.rumination_writes_back = cfg.emotion.rumination_writes_back;
  return e;
}

}  // namespace affectrl
