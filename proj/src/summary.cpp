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

#include "affectrl/errors.hpp"
#include "affectrl/experiments.hpp"
#include "affectrl/format.hpp"

namespace affectrl::experiments {
namespace {

// Mean and population standard deviation. Identical inputs give exactly
// (x, 0).
std::pair<double, double> MeanStdev(const std::vector<double>& xs) {
  bool all_equal = true;
  for (double x : xs) all_equal = all_equal && x == xs.front();
  if (all_equal) return {xs.front(), 0.0};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

template <typename Map>
void CheckSameKeys(const Map& a, const Map& b, const char* what) {
  if (a.size() != b.size()) {
    throw MismatchedSchedules(std::string("runs report different ") + what);
  }
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) {
      throw MismatchedSchedules(std::string("runs report different ") + what);
    }
  }
}

}  // namespace

RunSummary Summarize(const std::string& scenario,
                     const std::vector<SeedRun>& runs) {
  if (runs.empty()) throw MismatchedSchedules("no runs to summarize");
  const SeedRun& first = runs.front();
  for (const SeedRun& r : runs) {
    if (r.n_episodes != first.n_episodes) {
      throw MismatchedSchedules("runs have different episode counts");
    }
    CheckSameKeys(r.series, first.series, "series");
    CheckSameKeys(r.profiles, first.profiles, "profiles");
    CheckSameKeys(r.scalars, first.scalars, "scalars");
    CheckSameKeys(r.orderings, first.orderings, "orderings");
    for (const auto& [name, values] : r.series) {
      if (values.size() != first.series.at(name).size()) {
        throw MismatchedSchedules("series '" + name + "' differs in length");
      }
    }
    for (const auto& [name, xy] : r.profiles) {
      if (xy.first != first.profiles.at(name).first) {
        throw MismatchedSchedules("profile '" + name + "' differs in x");
      }
    }
  }

  RunSummary s;
  s.scenario = scenario;
  s.n_episodes = first.n_episodes;
  for (const SeedRun& r : runs) s.seeds.push_back(r.seed);
  std::vector<double> column(runs.size());
  for (const auto& [name, values] : first.series) {
    SeriesStats& st = s.series[name];
    for (std::size_t t = 0; t < values.size(); ++t) {
      for (std::size_t i = 0; i < runs.size(); ++i) {
        column[i] = runs[i].series.at(name)[t];
      }
      const auto [m, sd] = MeanStdev(column);
      st.mean.push_back(m);
      st.stdev.push_back(sd);
    }
  }
  for (const auto& [name, xy] : first.profiles) {
    ProfileStats& st = s.profiles[name];
    st.x = xy.first;
    for (std::size_t t = 0; t < xy.first.size(); ++t) {
      for (std::size_t i = 0; i < runs.size(); ++i) {
        column[i] = runs[i].profiles.at(name).second[t];
      }
      const auto [m, sd] = MeanStdev(column);
      st.mean.push_back(m);
      st.stdev.push_back(sd);
    }
  }
  for (const auto& [name, unused] : first.scalars) {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      column[i] = runs[i].scalars.at(name);
    }
    const auto [m, sd] = MeanStdev(column);
    s.scalars[name] = {m, sd};
  }
  for (const auto& [name, unused] : first.orderings) {
    OrderingStats& st = s.orderings[name];
    for (const SeedRun& r : runs) st.passes += r.orderings.at(name) ? 1 : 0;
    st.total = static_cast<int>(runs.size());
    st.fraction = static_cast<double>(st.passes) / st.total;
  }
  return s;
}

const std::vector<std::string>& ScenarioNames() {
  static const std::vector<std::string> kNames = {
      "habituation", "cliff_fear", "extinction", "gamble", "lottery"};
  return kNames;
}

nlohmann::json SummaryToJson(const RunSummary& s) {
  using nlohmann::json;
  json series = json::object();
  for (const auto& [name, st] : s.series) {
    series[name] = {{"mean", st.mean}, {"stdev", st.stdev}};
  }
  json profiles = json::object();
  for (const auto& [name, st] : s.profiles) {
    profiles[name] = {{"x", st.x}, {"mean", st.mean}, {"stdev", st.stdev}};
  }
  json scalars = json::object();
  for (const auto& [name, st] : s.scalars) {
    scalars[name] = {{"mean", st.mean}, {"stdev", st.stdev}};
  }
  json orderings = json::object();
  for (const auto& [name, st] : s.orderings) {
    orderings[name] = {
        {"passes", st.passes}, {"total", st.total}, {"fraction", st.fraction}};
  }
  return {{"scenario", s.scenario},   {"seeds", s.seeds},
          {"n_episodes", s.n_episodes}, {"series", series},
          {"profiles", profiles},     {"scalars", scalars},
          {"orderings", orderings}};
}

RunSummary SummaryFromJson(const nlohmann::json& j) {
  RunSummary s;
  try {
    s.scenario = j.at("scenario").get<std::string>();
    s.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    s.n_episodes = j.at("n_episodes").get<int>();
    for (const auto& [name, v] : j.at("series").items()) {
      s.series[name] = {v.at("mean").get<std::vector<double>>(),
                        v.at("stdev").get<std::vector<double>>()};
    }
    for (const auto& [name, v] : j.at("profiles").items()) {
      s.profiles[name] = {v.at("x").get<std::vector<double>>(),
                          v.at("mean").get<std::vector<double>>(),
                          v.at("stdev").get<std::vector<double>>()};
    }
    for (const auto& [name, v] : j.at("scalars").items()) {
      s.scalars[name] = {v.at("mean").get<double>(), v.at("stdev").get<double>()};
    }
    for (const auto& [name, v] : j.at("orderings").items()) {
      s.orderings[name] = {v.at("passes").get<int>(), v.at("total").get<int>(),
                           v.at("fraction").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("summary", e.what());
  }
  return s;
}

io::CsvTable PlotData(const RunSummary& s, const std::string& series) {
  io::CsvTable t;
  t.header = {"x", "mean", "stdev"};
  if (auto it = s.series.find(series); it != s.series.end()) {
    for (std::size_t i = 0; i < it->second.mean.size(); ++i) {
      t.rows.push_back({std::to_string(i), ShortestDouble(it->second.mean[i]),
                        ShortestDouble(it->second.stdev[i])});
    }
    return t;
  }
  if (auto it = s.profiles.find(series); it != s.profiles.end()) {
    for (std::size_t i = 0; i < it->second.x.size(); ++i) {
      t.rows.push_back({ShortestDouble(it->second.x[i]),
                        ShortestDouble(it->second.mean[i]),
                        ShortestDouble(it->second.stdev[i])});
    }
    return t;
  }
  throw UnknownSeries("summary has no series or profile named '" + series +
                      "'");
}

}  // namespace affectrl::experiments
