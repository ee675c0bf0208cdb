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

#ifndef AFFECTRL_IO_HPP_
#define AFFECTRL_IO_HPP_

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "affectrl/config.hpp"
#include "affectrl/emotion.hpp"
#include "affectrl/learner.hpp"
#include "affectrl/rng.hpp"
#include "json.hpp"

namespace affectrl::io {

// ---------------------------------------------------------------------------
// JSON helpers

// Parses JSON text; syntax errors become ParseError with line and column.
nlohmann::json ParseJson(const std::string& text);
std::string ReadFile(const std::string& path);
// Writes atomically enough for our purposes (truncate + write). Throws
// IoError.
void WriteFile(const std::string& path, const std::string& contents);
// Canonical form: sorted keys, two-space indent, trailing newline.
std::string CanonicalDump(const nlohmann::json& j);

nlohmann::json PolicyToJson(const PolicyKind& p);
nlohmann::json TdModeToJson(const TdMode& m);
nlohmann::json SpecToJson(const EnvironmentSpec& spec);
// Throws ValidationError (fields relative to `path`).
EnvironmentSpec SpecFromJson(const nlohmann::json& j,
                             const std::string& path = "environment");

// ---------------------------------------------------------------------------
// Scenario configs

// Validates and converts; every problem is reported, not only the first.
// Throws ValidationError.
ScenarioConfig ConfigFromJson(const nlohmann::json& j);
nlohmann::json ConfigToJson(const ScenarioConfig& cfg);
// Throws IoError, ParseError, ValidationError.
ScenarioConfig LoadConfig(const std::string& path);

// ---------------------------------------------------------------------------
// Snapshots

inline constexpr int kSnapshotVersion = 1;

struct Snapshot {
  ScenarioConfig config;
  std::uint64_t seed = 0;
  QTable q;
  TransitionModel model;
  std::map<std::string, Rng::Cursor> rng;
};

nlohmann::json SnapshotToJson(const Snapshot& s);
// Throws VersionMismatch, ValidationError.
Snapshot SnapshotFromJson(const nlohmann::json& j);
void SaveSnapshot(const Snapshot& s, const std::string& path);
Snapshot LoadSnapshot(const std::string& path);

// ---------------------------------------------------------------------------
// Traces

struct TraceRow {
  std::string run_id;
  std::uint64_t seed = 0;
  int episode = 0;
  int step = 0;
  StateId state = 0;
  ActionId action = 0;
  double reward = 0.0;
  StateId next_state = 0;
  bool terminal = false;
  std::optional<ActionId> next_action;
  double td_error = 0.0;
  EmotionSignal signal;
};

const std::vector<std::string>& TraceColumns();
// Columns derived from Q and the model, recomputed by annotation.
const std::vector<std::string>& DerivedTraceColumns();

std::string FormatTraceField(const std::string& s);  // RFC 4180 quoting
std::string FormatTraceRow(const TraceRow& row);

// Appends rows to a CSV file, writing the header before the first row.
class TraceWriter {
 public:
  // Throws IoError.
  explicit TraceWriter(const std::string& path);
  void Append(const TraceRow& row);
  void Flush();
  std::size_t rows() const { return rows_; }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t rows_ = 0;
  bool header_written_ = false;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180 reader. Throws ParseError on unterminated quotes or ragged rows.
CsvTable ParseCsv(const std::string& text);
std::string WriteCsv(const CsvTable& table);

}  // namespace affectrl::io

#endif  // AFFECTRL_IO_HPP_
