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

#include "cli.hpp"

#include <cstdint>
#include <cstdlib>
#include <memory>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "affectrl/errors.hpp"
#include "affectrl/experiments.hpp"
#include "affectrl/io.hpp"

namespace affectrl::cli {
namespace {

// Routes logging to `err` for the lifetime of one Main call.
class ScopedLogging {
 public:
  explicit ScopedLogging(std::ostream& err)
      : previous_(spdlog::default_logger()) {
    SetUp(err);
  }
  ~ScopedLogging() { spdlog::set_default_logger(previous_); }
  ScopedLogging(const ScopedLogging&) = delete;
  ScopedLogging& operator=(const ScopedLogging&) = delete;

 private:
  static void SetUp(std::ostream& err);
  std::shared_ptr<spdlog::logger> previous_;
};

void ScopedLogging::SetUp(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("affectrl", sink);
  logger->set_pattern("[%l] %v");
  spdlog::level::level_enum level = spdlog::level::info;
  std::string bad;
  if (const char* env = std::getenv("AFFECTRL_LOG")) {
    const std::string v = env;
    if (v == "error") level = spdlog::level::err;
    else if (v == "warn") level = spdlog::level::warn;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
    else bad = v;
  }
  logger->set_level(level);
  spdlog::set_default_logger(logger);
  if (!bad.empty()) {
    spdlog::warn("ignoring AFFECTRL_LOG='{}' (expected error, warn, info or debug)",
                 bad);
  }
}

const char* Describe(const std::string& scenario) {
  if (scenario == "habituation") {
    return "joy fades under a repeated reward; distress when it is withheld";
  }
  if (scenario == "cliff_fear") {
    return "fear on a slippery corridor vs. control, rumination, closeness";
  }
  if (scenario == "extinction") {
    return "fear of a stimulus decays as safe exposures update the model";
  }
  if (scenario == "gamble") {
    return "optimistic vs. expected TD on a safe/risky choice";
  }
  return "hope across reveals and disappointment on a bust";
}

int CmdRun(const std::string& config_path, std::vector<std::uint64_t> seeds,
           int jobs, const std::string& out_dir, bool audit,
           std::ostream& out) {
  ScenarioConfig cfg = io::LoadConfig(config_path);
  if (!seeds.empty()) cfg.seeds = seeds;
  experiments::RunOptions opts;
  opts.out_dir = out_dir.empty() ? cfg.output_dir : out_dir;
  opts.jobs = jobs;
  opts.audit_rollouts = audit;
  spdlog::info("running '{}' on {} seed(s) into {}", cfg.scenario,
               cfg.seeds.size(), opts.out_dir);
  const experiments::RunSummary s = experiments::RunScenario(cfg, opts);
  out << "scenario " << s.scenario << ": " << s.seeds.size() << " seed(s), "
      << s.n_episodes << " episode(s)\n";
  for (const auto& [name, st] : s.orderings) {
    out << "  " << name << ": " << st.passes << "/" << st.total << "\n";
  }
  out << "summary written to " << opts.out_dir << "/summary.json\n";
  return kExitOk;
}

int CmdAnnotate(const std::string& trace_path, const std::string& snap_path,
                const std::string& out_path) {
  const io::CsvTable trace = io::ParseCsv(io::ReadFile(trace_path));
  const io::Snapshot snap = io::LoadSnapshot(snap_path);
  const io::CsvTable annotated = experiments::Annotate(trace, snap);
  io::WriteFile(out_path, io::WriteCsv(annotated));
  spdlog::info("annotated {} row(s) into {}", annotated.rows.size(), out_path);
  return kExitOk;
}

int CmdPlotData(const std::string& summary_path, const std::string& series,
                const std::string& out_path) {
  const experiments::RunSummary s = experiments::SummaryFromJson(
      io::ParseJson(io::ReadFile(summary_path)));
  io::WriteFile(out_path, io::WriteCsv(experiments::PlotData(s, series)));
  return kExitOk;
}

int Report(std::ostream& err, const char* kind, const std::exception& e,
           int code) {
  err << kind << ": " << e.what() << "\n";
  return code;
}

}  // namespace

int Main(const std::vector<std::string>& args, std::ostream& out,
         std::ostream& err) {
  ScopedLogging logging(err);
  CLI::App app{"Tabular TD learning with derived emotion signals", "affectrl"};
  app.require_subcommand(1);
  // Top-level help lists every subcommand together with its flags.
  app.set_help_flag();
  app.set_help_all_flag("-h,--help", "Print this help message and exit");
  app.footer("Environment: AFFECTRL_LOG=error|warn|info|debug sets log verbosity.");

  std::string config_path, out_dir;
  std::vector<std::uint64_t> seeds;
  int jobs = 0;
  bool audit = false;
  CLI::App* run = app.add_subcommand("run", "Run a scenario config");
  run->add_option("--config", config_path, "Scenario config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--seed", seeds, "Override the config's seeds (repeatable)")
      ->take_all();
  run->add_option("--jobs", jobs, "Worker threads (default: logical cores)")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--out", out_dir, "Output directory (default: config output_dir)");
  run->add_flag("--audit-rollouts", audit,
                "Dump every imagined rollout to audit_*.json");

  app.add_subcommand("list-scenarios", "List the built-in scenarios");

  std::string trace_path, snap_path, out_path;
  CLI::App* annotate = app.add_subcommand(
      "annotate", "Recompute TD error and emotion columns of a trace");
  annotate->add_option("--trace", trace_path, "Trace CSV")
      ->required()
      ->check(CLI::ExistingFile);
  annotate->add_option("--snapshot", snap_path, "Snapshot JSON")
      ->required()
      ->check(CLI::ExistingFile);
  annotate->add_option("--out", out_path, "Output CSV")->required();

  std::string summary_path, series;
  CLI::App* plot = app.add_subcommand(
      "plot-data", "Write one summary series as x,mean,stdev CSV");
  plot->add_option("--summary", summary_path, "summary.json of a run")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--series", series, "Series or profile name")->required();
  plot->add_option("--out", out_path, "Output CSV")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  try {
    if (run->parsed()) {
      return CmdRun(config_path, seeds, jobs, out_dir, audit, out);
    }
    if (app.got_subcommand("list-scenarios")) {
      for (const auto& name : experiments::ScenarioNames()) {
        out << name << "\t" << Describe(name) << "\n";
      }
      return kExitOk;
    }
    if (annotate->parsed()) {
      return CmdAnnotate(trace_path, snap_path, out_path);
    }
    if (plot->parsed()) return CmdPlotData(summary_path, series, out_path);
  } catch (const ValidationError& e) {
    return Report(err, "ValidationError", e, kExitValidation);
  } catch (const ParseError& e) {
    return Report(err, "ParseError", e, kExitValidation);
  } catch (const SchemaMismatch& e) {
    return Report(err, "SchemaMismatch", e, kExitValidation);
  } catch (const VersionMismatch& e) {
    return Report(err, "VersionMismatch", e, kExitValidation);
  } catch (const UnknownSeries& e) {
    return Report(err, "UnknownSeries", e, kExitValidation);
  } catch (const std::exception& e) {
    return Report(err, "error", e, kExitRuntime);
  }
  return kExitRuntime;
}

}  // namespace affectrl::cli
