#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gaitlab/gait_selector.hpp"
#include "gaitlab/locomotion.hpp"
#include "gaitlab/randomization.hpp"

namespace gaitlab {

/// Scenario file problem; carries the 1-based line/column for JSON syntax errors.
class ScenarioError : public InvalidInput {
 public:
  ScenarioError(const std::string& what, int line = 0, int column = 0);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

enum class CommandKind { Piecewise, Sinusoid, Sweep, GaitCycle };

struct CommandScript {
  CommandKind kind = CommandKind::Piecewise;
  std::vector<CommandSegment> segments;

  // sinusoid: vx = offset + amplitude sin(2 pi t / period)
  double amplitude = 0.5;
  double offset = 0.5;
  double period = 4.0;

  // sweep: hold v_start until `hold`, then ramp linearly to v_end at `ramp_end` (defaults to the duration)
  double v_start = 0.0;
  double v_end = 1.5;
  double hold = 0.5;
  std::optional<double> ramp_end;

  // gait cycle / sinusoid gait switching
  std::vector<GaitId> gaits;
  double switch_period = 1.0;
  double vx = 0.3;
  double wz = 0.0;
  GaitId gait = GaitId::Trot;

  /// Velocity and requested gait at time t of a run lasting `duration`.
  Command at(double t, double duration) const;
};

enum class ControllerKind { Scripted, Policy };
enum class SelectorKind { Fixed, Oracle, Policy };

struct ScenarioOutputs {
  std::string dir = ".";
  std::string timeseries = "timeseries.csv";
  std::string summary = "summary.json";
  std::string selection = "selection.csv";
};

struct Scenario {
  std::string name = "scenario";
  int terrain_level = 0;
  std::uint64_t terrain_seed = 7;
  std::uint64_t seed = 1;
  double duration = 10.0;
  ControllerKind controller = ControllerKind::Scripted;
  std::string controller_checkpoint;
  SelectorKind selector = SelectorKind::Fixed;
  std::string selector_checkpoint;
  SelectorConfig oracle;
  CommandScript commands;
  double bin_width = 0.1;
  ScenarioOutputs outputs;
  StackConfig stack;
};

/// Relative checkpoint paths resolve against `base_dir`.
Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".");
Scenario load_scenario(const std::string& path);
void validate(const Scenario& s);

/// Oracle sweep 0 -> v_max on flat ground.
Scenario sweep_scenario(double v_max = 1.5, double duration = 20.0, std::uint64_t seed = 1);

struct RunResult {
  nlohmann::json summary;
  bool failed = false;
  std::optional<double> failure_time;
  std::vector<SelectionTraceRow> selection;
};

inline constexpr const char* kTimeseriesSchema = "# gaitlab-timeseries v1";

/// Runs at the stack rates (1 kHz / 500 Hz / 100 Hz). Streams are optional.
RunResult run_scenario(const Scenario& s, std::ostream* timeseries = nullptr, std::ostream* selection = nullptr);
/// Writes the timeseries, selection trace and summary files into `out_dir`.
RunResult run_scenario_to_dir(const Scenario& s, const std::string& out_dir);

/// Cross-run table with lower-is-better metrics normalised by the best (smallest magnitude)
/// completed run. Failed runs are listed and flagged but not normalised.
nlohmann::json export_summary(const std::vector<nlohmann::json>& runs);
void write_summary_table_csv(std::ostream& out, const nlohmann::json& table);

/// Scheduler phases and contact references of one gait sampled over [t0, t1].
void write_gait_refs(std::ostream& out, const GaitTable& table, GaitId gait, double t0, double t1, double dt);

}  // namespace gaitlab
