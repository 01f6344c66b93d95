#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kklab/catalog.hpp"
#include "kklab/report_io.hpp"

namespace kklab {

enum class ReportFormat { Json, Csv };

const std::vector<std::string>& scenario_commands();

/// How evaluation points are chosen: explicit list, tensor grid, or seeded random draw.
struct PointSpec {
  std::vector<Vec> explicit_points;
  std::optional<std::vector<int>> grid_counts;
  Vec grid_lower, grid_upper;  // empty: the chart bounds pulled in by the margin
  int random_count = 20;
  std::uint64_t random_seed = 1;
  std::optional<double> margin;
};

struct MCConfig {
  EnsembleOptions ensemble;
  double smoothing_width = 0.0;
  int haar_resolution = 8;
  int mollifier_order = 2;
  Vec x_a, x_b;
  /// Relative tolerance accepted on |ratio - 1| besides the 3-sigma test.
  std::optional<double> tolerance;
};

struct Scenario {
  std::string command;
  std::string geometry_name;
  Geometry geometry;
  PointSpec points;
  FDScheme fd;
  PhysicalParams physical;
  SignConvention convention = SignConvention::PositiveSpheres;
  std::optional<MCConfig> mc;
  std::string representation = "trivial";
  std::optional<double> casimir_prefactor;
  std::optional<double> tolerance;
};

/// Parses and validates a JSON scenario; `command` fills in a missing "command" key and
/// must agree with it when present. Throws ConfigError.
Scenario parse_scenario(const std::string& text, const std::string& command = "");

/// Geometry from a JSON value: a catalog string such as "s2(0.5)" or an inline object with
/// constant data, {"metric": [[..]], "domain": {...}} or {"bundle": {"group", "h", "gamma", "A"}}.
Geometry geometry_from_json(const json& j);

std::vector<Vec> resolve_points(const Scenario& s);

struct ScenarioResult {
  json report;
  std::vector<json> rows;
  bool checks_passed = true;
  std::vector<std::string> failures;
};

/// Runs the command. Numerical exceptions propagate with the failing point in the message.
ScenarioResult run_scenario(const Scenario& s);

/// Report body; `timestamp` is the only non-deterministic field.
std::string render_report(const ScenarioResult& r, ReportFormat f, const std::string& timestamp);

/// Parse, run, and write <out_dir>/<command>.<ext>. Returns the process exit code
/// (0 ok, 2 config error, 3 numerical failure); messages go to `err`.
int run_scenario_file(const std::string& command, const std::string& config_path, const std::string& out_dir,
                      ReportFormat f, std::ostream& err);

std::string utc_timestamp();

}  // namespace kklab
