#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oltc/bnb.hpp"
#include "oltc/network.hpp"
#include "oltc/opf.hpp"
#include "oltc/powerflow.hpp"
#include "oltc/rational.hpp"

namespace oltc {

enum class ScenarioMode { kExact, kApproximate, kFixed, kEnumerate };

const char* to_string(ScenarioMode m);
ScenarioMode parse_scenario_mode(const std::string& text);

struct ScenarioSpec {
  std::string name;
  std::filesystem::path case_path;
  /// Uniform tap step applied to every transformer; must divide t_max - t_min.
  std::optional<Rational> delta_t;
  /// Per-transformer K overrides, transformer order. Ignored when empty.
  std::vector<int> k_taps;
  ScenarioMode mode = ScenarioMode::kExact;
  /// kFixed: explicit taps, or the name of an earlier scenario whose taps are reused.
  std::optional<TapAssignment> fixed_taps;
  std::string fixed_from;
  BnbSettings solver;
  OpfOptions opf;
};

/// Applies delta_t / k_taps of a spec to a loaded case. Throws InputError when
/// the step does not divide a transformer's ratio range.
NetworkCase apply_tap_grid(const NetworkCase& c, const ScenarioSpec& spec);

/// K = (t_max - t_min) / dt in exact arithmetic.
int taps_for_step(const TapChanger& tap, const Rational& dt);

/// Parses "0.005" or "1/200".
Rational parse_step(const std::string& text);

struct DiagnosticThresholds {
  double cone_gap = 1e-5;
  double bigm_gap = 1e-6;
  double oracle_rel_diff = 1e-3;
};

struct Diagnostics {
  double max_cone_gap = 0.0;
  double max_bigm_gap = 0.0;
  PowerFlowStatus oracle_status = PowerFlowStatus::kNotConverged;
  double oracle_losses_kw = 0.0;
  double model_losses_kw = 0.0;
  double relative_loss_difference = 0.0;
  /// Smallest distance of a non-slack squared voltage to its bounds, p.u.^2
  /// (negative when a bound is violated), from the model and from the oracle.
  double model_voltage_slack = 0.0;
  double oracle_voltage_slack = 0.0;
  std::vector<std::string> flags;
};

/// Cross-checks an optimal solution: relaxation gaps, oracle re-simulation of
/// the decoded taps with the solved dispatch, and voltage-bound slack.
Diagnostics diagnose(const OpfSolution& solution, const NetworkCase& c,
                     const DiagnosticThresholds& thresholds = {});

struct ScenarioRow {
  std::string name;
  ScenarioMode mode = ScenarioMode::kExact;
  std::string status;
  std::string error;
  std::vector<int> k_taps;
  std::string delta_t;
  TapAssignment taps;
  std::vector<double> ratios;
  double losses_kw = 0.0;
  double wall_time_s = 0.0;
  std::size_t binaries = 0;
  long nodes = 0;
  double bound_gap = 0.0;
  std::optional<Diagnostics> diagnostics;
  bool flagged = false;
};

struct ComparisonRow {
  std::string exact;
  std::string approximate;
  std::string delta_t;
  std::vector<double> exact_ratios;
  std::vector<double> approximate_ratios;
  double exact_losses_kw = 0.0;
  /// Oracle losses at the approximate model's decoded taps.
  double approximate_oracle_losses_kw = 0.0;
  bool approximate_not_better = false;
};

struct RunReport {
  std::vector<ScenarioRow> rows;
  std::vector<ComparisonRow> comparisons;
  std::string timestamp;
  std::string compiler;
  int max_threads = 1;
};

struct RunOptions {
  DiagnosticThresholds thresholds;
  /// Run scenarios concurrently; timings become informational only.
  bool parallel = false;
};

/// Runs every spec in order. Per-scenario failures are recorded in the row and
/// the run continues. Wall time excludes case parsing.
RunReport run_scenarios(const std::vector<ScenarioSpec>& specs, const RunOptions& options = {});

/// Exact-model rows at the step sizes 0.02, 0.01, 0.005, 0.002, 0.001, a
/// fixed-ratio row reusing the 0.005 taps, a 0.0005 row, and an approximate
/// row at 0.005 for the exact-versus-approximate comparison. Steps with
/// K > max_k are left out.
std::vector<ScenarioSpec> default_battery(const std::filesystem::path& case_path, const BnbSettings& solver,
                                          int max_k = 200);

/// Machine-readable report. Volatile fields (timestamp, wall times) are kept
/// under "environment" and "wall_time_s" so they can be stripped for comparison.
nlohmann::json report_to_json(const RunReport& report);

/// Drops timestamps and wall times from a report document.
nlohmann::json strip_volatile(nlohmann::json doc);

/// Aligned text tables.
std::string report_to_text(const RunReport& report);

}  // namespace oltc
