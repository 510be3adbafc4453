#pragma once

// Protocol orchestration: configuration, the experiment runners, sweeps,
// convergence gates and report emission.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qsim/model.hpp"

namespace qsim::scenarios {

enum class Protocol { cool, squeeze, cat, detect, sweep_amplitude, sweep_detuning, sweep_gamma, validate_expansion };

std::string to_string(Protocol p);
/// Throws ConfigError on an unknown name.
Protocol protocol_from_string(const std::string& name);

struct GridOverride {
  double half_width;
  double step;
};

/// Everything in rad/s, seconds or dimensionless; ingestion converts from the
/// *_over_2pi_hz keys of the JSON document.
struct ScenarioConfig {
  Protocol protocol = Protocol::cat;
  std::optional<model::DeviceParams> device;
  std::optional<double> lambda;
  std::optional<double> omega_m;

  std::optional<double> eps_minus, eps_plus, eps1, eps2;
  std::optional<double> theta_c;

  double Gamma = 0.0;
  double gamma = 0.0;
  double n_th = 0.0;
  double detuning_d = 0.0;

  int fock_cutoff = 30;
  double duration = 60e-6;
  double sample_step = 0.25e-6;
  double tolerance = 1e-8;
  std::optional<GridOverride> grid;
  double lifetime = 0.5e-3;
  double off_resonance = 0.0;
  std::vector<double> sweep_values;

  int workers = 1;
  bool convergence_gate = true;

  /// The document as ingested, echoed into the report.
  std::string source_json;

  /// Theta_c from the explicit value or from 2 lambda^2 eps1.
  double resolved_theta_c() const;
};

/// Parses and validates a JSON document. Unknown keys, keys that the chosen
/// protocol does not use and missing required keys raise ConfigError.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::filesystem::path& path);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct GateRecord {
  bool ran = false;
  bool passed = true;
  int base_cutoff = 0;
  int rerun_cutoff = 0;
  double base_tolerance = 0.0;
  double rerun_tolerance = 0.0;
  std::map<std::string, double> baseline;
  std::map<std::string, double> cutoff_rerun;
  std::map<std::string, double> tolerance_rerun;
  double max_change = 0.0;
  static constexpr double threshold = 1e-3;
};

struct Report {
  Protocol protocol = Protocol::cat;
  std::string config_echo;
  std::map<std::string, double> derived;
  std::map<std::string, double> headline;
  std::map<std::string, Table> tables;  // file stem -> CSV table
  std::vector<std::string> warnings;
  GateRecord gate;
  double wall_seconds = 0.0;
};

Report run_cool(const ScenarioConfig& cfg);
Report run_squeeze(const ScenarioConfig& cfg);
Report run_cat(const ScenarioConfig& cfg);
Report run_detect(const ScenarioConfig& cfg);
Report sweep_detuning(const ScenarioConfig& cfg);
Report sweep_gamma(const ScenarioConfig& cfg);
Report sweep_amplitude(const ScenarioConfig& cfg);
Report validate_expansion(const ScenarioConfig& cfg);

/// Dispatches on cfg.protocol.
Report run(const ScenarioConfig& cfg);

std::string report_json(const Report& report);
std::string table_csv(const Table& table);
/// Writes report.json and one <stem>.csv per table into dir (created if absent).
void write_report(const Report& report, const std::filesystem::path& dir);

/// Shortest-round-trip-safe 17-significant-digit rendering.
std::string format_double(double v);

}  // namespace qsim::scenarios
