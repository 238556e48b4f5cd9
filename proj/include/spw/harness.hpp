#pragma once

// Experiment plumbing: configuration, dispatch to the solvers, artifacts on
// disk and a manifest describing each run.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "spw/popdyn.hpp"

namespace spw {

/// Stable process exit codes.
enum class ExitCode : int {
  ok = 0,
  internal_error = 1,
  invalid_parameters = 2,
  contradiction = 3,
  non_convergence = 4,
  io_error = 5,
  resource_limit = 6,
};

inline constexpr std::string_view kSubcommands[] = {"gen",   "bp",     "sp",       "unroll",
                                                    "probe", "popdyn", "lyapunov", "scan"};

struct ExperimentConfig {
  std::string subcommand;
  std::size_t n_vars = 1000;
  double alpha = 4.2;
  /// Grid for scan; empty elsewhere.
  std::vector<double> alphas;
  std::size_t arity = 3;
  std::size_t L = 100000;
  double epsilon = 1e-3;
  std::size_t max_sweeps = 1000;
  double damping = 0.0;
  /// random-sequential | synchronous
  std::string schedule = "random-sequential";
  /// uniform | paper
  std::string bp_mode = "uniform";
  std::uint32_t root = 0;
  std::size_t k_max = 3;
  std::size_t n_boundaries = 10;
  std::size_t t_max = 120;
  std::size_t t_burn = 20;
  std::size_t sigma_samples = 1000000;
  std::vector<std::uint64_t> seeds{1};
  /// DIMACS file to read instead of generating one.
  std::string input;
  std::string output_dir;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Throws InvalidParameters naming the first offending field.
void validate(const ExperimentConfig& config);

/// `key = value` lines in a fixed order; doubles keep all 17 digits.
std::string to_key_value(const ExperimentConfig& config);
/// Accepts `#` comments and blank lines. Unknown keys and malformed values
/// throw InvalidParameters; missing keys keep their defaults.
ExperimentConfig parse_key_value(std::string_view text);

/// from, from + step, ... up to `to` inclusive (with a half-step tolerance).
std::vector<double> alpha_grid(double from, double to, double step);

nlohmann::json config_json(const ExperimentConfig& config);

struct StageTiming {
  std::string name;
  double seconds = 0.0;
};

struct RunManifest {
  ExperimentConfig config;
  std::string version;
  double wall_seconds = 0.0;
  std::vector<StageTiming> stages;
  /// (file name, lowercase hex SHA-256) per artifact, in write order.
  std::vector<std::pair<std::string, std::string>> digests;
  ExitCode exit_code = ExitCode::ok;
  std::string message;
};

nlohmann::json manifest_json(const RunManifest& manifest);

std::string sha256_hex(std::string_view bytes);

/// Output directory: the config's, else $SPW_OUTPUT_DIR, else "spw-out".
std::filesystem::path output_directory(const ExperimentConfig& config);

/// Runs one experiment, writing artifacts plus manifest.json and config.txt
/// into the output directory. Errors are mapped to exit codes, never thrown.
/// Progress lines go to `log`.
RunManifest run(const ExperimentConfig& config, std::ostream& log);

struct PlotColumn {
  std::string name;
  std::vector<double> values;
  bool scientific = false;
};

using PlotTable = std::vector<PlotColumn>;

PlotTable scan_table(const ScanResult& scan);
PlotTable trajectory_table(const TrajectoryRecord& record);

/// Headered CSV of the named columns in the order given, one row per entry.
/// Scientific columns use %.10e, others %.17g. Throws InvalidParameters for
/// an empty table, an unknown column, or ragged columns.
void emit_plot_data(std::ostream& out, const PlotTable& table,
                    std::span<const std::string> columns);

}  // namespace spw
