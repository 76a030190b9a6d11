#pragma once

// Run configuration, run-directory persistence and the subcommands.

#include <filesystem>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "densflow/blowup_analysis.hpp"
#include "densflow/flow_solver.hpp"
#include "densflow/monitors.hpp"
#include "densflow/monotonicity.hpp"

namespace densflow {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunConfig {
  std::string model_kind = "flat_log";
  double b = 1.0;
  double r_max = std::numeric_limits<double>::quiet_NaN();  // NaN: builtin default

  std::string domain_kind = "periodic";
  double period = 0.0;  // 0: 2 pi
  double a1 = 0.0;
  double a2 = 0.0;      // interval default [0, pi]

  std::size_t n = 256;

  std::string init_family = "cosine";
  double c = 1.0;
  double a = 0.0;
  double k = 1.0;

  SolverConfig solver;
  MonitorOptions monitors;
  BlowupOptions blowup;
  bool monotonicity = true;
  double line_tol = 0.05;
  double residual_tol = 0.1;

  std::string output_directory;
  // Keys exactly as given, in file order, for the manifest echo.
  std::vector<std::pair<std::string, std::string>> echo;
};

// `section.key = value` lines, '#' comments. Numbers may be written as
// multiples of pi ("2*pi"). Unknown keys and malformed values throw a
// configuration error naming the line.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::filesystem::path& path);

SurfaceDensityModel make_model(const RunConfig& cfg);
Domain make_domain(const RunConfig& cfg);
GraphCurve make_initial_curve(const RunConfig& cfg);

// DENSFLOW_OUT overrides output.directory; falls back to runs/<config stem>.
std::filesystem::path output_directory(const RunConfig& cfg, const std::filesystem::path& config_path);

std::string format_double(double v);  // %.17g
std::string sha256_file(const std::filesystem::path& path);

struct Manifest {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::pair<std::string, std::string>> files;  // relative path, sha256

  void set(const std::string& key, const std::string& value);
  const std::string* get(const std::string& key) const;
};

Manifest read_manifest(const std::filesystem::path& dir);
// Recomputes the file table from the current directory contents and writes manifest.txt.
void write_manifest(const std::filesystem::path& dir, Manifest manifest);
// Paths whose digest does not match (or that are missing).
std::vector<std::string> verify_manifest(const std::filesystem::path& dir, const Manifest& manifest);

void write_trajectory(const std::filesystem::path& dir, const FlowTrajectory& trajectory,
                      const MonitorReport& report);
FlowTrajectory read_trajectory(const std::filesystem::path& dir);

// Subcommands. Return the process exit status: 0 success, 1 verdict
// failure, 2 malformed configuration or missing run directory, 3 numerical failure.
int cmd_validate(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int cmd_run(const std::filesystem::path& config, bool overwrite, std::ostream& out, std::ostream& err);
int cmd_blowup(const std::filesystem::path& config, const std::filesystem::path& run_dir,
               std::ostream& out, std::ostream& err);
int cmd_monotonicity(const std::filesystem::path& config, const std::filesystem::path& run_dir,
                     std::ostream& out, std::ostream& err);
int cmd_report(const std::filesystem::path& run_dir, std::ostream& out, std::ostream& err);

}  // namespace densflow
