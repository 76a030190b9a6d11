#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "densflow/densflow.h"

namespace {

void to_stdout(const char* text, void*) { std::fputs(text, stdout); }
void to_stderr(const char* text, void*) { std::fputs(text, stderr); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density-weighted curve shortening flow on surfaces of revolution"};
  app.set_version_flag("--version", std::string(df_version()));
  app.require_subcommand(1);

  std::string config, run_dir;
  bool overwrite = false;

  auto* validate = app.add_subcommand("validate", "check a model's structural assumptions and print rho");
  validate->add_option("config", config, "configuration file")->required();

  auto* run = app.add_subcommand("run", "evolve the initial curve to the axis and write a run directory");
  run->add_option("config", config, "configuration file")->required();
  run->add_flag("--overwrite", overwrite, "replace an existing run directory");

  auto* blowup = app.add_subcommand("blowup", "two-stage parabolic rescaling of a finished run");
  blowup->add_option("config", config, "configuration file")->required();
  blowup->add_option("run_dir", run_dir, "run directory")->required();

  auto* mono = app.add_subcommand("monotonicity", "Gaussian density along a finished run");
  mono->add_option("config", config, "configuration file")->required();
  mono->add_option("run_dir", run_dir, "run directory")->required();

  auto* report = app.add_subcommand("report", "verify digests and print the verdict table");
  report->add_option("run_dir", run_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*validate) return df_cmd_validate(config.c_str(), to_stdout, to_stderr, nullptr);
  if (*run) return df_cmd_run(config.c_str(), overwrite ? 1 : 0, to_stdout, to_stderr, nullptr);
  if (*blowup) return df_cmd_blowup(config.c_str(), run_dir.c_str(), to_stdout, to_stderr, nullptr);
  if (*mono) return df_cmd_monotonicity(config.c_str(), run_dir.c_str(), to_stdout, to_stderr, nullptr);
  return df_cmd_report(run_dir.c_str(), to_stdout, to_stderr, nullptr);
}
