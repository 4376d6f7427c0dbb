#pragma once

// Command-line front end: subcommand dispatch over a parsed experiment
// configuration, deterministic text rendering, and the mapping of the shared
// error taxonomy onto process exit codes.

#include <map>
#include <string>

#include "gps/config.hpp"

namespace gps {

inline constexpr const char* kToolVersion = "gps 0.1.0";

// Shortest round-trip decimal rendering, locale independent; infinities and
// NaN become "inf" / "-inf" / "nan".
std::string format_double(double x);

struct SubcommandResult {
  std::map<std::string, std::string> files;  // file name -> full content
  int status = 0;  // nonzero only when an oracle-suite check fails
};

// Executes one subcommand entirely in memory and returns the files it wants
// written.  Throws the shared error taxonomy on invalid configurations, so a
// failing run leaves no partial outputs behind.
SubcommandResult run_subcommand(const std::string& name,
                                const ExperimentConfig& cfg);

// Binary entry point: parses arguments, loads the config, applies the
// --out/--threads/--seed overrides, runs the subcommand, and writes its
// output files into run.out_dir.  Exit codes: 0 success, 1 oracle-check
// failure, 2 configuration or range error, 3 budget exhaustion,
// 4 inconclusive bracket.
int run_cli(int argc, const char* const* argv);

}  // namespace gps
