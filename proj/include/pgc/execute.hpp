#pragma once

#include <string>

#include "pgc/config.hpp"

namespace pgc {

/// Valid commands: mesh, solve, sweep, bubble-scan, mt-check, classify,
/// report.
bool is_known_command(const std::string& command);

/// Runs one command against a parsed configuration, writing artifacts
/// into config.out_dir. Returns the process exit status: 0 on success,
/// 1 on solver non-convergence, 2 on configuration or hypothesis errors.
/// Every failure also writes an errors.json artifact.
int execute(const std::string& command, const RunConfig& config);

}  // namespace pgc
