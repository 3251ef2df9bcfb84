#pragma once

#include <exception>
#include <iosfwd>
#include <string>
#include <vector>

#include "odl_cli/config.hpp"

namespace odl::cli {

enum ExitCode { kOk = 0, kConfigFailure = 2, kIngestionFailure = 3, kRunFailure = 4 };

/// Maps an exception to the documented exit code.
int exit_code_for(const std::exception& e);

const std::vector<std::string>& command_names();

/// Runs `command` with outputs under `out_dir` and writes `manifest.json`.
/// Progress goes to `log`. Throws on failure.
void run_command(const std::string& command, const Config& config, const std::string& out_dir, std::ostream& log);

/// `odl` version string.
const char* tool_version();

}  // namespace odl::cli
