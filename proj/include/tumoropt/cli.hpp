#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace tumoropt {

/// Process exit codes of the command-line driver.
enum ExitCode : int { exit_pass = 0, exit_criteria_failed = 1, exit_usage = 2, exit_divergence = 3 };

const std::vector<std::string>& subcommand_names();

/// Runs one subcommand against a config file. Results go to `out` (and the
/// configured output directory); failures produce one machine-readable line
/// on `err`. Honors RUN_SEED from the environment.
int run_subcommand(const std::string& name, const std::filesystem::path& config_path,
                   const std::vector<std::string>& overrides, std::ostream& out, std::ostream& err);

}  // namespace tumoropt
