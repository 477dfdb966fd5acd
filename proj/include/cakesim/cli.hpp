#pragma once

#include <string>
#include <vector>

namespace cakesim {

// Entry point behind the command-line tool; exposed so tests can drive
// the subcommands in-process. Returns the process exit status.
int run_cli(const std::vector<std::string>& args);

} // namespace cakesim
