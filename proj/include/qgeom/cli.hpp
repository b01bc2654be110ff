#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qgeom::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kSuccess = 0, kValidationError = 1, kNumericalError = 2 };

/// `qgeom <grid|chern|distance|evolve|check> --config <file>
///        [--output <path>] [--format csv|json]`
///
/// Results go to the output path (or `out` when none is configured).
/// Diagnostics go to `err`. On failure no partial output file is left behind.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace qgeom::cli
