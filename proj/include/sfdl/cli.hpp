#pragma once

#include <iosfwd>

namespace sfdl {

// Exit statuses of the command-line front end.
enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 2,        // bad flags or unknown subcommand
    exit_unreadable = 3,   // an input file could not be opened
    exit_schema = 4,       // scenario or result file violates its schema
    exit_runtime = 5,      // the experiment itself failed
};

// Subcommands: run, compare, plot-data, validate. Every flag can also be set
// through an SFDL_-prefixed environment variable (--frac -> SFDL_FRAC);
// explicit flags win.
int cli_run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_run(int argc, const char* const* argv);

}  // namespace sfdl
