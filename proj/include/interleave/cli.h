#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace interleave {

// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1, // unexpected error
    kExitUsage = 2,
    kExitValidation = 3,
    kExitGuard = 4,
    kExitInvariant = 5,
    kExitIo = 6,     // missing or unwritable file
    kExitFormat = 7, // malformed WAV / JSON / CSV
};

// Runs one command; `args` excludes the program name.
int run_cli(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

// Output directory used when --out is not given.
std::string default_out_dir();

} // namespace interleave
