#pragma once

#include <stdexcept>
#include <string>

namespace interleave {

// Error taxonomy shared by the library and the CLI. Each class maps to one
// process exit code in the CLI (see cli.h).

// Bad arguments supplied by a caller (flag values, malformed requests).
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string & what) : std::invalid_argument(what) {}
};

// Input violates a documented contract: shape mismatch, out-of-range token,
// invalid pattern, inconsistent interleaved sequence, bad config value.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string & what) : std::invalid_argument(what) {}
};

// Request exceeds a size guard (e.g. joint table too large).
class GuardError : public std::runtime_error {
public:
    explicit GuardError(const std::string & what) : std::runtime_error(what) {}
};

// A file could not be opened or read.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string & what) : std::runtime_error(what) {}
};

// A file was read but its content is not in the expected format.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string & what) : std::runtime_error(what) {}
};

// An internal invariant was breached at runtime (non-finite loss, position
// read before written, oracle self-check failure).
class InvariantError : public std::logic_error {
public:
    explicit InvariantError(const std::string & what) : std::logic_error(what) {}
};

} // namespace interleave
