#pragma once

#include <stdexcept>
#include <string>

namespace driftbench {

// Base class for all driftbench errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed content in a text input (label file, manifest, pipeline spec, ...).
// Carries the 1-based line number when one applies.
class ParseError : public Error {
public:
    explicit ParseError(std::string msg, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : std::move(msg)),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_ = 0;
};

// A value or structure violates a domain invariant.
struct ValidationError : Error {
    using Error::Error;
};

// Filesystem / OS level failure (unreadable file, unwritable directory, ...).
struct IoError : Error {
    using Error::Error;
};

// Bad command-line usage; maps to exit code 2 in the CLI.
struct UsageError : Error {
    using Error::Error;
};

} // namespace driftbench
