#pragma once

#include <stdexcept>
#include <string>

namespace sim3align {

/// Error categories; the CLI maps these one-to-one onto exit codes.
enum class ErrorCode {
    invalid_argument,   // bad value passed to a library call
    parse,              // malformed file or config content
    insufficient_data,  // fewer samples than the algorithm needs
    degenerate,         // geometry that admits no unique solution
    io,                 // filesystem failures
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace sim3align
