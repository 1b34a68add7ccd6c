#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xtask {

/// Machine-readable category carried by every library error. The CLI maps it
/// onto the `error` field of its JSON failure report.
enum class ErrorKind {
    registry,
    invalid_argument,
    parse,
    format,
    io,
    sync,
    onset,
    preprocess,
    fit,
    convergence,
    metric,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Parse failure with source position. `line` is 0 for binary files.
/// `reason` is a short stable tag ("syntax", "malformed_key", "truncated", ...)
/// so callers can tell failure modes apart without matching on text.
class ParseError : public Error {
public:
    ParseError(std::string file, std::size_t line, const std::string& message, std::string reason = "syntax");

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string file_;
    std::size_t line_;
    std::string reason_;
};

}  // namespace xtask
