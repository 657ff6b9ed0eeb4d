#ifndef FUZZDIAG_ERRORS_HPP
#define FUZZDIAG_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fuzzdiag {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input. `line()` is 1-based; 0 when unknown.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that violates a structural invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Argument count does not match what the rule base expects.
class ArityError : public Error {
public:
    using Error::Error;
};

/// No rule fired for the given input.
class ZeroActivation : public Error {
public:
    using Error::Error;
};

/// Baseline slot has no observations yet; stay in survey mode.
class ColdStart : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace fuzzdiag

#endif  // FUZZDIAG_ERRORS_HPP
