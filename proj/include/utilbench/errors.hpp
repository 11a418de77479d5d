#pragma once

#include <stdexcept>
#include <string>

namespace utilbench {

// Base class for every error the harness raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file or wire payload.
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

// Input is well-formed but violates a contract (duplicate ids, bad config, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// The backend does not declare the capability an operation needs.
class CapabilityError : public Error {
public:
    using Error::Error;
};

// Network or provider failure. Retryable failures are retried by the gateway.
class TransportError : public Error {
public:
    TransportError(const std::string& what, bool retryable, int status = 0)
        : Error(what), retryable_(retryable), status_(status) {}

    bool retryable() const noexcept { return retryable_; }
    int status() const noexcept { return status_; }

private:
    bool retryable_;
    int status_;
};

}  // namespace utilbench
