#pragma once

#include <stdexcept>
#include <string>

namespace tacsearch {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (wrong node status, empty token list, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Input value outside the defined domain (e.g. distance below 1).
class DomainError : public Error {
public:
    using Error::Error;
};

// Structurally well-formed input that violates an invariant (bad distance tuple,
// out-of-range wire payload).
class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed file or token stream; carries the 1-based line number when known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& message, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

class EnvironmentIOError : public Error {
public:
    using Error::Error;
};

// Failures of an external policy backend. The search layer downgrades these to an
// empty expansion instead of aborting.
class PolicyBackendError : public Error {
public:
    using Error::Error;
};

class PolicyTimeoutError : public PolicyBackendError {
public:
    using PolicyBackendError::PolicyBackendError;
};

class PolicyProtocolError : public PolicyBackendError {
public:
    using PolicyBackendError::PolicyBackendError;
};

class PolicyConnectError : public PolicyBackendError {
public:
    using PolicyBackendError::PolicyBackendError;
};

}  // namespace tacsearch
