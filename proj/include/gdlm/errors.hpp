#pragma once

#include <stdexcept>
#include <string>

namespace gdlm {

/// Bad parameters, bad configuration, or inputs that cannot describe a
/// valid problem (duplicate ids, disconnected graph, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A value violates a documented contract (simplex violation, horizon
/// out of range, mismatched dimensions).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File system or parse failures; messages carry the path and, for line
/// oriented formats, the 1-based line number.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A computation produced a non-finite value; the message carries the
/// hyperparameters that triggered it.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace gdlm
