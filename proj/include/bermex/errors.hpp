#pragma once

#include <stdexcept>
#include <string>

namespace bermex {

/// Raised for malformed experiment configuration. `field()` names the offending
/// `section.key` (or is empty for structural errors) and `line()` is 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message, int line = 0)
        : std::runtime_error(format(field, message, line)), field_(std::move(field)), line_(line) {}

    const std::string& field() const noexcept { return field_; }
    int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& field, const std::string& message, int line) {
        std::string out;
        if (line > 0) out += "line " + std::to_string(line) + ": ";
        if (!field.empty()) out += field + ": ";
        return out + message;
    }

    std::string field_;
    int line_;
};

/// Raised when a numerical routine cannot proceed (non-PSD correlation, non-finite state, ...).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bermex
