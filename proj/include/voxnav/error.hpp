#pragma once

#include <stdexcept>
#include <string>

namespace voxnav {

// Every error raised by the library derives from Error so callers can catch
// one type; the subclasses let the CLI and service map failures to codes.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class MalformedInputError : public Error {
public:
    explicit MalformedInputError(const std::string& what) : Error("malformed_input", what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io_error", what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config_error", what) {}
};

class LogicError : public Error {
public:
    explicit LogicError(const std::string& what) : Error("logic_error", what) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error("numeric_error", what) {}
};

class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& what) : Error("degenerate", what) {}
};

class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& what) : Error("training_error", what) {}
};

class TransportError : public Error {
public:
    TransportError(const std::string& what, bool retries_exhausted)
        : Error("transport_error", what), retries_exhausted_(retries_exhausted) {}

    bool retries_exhausted() const noexcept { return retries_exhausted_; }

private:
    bool retries_exhausted_;
};

} // namespace voxnav
