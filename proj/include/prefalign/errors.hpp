#pragma once

#include <stdexcept>
#include <string>

namespace prefalign {

// Error classes map 1:1 onto CLI exit codes and the machine-parsable
// `error: <class>: <detail>` line printed on failure.
class Error : public std::runtime_error {
public:
    Error(std::string klass, const std::string& what)
        : std::runtime_error(what), klass_(std::move(klass)) {}
    const std::string& error_class() const { return klass_; }

private:
    std::string klass_;
};

// Invalid or inconsistent configuration. Exit code 2.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config_error", what) {}
};

// The backend cannot satisfy the request (no logprobs, no sampling
// controls, ...). Exit code 3.
class CapabilityError : public Error {
public:
    explicit CapabilityError(const std::string& what) : Error("capability_error", what) {}
};

// Malformed or out-of-contract input data. Exit code 4.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error("data_error", what) {}
};

// Some batch items failed in non-strict mode. Exit code 5.
class PartialFailure : public Error {
public:
    explicit PartialFailure(const std::string& what) : Error("partial_failure", what) {}
};

// Remote transport failure after all retries; carries the attempt count.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts)
        : Error("transport_error", what), attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_;
};

}  // namespace prefalign
