#pragma once

#include <stdexcept>
#include <string>

namespace pivnet {

// Bad parameters, malformed input, contract violations. CLI exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// File system and parsing failures. CLI exit code 3.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Resource budget refusals (e.g. pivot grid memory). CLI exit code 4.
class BudgetError : public std::runtime_error {
public:
    explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

// SGD produced a non-finite loss.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(const std::string& msg, std::size_t epoch)
        : std::runtime_error(msg), epoch(epoch) {}
    std::size_t epoch;
};

}  // namespace pivnet
