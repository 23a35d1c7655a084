#pragma once

#include <stdexcept>
#include <string>

namespace fairshift {

/// Input violates a documented precondition (CLI exit code 2).
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// An adversarial search could not produce a certified feasible witness (CLI exit code 3).
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fairshift
