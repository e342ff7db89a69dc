#ifndef SPHBT_ERRORS_HPP
#define SPHBT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sphbt {

/// Base of every error raised by the library. Carries the process exit code
/// the command-line driver maps it to.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, int exit_code)
        : std::runtime_error(what), exit_code_(exit_code) {}

    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

/// Argument outside the mathematical domain of an operation (degree larger
/// than the grid, index out of range, length mismatch, ...).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(what, 2) {}
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what, 2) {}
};

/// Non-finite values, failed root bracketing and similar numeric breakdowns.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(what, 3) {}
};

/// Iterative procedure exhausted its budget.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : Error(what, 4), last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

} // namespace sphbt

#endif
