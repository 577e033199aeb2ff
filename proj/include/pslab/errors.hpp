#pragma once

#include <stdexcept>
#include <string>

namespace pslab {

// Process exit codes used by the command-line front end. Every library
// exception maps onto exactly one of them.
enum class ExitCode : int {
    ok = 0,
    invalid_config = 2,
    indeterminate = 3,
    budget_exceeded = 4,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

// Bad parameters, violated preconditions, values outside an operation's domain.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ExitCode::invalid_config, what) {}
};

// An enclosure straddles a decision boundary at the maximum allowed precision.
class IndeterminateError : public Error {
public:
    explicit IndeterminateError(const std::string& what) : Error(ExitCode::indeterminate, what) {}
};

// Work, memory or term budgets that a caller configured were exceeded.
class BudgetError : public Error {
public:
    explicit BudgetError(const std::string& what) : Error(ExitCode::budget_exceeded, what) {}
};

} // namespace pslab
