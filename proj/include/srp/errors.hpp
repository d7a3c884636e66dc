#pragma once

#include <stdexcept>
#include <string>

namespace srp {

// Invalid or inconsistent configuration / arguments (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numeric routine failed to reach its certified tolerance (CLI exit code 3).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// A request exceeds a configured resource budget (CLI exit code 4).
class BudgetError : public std::runtime_error {
public:
    explicit BudgetError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 2;
inline constexpr int exit_numeric_error = 3;
inline constexpr int exit_budget_error = 4;

} // namespace srp
