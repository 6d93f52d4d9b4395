#pragma once

#include <stdexcept>
#include <string>

namespace meanrisk {

// Bad configuration or input data (maps to CLI exit code 2).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure inside a solver (maps to CLI exit code 3).
struct solver_error : std::runtime_error {
    explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace meanrisk
