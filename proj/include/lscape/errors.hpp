#pragma once

#include <stdexcept>
#include <string>

namespace lscape {

/// Inconsistent dimensions between parameters, data, or network shape.
struct shape_error : std::runtime_error {
    explicit shape_error(const std::string& what) : std::runtime_error(what) {}
};

/// A point is too degenerate for exact incidence enumeration.
struct too_many_zeros : std::runtime_error {
    int zero_count;
    int limit;
    too_many_zeros(int z, int lim)
        : std::runtime_error("signature has " + std::to_string(z) +
                             " zero entries, limit " + std::to_string(lim)),
          zero_count(z), limit(lim) {}
};

/// Exhaustive enumeration would exceed the configured budget.
struct budget_exceeded : std::runtime_error {
    double required;
    double limit;
    budget_exceeded(double req, double lim)
        : std::runtime_error("enumeration budget exceeded: " + std::to_string(req) +
                             " > " + std::to_string(lim)),
          required(req), limit(lim) {}
};

/// Rejection sampling could not produce enough in-cell points.
struct sampling_failed : std::runtime_error {
    explicit sampling_failed(const std::string& what) : std::runtime_error(what) {}
};

/// Operation invoked on a network/data mode it does not support.
struct unsupported_configuration : std::runtime_error {
    explicit unsupported_configuration(const std::string& what) : std::runtime_error(what) {}
};

/// A checker's stated precondition does not hold.
struct precondition_error : std::runtime_error {
    explicit precondition_error(const std::string& what) : std::runtime_error(what) {}
};

/// File parsing failure with location diagnostics.
struct parse_error : std::runtime_error {
    int line;  // 1-based row, -1 when not applicable
    parse_error(const std::string& what, int row = -1)
        : std::runtime_error(row >= 0 ? what + " (row " + std::to_string(row) + ")" : what),
          line(row) {}
};

}  // namespace lscape
