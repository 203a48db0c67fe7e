#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gazenet {

// Error taxonomy maps onto CLI exit codes: validation/schema -> 2, numerical -> 3.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class SchemaError : public ValidationError {
public:
    explicit SchemaError(const std::string& msg) : ValidationError(msg) {}
};

class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative solver gave up; carries the last iterate for diagnostics.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& msg, std::vector<double> last)
        : NumericalError(msg), last_iterate(std::move(last)) {}
    std::vector<double> last_iterate;
};

} // namespace gazenet
