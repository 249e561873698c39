#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace grasp {

// Base for everything thrown by the library. The CLI maps the concrete
// type to a distinct process exit code.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid argument values (ranges, empty sequences, bad enum strings).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Operands whose shapes do not line up.
class DimensionError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

// Inputs too large for an operation that is intentionally small-scale.
class SizeError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

// Input that makes the requested quantity undefined (e.g. zero matrix).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// Iterative method ran out of iterations. Carries the last iterate so a
// caller can inspect how close it got.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, std::vector<double> last_u,
                     std::vector<double> last_v, double last_sigma, double residual)
        : Error(msg),
          last_u(std::move(last_u)),
          last_v(std::move(last_v)),
          last_sigma(last_sigma),
          residual(residual) {}

    std::vector<double> last_u;
    std::vector<double> last_v;
    double last_sigma = 0.0;
    double residual = 0.0;
};

// A constraint system whose Gram matrix is singular. Names the pair of
// constraint rows that collided.
class RankDeficiencyError : public Error {
public:
    RankDeficiencyError(const std::string& msg, int row_a, int row_b)
        : Error(msg), row_a(row_a), row_b(row_b) {}

    int row_a = -1;
    int row_b = -1;
};

// Config file problems: parse failures, unknown keys, invalid values.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Filesystem / serialization problems. byte_offset records where parsing
// stopped when the failure is a malformed file; -1 otherwise.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg, long long byte_offset = -1)
        : Error(msg), byte_offset(byte_offset) {}

    long long byte_offset = -1;
};

// Training diverged. Carries the step index at which loss became non-finite.
class TrainingError : public Error {
public:
    TrainingError(const std::string& msg, long long step)
        : Error(msg), step(step) {}

    long long step = 0;
};

// An assertion-style runtime check failed (CLI self-checks, sweeps asked to
// run on invalid grids).
class CheckError : public Error {
public:
    using Error::Error;
};

}  // namespace grasp
