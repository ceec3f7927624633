#pragma once

#include <stdexcept>
#include <string>

namespace llbar {

// Caller misuse: wrong representation, bad flag, invalid config value.
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct GridMismatch : std::invalid_argument {
    GridMismatch() : std::invalid_argument("fields live on different grids") {}
    using std::invalid_argument::invalid_argument;
};

// Non-finite values or data that violates a Field invariant.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ratio requested with a zero denominator (e.g. Lipschitz probe with u == v).
struct DegenerateRatio : std::domain_error {
    using std::domain_error::domain_error;
};

// Raised by the time stepper when the state stops being finite or the
// adaptive controller underflows dt_min.
struct BlowUp : std::runtime_error {
    BlowUp(long step_index, double time, const std::string& what)
        : std::runtime_error(what), step(step_index), t(time) {}
    long step;
    double t;
};

}  // namespace llbar
