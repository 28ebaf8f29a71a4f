#pragma once

#include <stdexcept>
#include <string>

namespace spinramp {

// Error taxonomy shared by the library and the CLI. Each type maps to one
// failure class; the CLI turns ValidationError into exit code 2 and
// ConvergenceError into exit code 3.

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A closed-form evaluation was requested for a cycle that has no closed form.
struct UnsupportedCycle : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A scan grid is too coarse to follow a continuous branch.
struct RefinementRequired : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A curve was sampled outside the range it was tabulated on.
struct ExtrapolationError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// A fit window overlaps a non-adiabatic region or holds no samples.
struct InvalidWindow : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Scenario configuration failed to parse or validate.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace spinramp
