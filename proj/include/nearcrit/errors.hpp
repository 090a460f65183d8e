#pragma once

#include <stdexcept>
#include <string>

namespace nearcrit {

struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OutOfRange : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct NumericFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Simulated intensity (or limit process) left the sampled theta-range.
// Callers retry the replication with a doubled ceiling.
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DependencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace nearcrit
