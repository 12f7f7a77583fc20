#pragma once

#include <stdexcept>
#include <string>

namespace morphcomp {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IdentificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AllocationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace morphcomp
