// error.hpp: exception types shared by all phonon modules

#pragma once

#include <stdexcept>
#include <string>

namespace phonon {

// Raised when a computation runs but its result cannot be trusted
// (integrator drift, truncation loss, failed fit, empty postselection).
class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace phonon
