#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace picard
{

/// Raised for inputs that violate an operation's preconditions.
class ValidationError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when the Euler integrator produces a non-finite state.
class IntegrationError : public std::runtime_error
{
  public:
    IntegrationError(std::size_t step, const std::string& what)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step)
    {
    }

    std::size_t step() const noexcept { return step_; }

  private:
    std::size_t step_;
};

/// Raised by the slope fit when a ladder point carries no measurable error.
class NoiseFloorError : public ValidationError
{
  public:
    using ValidationError::ValidationError;
};

} // namespace picard
