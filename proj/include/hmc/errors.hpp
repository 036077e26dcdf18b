#pragma once

#include <stdexcept>
#include <string>

namespace hmc
{

/// Malformed input: dimension mismatch, invalid parameter ranges.
class InputError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

/// Input that makes the requested quantity undefined (e.g. x == y).
class DegenerateInputError : public InputError
{
  public:
    using InputError::InputError;
};

/// Method not available for this potential kind.
class UnsupportedMethodError : public InputError
{
  public:
    using InputError::InputError;
};

/// Arguments outside the region where a method's guarantee holds.
class OutOfContractError : public InputError
{
  public:
    using InputError::InputError;
};

/// An iterative method hit its iteration ceiling.
class ConvergenceError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace hmc
