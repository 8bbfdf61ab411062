#pragma once

#include <stdexcept>
#include <string>

namespace epsvp {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed structured-text input.
class ParseError : public Error
{
  public:
    using Error::Error;
};

/// Well-formed input that breaks a model invariant.
class ValidationError : public Error
{
  public:
    using Error::Error;
};

/// Reference to an id that does not exist.
class LookupError : public Error
{
  public:
    using Error::Error;
};

/// Controller execution failure (nondeterminism, livelock, bad input symbol).
class ExecutionError : public Error
{
  public:
    using Error::Error;
};

/// Continuous-time simulation failure (singular network, non-finite values).
class SimulationError : public Error
{
  public:
    using Error::Error;
};

} // namespace epsvp
