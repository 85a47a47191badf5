#pragma once

#include <stdexcept>
#include <string>

namespace lsdd {

//! Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Inconsistent point dimensions, empty sets, or malformed arguments.
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument
{
public:
  DimensionMismatch(const std::string& where, long expected, long actual)
    : InvalidArgument(where + ": dimension mismatch (expected " +
                      std::to_string(expected) + ", got " +
                      std::to_string(actual) + ")")
  {}
};

//! A linear system could not be solved (singular without fallback, NaN input).
class NumericalError : public Error
{
public:
  using Error::Error;
};

//! Malformed input data (CSV parsing, ragged rows, ...).
class DataError : public Error
{
public:
  using Error::Error;
};

} // namespace lsdd
