// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace iknet {

/// Base for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input data or configuration violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A required file, date, or year range is not available.
class MissingDataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or a diverging optimizer.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace iknet
