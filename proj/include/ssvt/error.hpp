// Copyright (c) 2026 The ssvt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ssvt {

// Base class for all library errors. The CLI maps categories to exit codes:
// ConfigError -> 1, InputError (and subclasses) -> 2, everything else -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes do not satisfy an operation's contract.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value (bad hyperparameter, malformed config file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Invalid input data (dataset, labels, image contents).
class InputError : public Error {
 public:
  using Error::Error;
};

// File-level failure: unreadable, malformed, truncated.
class IoError : public InputError {
 public:
  using InputError::InputError;
};

// A metric is undefined for the given inputs (e.g. single-class AUC).
class UndefinedMetricError : public InputError {
 public:
  using InputError::InputError;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// API misuse or internal consistency violation.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace ssvt
