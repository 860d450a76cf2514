// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

namespace bht {

/// Shapes or extents that do not fit together.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A configuration or argument outside its documented domain.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown (non-finite values, failed factorization).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A linear system that has no unique solution at working precision.
class SingularSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Malformed input data (files, text formats).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bht
