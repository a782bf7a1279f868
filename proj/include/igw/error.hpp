// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace igw {

/// Malformed input: bad law text, parameter out of range, missing flag.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The parameters are valid but fall outside the regime an operation
/// is defined for (e.g. a bound that needs p_0 = 0).
class RegimeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

inline void require_regime(bool ok, const std::string& what) {
  if (!ok) throw RegimeError(what);
}

}  // namespace igw
