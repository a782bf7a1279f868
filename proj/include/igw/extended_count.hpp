// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>

#include "igw/error.hpp"
#include "igw/reproduction_laws.hpp"

namespace igw {

/// Tier thresholds of the number ladder used by the simulators.
///
/// exact integers up to `exact_cap`, then floating point with Gaussian
/// branching noise up to `float_cap`, then deterministic log-domain growth.
struct NumberLadder {
  std::uint64_t exact_cap = std::uint64_t{1} << 48;
  double float_cap = 1e300;
  std::uint64_t exact_binomial_cap = 1'000'000;

  double log_exact_cap() const { return std::log(static_cast<double>(exact_cap)); }
  double log_float_cap() const { return std::log(float_cap); }
};

/// Population count: an exact integer at or below the exact cap, otherwise
/// carried as its natural log.
class ExtendedCount {
 public:
  constexpr ExtendedCount() = default;

  static constexpr ExtendedCount exact(std::uint64_t v) {
    ExtendedCount c;
    c.exact_ = v;
    return c;
  }

  /// Builds from a log value, demoting to exact when exp(log_v) <= cap.
  static ExtendedCount from_log(double log_v, std::uint64_t cap) {
    require(!std::isnan(log_v) && log_v < std::numeric_limits<double>::infinity(),
            "extended count log value must be finite");
    if (log_v <= std::log(static_cast<double>(cap))) {
      const double v = std::exp(log_v);
      const auto r = static_cast<std::uint64_t>(std::llround(v));
      return exact(r > cap ? cap : r);
    }
    ExtendedCount c;
    c.approx_ = true;
    c.log_ = log_v;
    return c;
  }

  /// Builds from a nonnegative real, rounding to the nearest integer in the exact tier.
  static ExtendedCount from_real(double v, std::uint64_t cap) {
    if (!(v > 0.0)) return exact(0);
    if (v <= static_cast<double>(cap)) {
      const auto r = static_cast<std::uint64_t>(std::llround(v));
      return exact(r > cap ? cap : r);
    }
    return from_log(std::log(v), cap);
  }

  bool is_exact() const { return !approx_; }
  bool is_zero() const { return !approx_ && exact_ == 0; }
  std::uint64_t exact_value() const { return exact_; }

  /// Natural log of the count; -inf for zero.
  double log_value() const {
    if (approx_) return log_;
    return exact_ == 0 ? -std::numeric_limits<double>::infinity() : std::log(static_cast<double>(exact_));
  }

  /// Linear value as a double; +inf when it overflows.
  double to_double() const { return approx_ ? std::exp(log_) : static_cast<double>(exact_); }

  std::string mode_name() const { return approx_ ? "approx" : "exact"; }

  friend bool operator==(const ExtendedCount& a, const ExtendedCount& b) {
    if (a.approx_ != b.approx_) return false;
    return a.approx_ ? a.log_ == b.log_ : a.exact_ == b.exact_;
  }

  friend std::partial_ordering operator<=>(const ExtendedCount& a, const ExtendedCount& b) {
    if (!a.approx_ && !b.approx_) return a.exact_ <=> b.exact_;
    return a.log_value() <=> b.log_value();
  }

 private:
  bool approx_ = false;
  std::uint64_t exact_ = 0;
  double log_ = 0.0;
};

inline std::string to_string(const ExtendedCount& c) {
  return c.is_exact() ? std::to_string(c.exact_value()) : "exp(" + format_real(c.log_value()) + ")";
}

/// log(exp(a) + exp(b)).
inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace igw
