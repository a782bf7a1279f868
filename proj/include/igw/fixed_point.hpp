// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "igw/error.hpp"
#include "igw/reproduction_laws.hpp"

namespace igw {

inline constexpr double kDefaultRootTol = 1e-13;

/// Bracket [lo, hi] of the unique root of a continuous h with h(lo) >= 0 > h(hi).
struct RootBracket {
  double lo;
  double hi;
};

template <class H>
RootBracket bisect(const H& h, double lo, double hi, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (h(mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return {lo, hi};
}

/// q*: the smallest root of s = g(s) on [0,1), an upper bound on P_1(D).
///
/// Returns the upper end of the bisection bracket so the value never
/// undercuts the true root. Reports 1 when m theta <= 1, where no root
/// below 1 exists.
inline double fixed_point_q(const IGWParams& params, double tol = kDefaultRootTol) {
  require_regime(params.law.p0() == 0.0, "fixed point q* needs p_0 = 0");
  require(tol > 0.0, "root tolerance must be positive");
  if (params.mean() * params.theta <= 1.0) return 1.0;
  auto h = [&](double s) { return params.law.pgf_unchecked(1.0 - params.theta + params.theta * s) - s; };
  if (h(0.0) <= 0.0) return 0.0;
  // h < 0 just below 1 since g'(1) = m theta > 1.
  double hi = 0.5;
  while (h(hi) >= 0.0) {
    hi = 1.0 - 0.5 * (1.0 - hi);
    if (hi >= 1.0 - 1e-15) return 1.0;
  }
  return bisect(h, 0.0, hi, tol).hi;
}

/// Closed form q(lambda, theta) = (1 - theta)(1 - lambda theta) / (lambda theta^2)
/// for binary replication, valid when theta > 1/(1 + lambda).
inline double binary_death_bound(double lambda, double theta) {
  require(lambda > 0.0 && lambda <= 1.0, "lambda must lie in (0,1]");
  require(theta > 0.0 && theta <= 1.0, "theta must lie in (0,1]");
  require_regime(theta > 1.0 / (1.0 + lambda), "binary death bound needs theta > 1/(1+lambda)");
  const double q = (1.0 - theta) * (1.0 - lambda * theta) / (lambda * theta * theta);
  return std::clamp(q, 0.0, 1.0);
}

/// q1_hi^x, the geometric bound on P_x(D).
inline double geometric_death_bound(double q1_hi, std::uint64_t x) {
  require(q1_hi >= 0.0 && q1_hi <= 1.0, "death probability bound must lie in [0,1]");
  if (x == 0 || q1_hi == 1.0) return 1.0;
  if (q1_hi == 0.0) return 0.0;
  return std::exp(static_cast<double>(x) * std::log(q1_hi));
}

/// Lower bound on inf over z >= 1 of P_z(X_1 = 0).
///
/// P_z(X_1 = 0) = a_z with a_0 = 1, a_{j+1} = f((1 - theta) a_j); the sequence
/// decreases to the unique root of a = f((1 - theta) a) in [0,1). Returns
/// the lower end of its bisection bracket (p_0 exactly when theta = 1).
inline double absorption_floor(const IGWParams& params, double tol = kDefaultRootTol) {
  const double p0 = params.law.p0();
  if (p0 == 0.0) return 0.0;
  if (p0 == 1.0) return 1.0;
  const double t = 1.0 - params.theta;
  if (t == 0.0) return p0;
  auto h = [&](double a) { return params.law.pgf_unchecked(t * a) - a; };
  return std::max(p0, bisect(h, 0.0, 1.0, tol).lo);
}

}  // namespace igw
