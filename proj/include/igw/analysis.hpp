// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "igw/error.hpp"
#include "igw/exact_dist.hpp"
#include "igw/extended_count.hpp"
#include "igw/fixed_point.hpp"
#include "igw/gw_engine.hpp"
#include "igw/igw_process.hpp"
#include "igw/parallel.hpp"
#include "igw/reproduction_laws.hpp"
#include "igw/rng.hpp"

namespace igw {

// ---------------------------------------------------------------------------
// Explosion certificate
// ---------------------------------------------------------------------------

enum class GammaMethod { Exact, TailBound };

inline const char* to_string(GammaMethod m) { return m == GammaMethod::Exact ? "exact" : "tail-bound"; }

struct GammaRecord {
  std::uint64_t state;  // x_k = x + k
  double raw;           // bound on P_{x_k}(X_1 < x_k + 1) at this state alone
  double gamma;         // sup of `raw` over states >= x_k (what enters the product)
  double a_part;        // tail-bound rows: psi * E(1/Z) part
  double b_part;        // tail-bound rows: Chernoff part
  GammaMethod method;
};

struct ExplosionCertificate {
  std::uint64_t start = 0;
  std::vector<GammaRecord> records;
  std::uint64_t tail_from = 0;  // first state covered by the closed-form tail
  double tail_sum = 0.0;        // upper bound on the sum of gamma over the tail
  double tail_sup = 0.0;        // upper bound on gamma over the tail
  double log_bound = -std::numeric_limits<double>::infinity();
  double bound = 0.0;           // lower bound on P_x(C), hence on P_x(F)
  bool valid = false;
};

struct ExplosionOptions {
  std::size_t switch_point = 64;
  double quad_tol = kDefaultQuadTol;
  std::size_t analytic_span = 64;  // tail-bound states evaluated one by one before the closed form
  bool theta_squared_chernoff = false;     // use exp(phi - theta^2 psi) instead of the exact factor
};

namespace detail {

/// Chernoff bound on P(Binomial(y^2, theta) <= y + 1).
inline double chernoff_b(std::uint64_t y, double theta, bool theta_squared) {
  const double yd = static_cast<double>(y);
  if (theta == 1.0) return yd * yd <= yd + 1.0 ? 1.0 : 0.0;
  const double log_c = theta_squared ? -theta * theta : std::log(1.0 - theta + theta * std::exp(-1.0));
  return std::exp((yd + 1.0) + yd * yd * log_c);
}

inline double chernoff_ratio(std::uint64_t y, double theta, bool theta_squared) {
  if (theta == 1.0) return 0.0;
  const double log_c = theta_squared ? -theta * theta : std::log(1.0 - theta + theta * std::exp(-1.0));
  return std::exp(1.0 + (2.0 * static_cast<double>(y) + 1.0) * log_c);
}

}  // namespace detail

/// Lower bound on P_x(C), C = {X_{n+1} >= X_n + 1 for all n}, as a product
/// of (1 - gamma_k) over the states x + k.
///
/// States up to the switch point use the exact one-step law (mass with S
/// beyond s_cap is bounded by the Binomial(s_cap + 1, theta) tail). Later
/// states use psi E(1/Z) + Chernoff with phi(y) = y + 1, psi(y) = y^2, and
/// E(1/Z_{y+1}) <= E(1/Z_y) E(1/Z_1) for the closed-form tail. gamma_k is
/// the running supremum of the per-state bounds so it is nonincreasing.
inline ExplosionCertificate explosion_lower_bound(std::uint64_t x, const IGWParams& params, const Caps& caps = {},
                                                  const ExplosionOptions& opts = {}) {
  const OffspringLaw& law = params.law;
  require_regime(law.p0() == 0.0, "explosion certificate needs p_0 = 0");
  require_regime(law.p1() != 1.0, "explosion certificate needs p_1 != 1");
  require(x >= 1, "explosion certificate needs x >= 1");
  require(opts.analytic_span >= 1, "analytic span must be >= 1");
  const double theta = params.theta;

  ExplosionCertificate cert;
  cert.start = x;
  std::vector<GammaRecord> recs;

  const std::size_t sw = opts.switch_point;
  if (x <= sw) {
    TotalProgenySequence seq(law, caps.s_cap);
    const BinomialTable table(theta, caps.s_cap + 1, sw);
    for (std::size_t y = 1; y <= sw; ++y) {
      seq.advance();
      if (y < x) continue;
      double sum = 0.0, e = 0.0;
      const auto& a = seq.atoms();
      for (std::size_t s = seq.support_lo(); s <= seq.support_hi(); ++s) {
        if (a[s] == 0.0) continue;
        sum += a[s];
        if (s <= y) e += a[s];  // X_1 <= S
        else e += a[s] * table.cdf(s, y);
      }
      const double unresolved = std::max(0.0, 1.0 - sum);
      e += unresolved * table.cdf(caps.s_cap + 1, y);
      recs.push_back({y, std::min(1.0, e), 0.0, 0.0, 0.0, GammaMethod::Exact});
    }
  }

  const std::uint64_t y0 = std::max<std::uint64_t>(sw + 1, x);
  const double h1 = law.harmonic_mean_one();
  std::uint64_t y_end = y0 + opts.analytic_span - 1;
  auto tail_ready = [&](std::uint64_t ye) {
    const double yd = static_cast<double>(ye + 1);
    const double r1 = (yd + 1.0) * (yd + 1.0) / (yd * yd) * h1;
    return r1 < 1.0 && detail::chernoff_ratio(ye + 1, theta, opts.theta_squared_chernoff) < 1.0;
  };
  while (!tail_ready(y_end)) ++y_end;

  double h_end = 1.0;
  for (std::uint64_t y = y0; y <= y_end; ++y) {
    const double h = std::min(1.0, harmonic_moment(law, y, opts.quad_tol) + opts.quad_tol);
    const double yd = static_cast<double>(y);
    const double a_part = std::min(1.0, yd * yd * h);
    const double b_part = detail::chernoff_b(y, theta, opts.theta_squared_chernoff);
    recs.push_back({y, std::min(1.0, a_part + b_part), 0.0, a_part, b_part, GammaMethod::TailBound});
    h_end = h;
  }

  // Closed-form tail over y > y_end.
  const std::uint64_t yt = y_end + 1;
  const double ytd = static_cast<double>(yt);
  const double u1 = ytd * ytd * h_end * h1;
  const double u2 = detail::chernoff_b(yt, theta, opts.theta_squared_chernoff);
  const double r1 = (ytd + 1.0) * (ytd + 1.0) / (ytd * ytd) * h1;
  const double r2 = detail::chernoff_ratio(yt, theta, opts.theta_squared_chernoff);
  cert.tail_from = yt;
  cert.tail_sup = std::min(1.0, u1 + u2);
  cert.tail_sum = u1 / (1.0 - r1) + (u2 > 0.0 ? u2 / (1.0 - r2) : 0.0);

  double running = cert.tail_sup;
  for (std::size_t i = recs.size(); i-- > 0;) {
    running = std::max(running, recs[i].raw);
    recs[i].gamma = running;
  }
  cert.records = std::move(recs);
  cert.valid = cert.tail_sup < 1.0;
  double log_bound = 0.0;
  for (const auto& r : cert.records) {
    if (r.gamma >= 1.0) cert.valid = false;
    log_bound += std::log1p(-std::min(r.gamma, 1.0));
  }
  if (!cert.valid) {
    cert.bound = 0.0;
    return cert;
  }
  log_bound -= cert.tail_sum / (1.0 - cert.tail_sup);
  cert.log_bound = log_bound;
  cert.bound = std::clamp(std::exp(log_bound), 0.0, 1.0);
  return cert;
}

// ---------------------------------------------------------------------------
// Monte Carlo harness
// ---------------------------------------------------------------------------

/// Monte Carlo proportion with a Wilson score interval.
struct McEstimate {
  std::size_t replicas = 0;
  std::size_t successes = 0;
  double point = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 1.0;
  double confidence = 0.99;
  std::uint64_t master_seed = 0;

  double standard_error() const {
    return replicas == 0 ? 0.0 : std::sqrt(point * (1.0 - point) / static_cast<double>(replicas));
  }
  double ci_width() const { return ci_hi - ci_lo; }
};

inline double normal_quantile_two_sided(double confidence) {
  require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0,1)");
  return boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * confidence);
}

inline McEstimate wilson_estimate(std::size_t successes, std::size_t n, double confidence,
                                  std::uint64_t seed = 0) {
  McEstimate e;
  e.replicas = n;
  e.successes = successes;
  e.confidence = confidence;
  e.master_seed = seed;
  if (n == 0) return e;
  const double nd = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nd;
  const double z = normal_quantile_two_sided(confidence);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nd;
  const double center = (p + z2 / (2.0 * nd)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / nd + z2 / (4.0 * nd * nd));
  e.point = p;
  e.ci_lo = std::clamp(std::min(center - half, p), 0.0, 1.0);
  e.ci_hi = std::clamp(std::max(center + half, p), 0.0, 1.0);
  return e;
}

struct McOptions {
  std::size_t replicas = 10000;
  std::size_t horizon = 200;
  ExtendedCount threshold = ExtendedCount::exact(1'000'000'000);
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
  double confidence = 0.99;
  NumberLadder ladder{};
};

struct DeathEstimate {
  McEstimate death;
  McEstimate explosion;
  std::size_t undecided_count = 0;
  double undecided = 0.0;  // fraction still alive and below threshold at the horizon
};

/// Fraction of trajectories from x that die, with explosions and
/// horizon-limited paths counted separately.
inline DeathEstimate mc_death_prob(std::uint64_t x, const IGWParams& params, const McOptions& opts) {
  require(opts.replicas >= 1, "replicas must be >= 1");
  const auto outcomes = parallel_map<Termination>(opts.replicas, opts.workers, [&](std::size_t r) {
    RngStream rng(opts.master_seed, derive_stream_id(r, "death"));
    return simulate_trajectory(x, params, opts.horizon, opts.threshold, rng, opts.ladder).termination;
  });
  std::size_t died = 0, exploded = 0, undecided = 0;
  for (Termination t : outcomes) {
    if (t == Termination::Died) ++died;
    else if (t == Termination::Exploded) ++exploded;
    else ++undecided;
  }
  DeathEstimate out;
  out.death = wilson_estimate(died, opts.replicas, opts.confidence, opts.master_seed);
  out.explosion = wilson_estimate(exploded, opts.replicas, opts.confidence, opts.master_seed);
  out.undecided_count = undecided;
  out.undecided = static_cast<double>(undecided) / static_cast<double>(opts.replicas);
  return out;
}

/// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

struct RatioOptions {
  std::size_t replicas = 1000;
  std::size_t horizon = 200;
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
  // Align rows on the first step with X_n >= align_level; 0 keeps absolute n.
  std::uint64_t align_level = 0;
  double tolerance = 0.1;
  NumberLadder ladder{};
};

struct RatioConvergenceRow {
  std::size_t offset = 0;  // n, or steps after the alignment crossing
  std::size_t count = 0;
  double median_y = 0.0;
  double median_abs_error = 0.0;
  double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;  // of Y_n / log m - 1
  double frac_within = 0.0;  // share of paths with |Y_n / log m - 1| <= tolerance
};

struct RatioConvergence {
  std::vector<RatioConvergenceRow> rows;
  std::size_t exploded = 0;
  std::size_t died = 0;
  std::size_t undecided = 0;
  std::size_t aligned = 0;  // exploded paths that crossed align_level
};

/// Distribution of Y_n / log m - 1 across paths that explode.
///
/// Paths run until their state can no longer be advanced (the ladder's
/// float cap), so each exploding path contributes its whole ratio sequence.
inline RatioConvergence mc_ratio_convergence(const IGWParams& params, std::uint64_t x0, const RatioOptions& opts) {
  require_regime(params.law.p0() == 0.0, "ratio convergence needs p_0 = 0");
  require_regime(params.mean() > 1.0, "ratio convergence needs m > 1");
  require(opts.replicas >= 1, "replicas must be >= 1");
  const ExtendedCount unreachable = ExtendedCount::from_log(std::numeric_limits<double>::max(), opts.ladder.exact_cap);
  struct PathRows {
    Termination termination = Termination::HorizonReached;
    bool aligned = false;
    std::vector<std::pair<std::size_t, double>> errors;  // (offset, Y)
  };
  const double m = params.mean();
  const auto paths = parallel_map<PathRows>(opts.replicas, opts.workers, [&](std::size_t r) {
    RngStream rng(opts.master_seed, derive_stream_id(r, "ratio"));
    const Trajectory traj = simulate_trajectory(x0, params, opts.horizon, unreachable, rng, opts.ladder);
    PathRows out;
    out.termination = traj.termination;
    if (traj.termination != Termination::Exploded) return out;
    std::size_t origin = 0;
    if (opts.align_level > 0) {
      const ExtendedCount level = ExtendedCount::exact(opts.align_level);
      std::size_t n = 0;
      while (n < traj.states.size() && traj.states[n] < level) ++n;
      if (n == traj.states.size()) return out;
      origin = n;
    }
    out.aligned = true;
    for (const RatioRow& row : asymptotic_ratios(traj, m))
      if (row.n >= origin) out.errors.emplace_back(row.n - origin, row.y);
    return out;
  });

  RatioConvergence result;
  std::map<std::size_t, std::vector<double>> ys;
  for (const PathRows& p : paths) {
    if (p.termination == Termination::Died) ++result.died;
    else if (p.termination == Termination::Exploded) ++result.exploded;
    else ++result.undecided;
    if (p.aligned && p.termination == Termination::Exploded) ++result.aligned;
    for (const auto& [offset, y] : p.errors) ys[offset].push_back(y);
  }
  const double log_m = std::log(m);
  for (auto& [offset, values] : ys) {
    RatioConvergenceRow row;
    row.offset = offset;
    row.count = values.size();
    std::vector<double> err, abs_err;
    err.reserve(values.size());
    std::size_t within = 0;
    for (double y : values) {
      const double e = y / log_m - 1.0;
      err.push_back(e);
      abs_err.push_back(std::abs(e));
      if (std::abs(e) <= opts.tolerance) ++within;
    }
    std::sort(values.begin(), values.end());
    std::sort(err.begin(), err.end());
    std::sort(abs_err.begin(), abs_err.end());
    row.median_y = quantile_sorted(values, 0.5);
    row.median_abs_error = quantile_sorted(abs_err, 0.5);
    row.q05 = quantile_sorted(err, 0.05);
    row.q25 = quantile_sorted(err, 0.25);
    row.q50 = quantile_sorted(err, 0.5);
    row.q75 = quantile_sorted(err, 0.75);
    row.q95 = quantile_sorted(err, 0.95);
    row.frac_within = static_cast<double>(within) / static_cast<double>(values.size());
    result.rows.push_back(row);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Inequality checks on certified intervals
// ---------------------------------------------------------------------------

enum class CheckStatus { Pass, Fail, Indeterminate };

inline const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Indeterminate: return "indeterminate";
  }
  return "?";
}

// Relative rounding slack when comparing two certified floating-point bounds.
inline constexpr double kCompareSlack = 1e-12;

struct SubmultiplicativityReport {
  std::uint64_t x = 0, y = 0;
  std::size_t n = 0;
  IntervalProb joint;  // P_{x+y}(X_n = 0)
  IntervalProb left;   // P_x(X_n = 0)
  IntervalProb right;  // P_y(X_n = 0)
  double product_hi = 0.0;
  CheckStatus status = CheckStatus::Indeterminate;
};

/// Checks P_{x+y}(X_n = 0) <= P_x(X_n = 0) P_y(X_n = 0) on certified intervals:
/// pass when hi(x+y) <= hi(x) hi(y), fail when lo(x+y) exceeds it.
inline SubmultiplicativityReport submultiplicativity_check(const TransitionKernel& kernel, std::uint64_t x,
                                                           std::uint64_t y, std::size_t n) {
  require_regime(kernel.params().law.p0() == 0.0, "submultiplicativity check needs p_0 = 0");
  SubmultiplicativityReport r;
  r.x = x;
  r.y = y;
  r.n = n;
  r.joint = finite_horizon_death(kernel, x + y, n);
  r.left = finite_horizon_death(kernel, x, n);
  r.right = finite_horizon_death(kernel, y, n);
  r.product_hi = r.left.hi * r.right.hi;
  if (r.joint.hi <= r.product_hi * (1.0 + kCompareSlack))
    r.status = CheckStatus::Pass;
  else if (r.joint.lo > r.product_hi * (1.0 + kCompareSlack))
    r.status = CheckStatus::Fail;
  else
    r.status = CheckStatus::Indeterminate;
  return r;
}

inline SubmultiplicativityReport submultiplicativity_check(const IGWParams& params, std::uint64_t x, std::uint64_t y,
                                                           std::size_t n, const Caps& caps = {}) {
  require_regime(params.law.p0() == 0.0, "submultiplicativity check needs p_0 = 0");
  const TransitionKernel kernel(params, caps);
  return submultiplicativity_check(kernel, x, y, n);
}

struct AbsorptionRow {
  std::size_t n = 0;
  IntervalProb survival;  // P_x(X_n != 0)
  double bound = 0.0;     // (1 - p_0)^n
  bool strict = false;    // survival.hi < bound
  CheckStatus status = CheckStatus::Indeterminate;
};

/// Checks P_x(X_n != 0) <= (1 - p_0)^n for n = 1..n_max.
inline std::vector<AbsorptionRow> geometric_absorption_check(const IGWParams& params, std::uint64_t x,
                                                             std::size_t n_max, const Caps& caps = {}) {
  const double p0 = params.law.p0();
  require_regime(p0 > 0.0, "geometric absorption check needs p_0 > 0");
  const TransitionKernel kernel(params, caps);
  std::vector<AbsorptionRow> rows;
  for (std::size_t n = 1; n <= n_max; ++n) {
    const IntervalProb death = finite_horizon_death(kernel, x, n);
    AbsorptionRow row;
    row.n = n;
    row.survival = {1.0 - death.hi, 1.0 - death.lo};
    row.bound = std::pow(1.0 - p0, static_cast<double>(n));
    row.strict = row.survival.hi < row.bound;
    const double slack = kCompareSlack * std::max(row.bound, 1e-300);
    if (row.survival.hi <= row.bound + slack)
      row.status = CheckStatus::Pass;
    else if (row.survival.lo > row.bound + slack)
      row.status = CheckStatus::Fail;
    else
      row.status = CheckStatus::Indeterminate;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace igw
