// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "igw/error.hpp"
#include "igw/fixed_point.hpp"
#include "igw/reproduction_laws.hpp"

namespace igw {

/// Truncation limits of the exact engine.
struct Caps {
  std::size_t z_cap = 4096;
  std::size_t s_cap = 4096;
  std::size_t x_cap = 512;
};

enum class DistStatus {
  Complete,     // overflow is zero
  Truncated,    // some mass beyond the cap
  AllOverflow,  // every atom is beyond the cap; the caps cannot hold the support
};

inline const char* to_string(DistStatus s) {
  switch (s) {
    case DistStatus::Complete: return "complete";
    case DistStatus::Truncated: return "truncated";
    case DistStatus::AllOverflow: return "all-overflow";
  }
  return "?";
}

/// Probability vector on {0..cap} plus the mass of values above cap.
struct TruncatedDist {
  std::vector<double> atoms;
  double overflow = 0.0;
  DistStatus status = DistStatus::Complete;

  std::size_t cap() const { return atoms.size() - 1; }
  double at(std::size_t v) const { return v < atoms.size() ? atoms[v] : 0.0; }
  double total() const {
    double t = overflow;
    for (double a : atoms) t += a;
    return t;
  }
};

/// Certified probability interval.
struct IntervalProb {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double p, double slack = 0.0) const { return p >= lo - slack && p <= hi + slack; }
  double width() const { return hi - lo; }
};

namespace detail {

inline DistStatus classify_overflow(const std::vector<double>& atoms, double overflow) {
  if (overflow <= 0.0) return DistStatus::Complete;
  for (double a : atoms)
    if (a > 0.0) return DistStatus::Truncated;
  return DistStatus::AllOverflow;
}

/// Dense power series truncated at degree `cap`; [lo, hi] brackets the nonzero terms.
struct Series {
  std::vector<double> c;
  std::size_t lo = 1;
  std::size_t hi = 0;  // lo > hi means empty

  explicit Series(std::size_t cap) : c(cap + 1, 0.0) {}
  bool empty() const { return lo > hi; }
  std::size_t cap() const { return c.size() - 1; }

  void tighten() {
    while (lo <= hi && c[lo] == 0.0) ++lo;
    if (lo > hi) return;
    while (c[hi] == 0.0) --hi;
  }
};

/// out = a * b truncated at out's cap.
inline void multiply(const Series& a, const Series& b, Series& out) {
  std::fill(out.c.begin(), out.c.end(), 0.0);
  out.lo = 1;
  out.hi = 0;
  const std::size_t cap = out.cap();
  if (a.empty() || b.empty() || a.lo + b.lo > cap) return;
  const std::size_t hi = std::min(cap, a.hi + b.hi);
  double* dst = out.c.data();
  const double* bc = b.c.data();
  for (std::size_t i = a.lo; i <= a.hi && i + b.lo <= cap; ++i) {
    const double ai = a.c[i];
    if (ai == 0.0) continue;
    const std::size_t jmax = std::min(b.hi, cap - i);
    double* d = dst + i;
    for (std::size_t j = b.lo; j <= jmax; ++j) d[j] += ai * bc[j];
  }
  out.lo = a.lo + b.lo;
  out.hi = hi;
  out.tighten();
}

}  // namespace detail

/// Successive laws of S_1, S_2, ... truncated at `s_cap`.
///
/// Uses E(t^{S_x}) = f(t E(t^{S_{x-1}})): the truncated power series of each
/// PGF is exact up to degree s_cap, because coefficients of degree j of the
/// composition only involve coefficients of degree < j of the inner series.
class TotalProgenySequence {
 public:
  TotalProgenySequence(const OffspringLaw& law, std::size_t s_cap)
      : law_(law), current_(s_cap), u_(s_cap), power_(s_cap), scratch_(s_cap) {
    require(s_cap >= 1, "s_cap must be >= 1");
    current_.c[0] = 1.0;
    current_.lo = 0;
    current_.hi = 0;
  }

  std::size_t generations() const { return x_; }

  /// Advances from S_x to S_{x+1}.
  void advance() {
    const std::size_t cap = current_.cap();
    std::fill(u_.c.begin(), u_.c.end(), 0.0);
    u_.lo = 1;
    u_.hi = 0;
    if (!current_.empty() && current_.lo + 1 <= cap) {
      const std::size_t hi = std::min(current_.hi + 1, cap);
      for (std::size_t i = current_.lo + 1; i <= hi; ++i) u_.c[i] = current_.c[i - 1];
      u_.lo = current_.lo + 1;
      u_.hi = hi;
      u_.tighten();
    }
    const auto& p = law_.probs();
    std::vector<double>& next = scratch_.c;
    std::fill(next.begin(), next.end(), 0.0);
    next[0] = p[0];
    if (p.size() > 1 && !u_.empty()) {
      power_ = u_;
      for (std::size_t k = 1; k < p.size(); ++k) {
        if (k > 1) {
          detail::multiply(power_, u_, tmp_for(cap));
          std::swap(power_, tmp_);
        }
        if (power_.empty()) break;
        if (p[k] != 0.0)
          for (std::size_t i = power_.lo; i <= power_.hi; ++i) next[i] += p[k] * power_.c[i];
      }
    }
    std::swap(current_.c, next);
    current_.lo = 0;
    current_.hi = cap;
    current_.tighten();
    ++x_;
  }

  TruncatedDist dist() const {
    TruncatedDist d;
    d.atoms = current_.c;
    double sum = 0.0;
    for (double a : d.atoms) sum += a;
    d.overflow = std::max(0.0, 1.0 - sum);
    d.status = detail::classify_overflow(d.atoms, d.overflow);
    return d;
  }

  const std::vector<double>& atoms() const { return current_.c; }
  std::size_t support_lo() const { return current_.lo; }
  std::size_t support_hi() const { return current_.hi; }

 private:
  detail::Series& tmp_for(std::size_t cap) {
    if (tmp_.c.size() != cap + 1) tmp_ = detail::Series(cap);
    return tmp_;
  }

  OffspringLaw law_;
  std::size_t x_ = 0;
  detail::Series current_;
  detail::Series u_;
  detail::Series power_;
  detail::Series scratch_;
  detail::Series tmp_{0};
};

/// Law of S_x truncated at caps.s_cap.
inline TruncatedDist total_progeny_dist(const OffspringLaw& law, std::uint64_t x, const Caps& caps = {}) {
  TotalProgenySequence seq(law, caps.s_cap);
  for (std::uint64_t i = 0; i < x; ++i) seq.advance();
  return seq.dist();
}

/// Law of S_x by dynamic programming over the joint law of (Z_k, S_k).
///
/// From each atom (z, s) the z-fold convolution power of (p_k) (cached,
/// computed by repeated doubling) gives Z_{k+1}; mass with Z beyond z_cap
/// or S beyond s_cap goes to overflow. Cost grows like z_cap * s_cap^2 per
/// generation, so this route is meant for small caps; it cross-checks
/// total_progeny_dist.
inline TruncatedDist total_progeny_dist_joint(const OffspringLaw& law, std::uint64_t x, const Caps& caps) {
  require(caps.z_cap >= 1 && caps.s_cap >= 1, "caps must be >= 1");
  const std::size_t zc = caps.z_cap, sc = caps.s_cap;
  const std::size_t width = zc + 1;
  std::vector<double> grid(width * (sc + 1), 0.0);
  grid[1 * (sc + 1) + 0] = 1.0;  // Z_0 = 1, S_0 = 0
  double overflow = 0.0;

  std::map<std::size_t, std::vector<double>> powers;
  auto conv = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(std::min(zc, a.size() + b.size() - 2) + 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] == 0.0) continue;
      for (std::size_t j = 0; j < b.size() && i + j < out.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
  };
  std::vector<double> base(law.probs().begin(), law.probs().begin() + std::min(law.probs().size(), zc + 1));
  auto power = [&](std::size_t z) -> const std::vector<double>& {
    auto it = powers.find(z);
    if (it != powers.end()) return it->second;
    std::vector<double> result{1.0}, sq = base;
    for (std::size_t e = z; e > 0; e >>= 1) {
      if (e & 1) result = conv(result, sq);
      if (e > 1) sq = conv(sq, sq);
    }
    return powers.emplace(z, std::move(result)).first->second;
  };

  for (std::uint64_t gen = 0; gen < x; ++gen) {
    std::vector<double> next(grid.size(), 0.0);
    for (std::size_t z = 0; z <= zc; ++z) {
      for (std::size_t s = 0; s <= sc; ++s) {
        const double mass = grid[z * (sc + 1) + s];
        if (mass == 0.0) continue;
        if (z == 0) {
          next[s] += mass;
          continue;
        }
        const std::vector<double>& q = power(z);
        double kept = 0.0;
        for (std::size_t z2 = 0; z2 < q.size() && s + z2 <= sc; ++z2) {
          next[z2 * (sc + 1) + s + z2] += mass * q[z2];
          kept += q[z2];
        }
        overflow += mass * std::max(0.0, 1.0 - kept);
      }
    }
    grid.swap(next);
  }
  TruncatedDist d;
  d.atoms.assign(sc + 1, 0.0);
  for (std::size_t z = 0; z <= zc; ++z)
    for (std::size_t s = 0; s <= sc; ++s) d.atoms[s] += grid[z * (sc + 1) + s];
  d.overflow = overflow;
  d.status = detail::classify_overflow(d.atoms, d.overflow);
  return d;
}

/// Binomial(s, theta) pmf on y = 0..y_max for every s = 0..s_max, built by
/// the recurrence b_{s+1}(y) = (1-theta) b_s(y) + theta b_s(y-1).
class BinomialTable {
 public:
  BinomialTable(double theta, std::size_t s_max, std::size_t y_max)
      : theta_(theta), s_max_(s_max), y_max_(y_max), width_(y_max + 1),
        pmf_((s_max + 1) * (y_max + 1), 0.0), tail_(s_max + 1, 0.0), lo_(s_max + 1, 0), hi_(s_max + 1, 0) {
    pmf_[0] = 1.0;
    for (std::size_t s = 0; s < s_max; ++s) {
      const double* cur = &pmf_[s * width_];
      double* nxt = &pmf_[(s + 1) * width_];
      const std::size_t top = std::min(s + 1, y_max);
      if (theta == 1.0) {
        if (s + 1 <= y_max) nxt[s + 1] = 1.0;
        tail_[s + 1] = s + 1 > y_max ? 1.0 : 0.0;
        continue;
      }
      nxt[0] = (1.0 - theta) * cur[0];
      for (std::size_t y = 1; y <= top; ++y) nxt[y] = (1.0 - theta) * cur[y] + theta * cur[y - 1];
      tail_[s + 1] = tail_[s] + theta * cur[y_max];
    }
    for (std::size_t s = 0; s <= s_max; ++s) {
      const double* row = &pmf_[s * width_];
      std::size_t lo = 0, hi = std::min(s, y_max);
      while (lo <= hi && row[lo] == 0.0) ++lo;
      while (hi > lo && row[hi] == 0.0) --hi;
      lo_[s] = lo;
      hi_[s] = hi;
    }
  }

  double theta() const { return theta_; }
  std::size_t s_max() const { return s_max_; }
  std::size_t y_max() const { return y_max_; }
  const double* row(std::size_t s) const { return &pmf_[s * width_]; }
  /// P(Binomial(s, theta) > y_max).
  double tail(std::size_t s) const { return tail_[s]; }
  std::size_t lo(std::size_t s) const { return lo_[s]; }
  std::size_t hi(std::size_t s) const { return hi_[s]; }
  bool row_empty(std::size_t s) const { return lo_[s] > hi_[s] || (lo_[s] == hi_[s] && row(s)[lo_[s]] == 0.0); }

  /// P(Binomial(s, theta) <= t) for t <= y_max.
  double cdf(std::size_t s, std::size_t t) const {
    const double* r = row(s);
    double acc = 0.0;
    for (std::size_t y = 0; y <= std::min(t, std::min(s, y_max_)); ++y) acc += r[y];
    return std::min(1.0, acc);
  }

 private:
  double theta_;
  std::size_t s_max_, y_max_, width_;
  std::vector<double> pmf_;
  std::vector<double> tail_;
  std::vector<std::size_t> lo_, hi_;
};

/// Thinned law of X_1 from a truncated law of S.
///
/// `atoms[y]` holds the exactly known mass at y <= y_max. `beyond` is the
/// mass known to exceed y_max. `unknown` is the mass whose S exceeded the
/// S cap, so only S >= s_cap + 1 is known about it.
struct ThinnedRow {
  std::vector<double> atoms;
  double beyond = 0.0;
  double unknown = 0.0;
};

inline ThinnedRow thin_distribution(const std::vector<double>& s_atoms, std::size_t s_lo, std::size_t s_hi,
                                    double s_overflow, const BinomialTable& table) {
  ThinnedRow out;
  out.atoms.assign(table.y_max() + 1, 0.0);
  out.unknown = s_overflow;
  if (s_lo > s_hi) return out;
  for (std::size_t s = s_lo; s <= s_hi; ++s) {
    const double w = s_atoms[s];
    if (w == 0.0) continue;
    out.beyond += w * table.tail(s);
    if (table.row_empty(s)) continue;
    const double* r = table.row(s);
    for (std::size_t y = table.lo(s); y <= table.hi(s); ++y) out.atoms[y] += w * r[y];
  }
  return out;
}

/// Law of X_1 under P_x, truncated at caps.x_cap.
///
/// `overflow` carries both the mass of X_1 > x_cap and the mass whose S_x
/// exceeded caps.s_cap (its thinned value is not resolved).
inline TruncatedDist one_step_dist(std::uint64_t x, const IGWParams& params, const Caps& caps = {}) {
  TruncatedDist d;
  d.atoms.assign(caps.x_cap + 1, 0.0);
  if (x == 0) {
    d.atoms[0] = 1.0;
    return d;
  }
  TotalProgenySequence seq(params.law, caps.s_cap);
  for (std::uint64_t i = 0; i < x; ++i) seq.advance();
  const TruncatedDist s = seq.dist();
  const BinomialTable table(params.theta, caps.s_cap, caps.x_cap);
  const ThinnedRow row = thin_distribution(s.atoms, seq.support_lo(), seq.support_hi(), s.overflow, table);
  d.atoms = row.atoms;
  d.overflow = row.beyond + row.unknown;
  d.status = detail::classify_overflow(d.atoms, d.overflow);
  return d;
}

/// P_x(X_1 = 0) = E((1 - theta)^{S_x}) by a_0 = 1, a_{j+1} = f((1 - theta) a_j).
inline double one_step_death_prob(std::uint64_t x, const IGWParams& params) {
  const double t = 1.0 - params.theta;
  double a = 1.0;
  for (std::uint64_t j = 0; j < x; ++j) a = params.law.pgf_unchecked(t * a);
  return a;
}

/// One-step kernel on {0..x_cap} in two monotone envelopes.
///
/// P_y(X_n = 0) is nonincreasing in y, so:
///   lower rows send unresolved mass to a phantom state that dies with
///   probability `phantom_death()` per step, the infimum over all states of
///   the one-step death probability;
///   upper rows send X_1 > x_cap to x_cap, and mass with S_x > s_cap to
///   the law of Binomial(s_cap + 1, theta), which it dominates.
class TransitionKernel {
 public:
  TransitionKernel(const IGWParams& params, const Caps& caps = {})
      : params_(params), caps_(caps), n_(caps.x_cap + 1),
        lower_(n_ * n_, 0.0), lower_phantom_(n_, 0.0), upper_(n_ * n_, 0.0) {
    require(caps.x_cap >= 1 && caps.s_cap >= caps.x_cap, "caps need x_cap >= 1 and s_cap >= x_cap");
    phantom_death_ = absorption_floor(params);
    const BinomialTable table(params.theta, caps.s_cap + 1, caps.x_cap);
    // Law of X_1 for S = s_cap + 1, used for unresolved mass in the upper envelope.
    std::vector<double> floor_row(n_, 0.0);
    {
      const std::size_t s = caps.s_cap + 1;
      const double* r = table.row(s);
      for (std::size_t y = 0; y <= std::min(s, caps.x_cap); ++y) floor_row[y] = r[y];
      floor_row[caps.x_cap] += table.tail(s);
    }
    lower_[0] = 1.0;
    upper_[0] = 1.0;
    TotalProgenySequence seq(params.law, caps.s_cap);
    for (std::size_t x = 1; x <= caps.x_cap; ++x) {
      seq.advance();
      double sum = 0.0;
      for (std::size_t s = seq.support_lo(); s <= seq.support_hi() && s <= caps.s_cap; ++s) sum += seq.atoms()[s];
      const double s_overflow = std::max(0.0, 1.0 - sum);
      const ThinnedRow row = thin_distribution(seq.atoms(), seq.support_lo(), seq.support_hi(), s_overflow, table);
      double* lo = &lower_[x * n_];
      double* up = &upper_[x * n_];
      for (std::size_t y = 0; y < n_; ++y) {
        lo[y] = row.atoms[y];
        up[y] = row.atoms[y] + row.unknown * floor_row[y];
      }
      lower_phantom_[x] = row.beyond + row.unknown;
      up[caps.x_cap] += row.beyond;
    }
  }

  const IGWParams& params() const { return params_; }
  const Caps& caps() const { return caps_; }
  std::size_t size() const { return n_; }
  double phantom_death() const { return phantom_death_; }
  const double* lower_row(std::size_t x) const { return &lower_[x * n_]; }
  double lower_phantom(std::size_t x) const { return lower_phantom_[x]; }
  const double* upper_row(std::size_t x) const { return &upper_[x * n_]; }

 private:
  IGWParams params_;
  Caps caps_;
  std::size_t n_;
  std::vector<double> lower_;
  std::vector<double> lower_phantom_;
  std::vector<double> upper_;
  double phantom_death_ = 0.0;
};

/// Rows of transition_kernel: lower-envelope atoms plus one overflow column.
struct KernelMatrix {
  std::vector<std::vector<double>> rows;  // rows[x] has x_cap + 2 entries; last is overflow
};

inline KernelMatrix transition_kernel(const IGWParams& params, const Caps& caps = {}) {
  const TransitionKernel k(params, caps);
  KernelMatrix m;
  m.rows.resize(k.size());
  for (std::size_t x = 0; x < k.size(); ++x) {
    m.rows[x].assign(k.lower_row(x), k.lower_row(x) + k.size());
    m.rows[x].push_back(k.lower_phantom(x));
  }
  return m;
}

/// State of both envelopes after n steps.
struct HorizonEnvelopes {
  std::vector<double> lower;  // lower-envelope chain on {0..x_cap}
  double lower_phantom = 0.0;
  std::vector<double> upper;  // upper-envelope chain on {0..x_cap}
  IntervalProb death;         // [lower[0], upper[0]]
};

inline HorizonEnvelopes propagate(const TransitionKernel& kernel, std::uint64_t x, std::size_t n) {
  const std::size_t size = kernel.size();
  const std::size_t x_cap = size - 1;
  HorizonEnvelopes env;
  env.lower.assign(size, 0.0);
  env.upper.assign(size, 0.0);
  if (x <= x_cap)
    env.lower[x] = 1.0;
  else
    env.lower_phantom = 1.0;
  env.upper[std::min<std::uint64_t>(x, x_cap)] = 1.0;
  const double d = kernel.phantom_death();
  std::vector<double> lo_next(size), up_next(size);
  for (std::size_t step = 0; step < n; ++step) {
    std::fill(lo_next.begin(), lo_next.end(), 0.0);
    std::fill(up_next.begin(), up_next.end(), 0.0);
    double phantom_next = env.lower_phantom * (1.0 - d);
    lo_next[0] += env.lower_phantom * d;
    for (std::size_t s = 0; s < size; ++s) {
      const double wl = env.lower[s];
      if (wl != 0.0) {
        const double* r = kernel.lower_row(s);
        for (std::size_t y = 0; y < size; ++y) lo_next[y] += wl * r[y];
        phantom_next += wl * kernel.lower_phantom(s);
      }
      const double wu = env.upper[s];
      if (wu != 0.0) {
        const double* r = kernel.upper_row(s);
        for (std::size_t y = 0; y < size; ++y) up_next[y] += wu * r[y];
      }
    }
    env.lower.swap(lo_next);
    env.upper.swap(up_next);
    env.lower_phantom = phantom_next;
  }
  env.death.lo = std::clamp(env.lower[0], 0.0, 1.0);
  env.death.hi = std::clamp(std::max(env.upper[0], env.death.lo), 0.0, 1.0);
  return env;
}

/// Certified interval for P_x(X_n = 0).
inline IntervalProb finite_horizon_death(const TransitionKernel& kernel, std::uint64_t x, std::size_t n) {
  return propagate(kernel, x, n).death;
}

inline IntervalProb finite_horizon_death(std::uint64_t x, const IGWParams& params, std::size_t n,
                                         const Caps& caps = {}) {
  const TransitionKernel kernel(params, caps);
  return finite_horizon_death(kernel, x, n);
}

inline constexpr std::size_t kDefaultDeathHorizon = 200;

/// Certified interval for P_x(D) in the regime p_0 = 0.
///
/// lo is the horizon lower envelope, since P_x(X_n = 0) increases to P_x(D).
/// hi closes the still-alive upper-envelope mass at state y with q*^y when
/// m theta > 1 (P_y(D) <= P_1(D)^y <= q*^y); otherwise hi = 1.
inline IntervalProb death_prob_interval(const TransitionKernel& kernel, std::uint64_t x, std::size_t horizon) {
  const IGWParams& params = kernel.params();
  require_regime(params.law.p0() == 0.0, "death probability interval needs p_0 = 0");
  if (x == 0) return {1.0, 1.0};
  if (params.theta == 1.0) return {0.0, 0.0};
  const HorizonEnvelopes env = propagate(kernel, x, horizon);
  IntervalProb out;
  out.lo = env.death.lo;
  if (params.mean() * params.theta > 1.0) {
    const double q = fixed_point_q(params);
    double hi = env.upper[0];
    double qy = 1.0;
    for (std::size_t y = 1; y < env.upper.size(); ++y) {
      qy *= q;
      hi += env.upper[y] * qy;
    }
    out.hi = std::clamp(std::max(hi, out.lo), 0.0, 1.0);
  } else {
    out.hi = 1.0;
  }
  return out;
}

inline IntervalProb death_prob_interval(std::uint64_t x, const IGWParams& params, const Caps& caps = {},
                                        std::size_t horizon = kDefaultDeathHorizon) {
  require_regime(params.law.p0() == 0.0, "death probability interval needs p_0 = 0");
  if (x == 0) return {1.0, 1.0};
  if (params.theta == 1.0) return {0.0, 0.0};
  const TransitionKernel kernel(params, caps);
  return death_prob_interval(kernel, x, horizon);
}

}  // namespace igw
