// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "igw/error.hpp"
#include "igw/extended_count.hpp"
#include "igw/reproduction_laws.hpp"
#include "igw/rng.hpp"

namespace igw {

/// Generations Z_1..Z_x of one Galton-Watson tree started from Z_0 = 1 and
/// their total S_x = Z_1 + ... + Z_x.
struct ProgenyPath {
  std::vector<ExtendedCount> generations;
  ExtendedCount total;
};

namespace detail {

// Below this many parents the next generation is drawn parent by parent.
inline constexpr std::uint64_t kIndividualDrawLimit = 32;

/// Sum of `parents` i.i.d. offspring counts. Large parent counts go through a
/// multinomial split over the support (sequential conditional binomials),
/// which has the same law as individual draws.
inline std::uint64_t offspring_sum(const OffspringLaw& law, std::uint64_t parents, RngStream& rng) {
  if (parents == 0) return 0;
  std::uint64_t sum = 0;
  if (parents <= kIndividualDrawLimit) {
    for (std::uint64_t i = 0; i < parents; ++i) sum += law.sample(rng);
    return sum;
  }
  const auto& p = law.probs();
  std::size_t last = p.size() - 1;
  while (p[last] == 0.0) --last;
  double tail = 0.0;
  std::vector<double> tails(p.size() + 1, 0.0);
  for (std::size_t k = p.size(); k-- > 0;) {
    tail += p[k];
    tails[k] = tail;
  }
  std::uint64_t remaining = parents;
  for (std::size_t k = 0; k < last && remaining > 0; ++k) {
    if (p[k] == 0.0) continue;
    const double cond = std::min(1.0, p[k] / tails[k]);
    const std::uint64_t c = rng.binomial(remaining, cond);
    sum += static_cast<std::uint64_t>(k) * c;
    remaining -= c;
  }
  sum += static_cast<std::uint64_t>(last) * remaining;
  return sum;
}

/// log(m + m^2 + ... + m^r) for m > 1 and real r >= 1.
inline double log_geometric_sum(double m, double r) {
  const double a = r * std::log(m);
  const double log_expm1 = a > 30.0 ? a + std::log1p(-std::exp(-a)) : std::log(std::expm1(a));
  return std::log(m) + log_expm1 - std::log(m - 1.0);
}

/// Running total in the three-tier ladder.
class LadderSum {
 public:
  explicit LadderSum(const NumberLadder& ladder) : ladder_(ladder) {}

  void add_exact(std::uint64_t v) {
    if (tier_ == 0) {
      exact_ += v;
      if (exact_ > ladder_.exact_cap) promote_to_float();
    } else if (tier_ == 1) {
      add_float(static_cast<double>(v));
    } else {
      add_log(std::log(static_cast<double>(v)));
    }
  }

  void add_float(double v) {
    if (tier_ == 0) promote_to_float();
    if (tier_ == 1) {
      real_ += v;
      if (real_ > ladder_.float_cap) {
        log_ = std::log(real_);
        tier_ = 2;
      }
    } else {
      add_log(std::log(v));
    }
  }

  void add_log(double lv) {
    if (tier_ == 0) promote_to_float();
    if (tier_ == 1) {
      log_ = std::log(real_);
      tier_ = 2;
    }
    log_ = log_add(log_, lv);
  }

  ExtendedCount value() const {
    if (tier_ == 0) return ExtendedCount::exact(exact_);
    if (tier_ == 1) return ExtendedCount::from_real(real_, ladder_.exact_cap);
    return ExtendedCount::from_log(log_, ladder_.exact_cap);
  }

 private:
  void promote_to_float() {
    if (tier_ == 0) {
      real_ = static_cast<double>(exact_);
      tier_ = 1;
    }
  }

  NumberLadder ladder_;
  int tier_ = 0;
  std::uint64_t exact_ = 0;
  double real_ = 0.0;
  double log_ = 0.0;
};

inline ProgenyPath run_progeny(const OffspringLaw& law, std::uint64_t x, RngStream& rng,
                               const NumberLadder& ladder, bool record) {
  ProgenyPath out;
  LadderSum total(ladder);
  if (x == 0) {
    out.total = ExtendedCount::exact(0);
    return out;
  }
  if (law.p1() == 1.0) {
    if (record) out.generations.assign(x, ExtendedCount::exact(1));
    out.total = ExtendedCount::exact(x);
    return out;
  }
  const double m = law.mean();
  const double sd_per_parent = std::sqrt(law.variance());
  int tier = 0;
  std::uint64_t z = 1;
  double zf = 0.0;
  for (std::uint64_t k = 1; k <= x; ++k) {
    if (tier == 0) {
      z = offspring_sum(law, z, rng);
      if (z > ladder.exact_cap) {
        tier = 1;
        zf = static_cast<double>(z);
      }
    } else {
      zf = m * zf + sd_per_parent * std::sqrt(zf) * rng.normal();
      if (zf > ladder.float_cap) {
        // Deterministic log tier from here on.
        const double lz = std::log(zf);
        total.add_float(zf);
        if (record) {
          out.generations.push_back(ExtendedCount::from_log(lz, ladder.exact_cap));
          const double lm = std::log(m);
          for (std::uint64_t j = k + 1; j <= x; ++j) {
            const double lzj = lz + static_cast<double>(j - k) * lm;
            out.generations.push_back(ExtendedCount::from_log(lzj, ladder.exact_cap));
            total.add_log(lzj);
          }
        } else if (k < x) {
          const double r = static_cast<double>(x - k);
          total.add_log(m > 1.0 ? lz + log_geometric_sum(m, r) : lz + std::log(r));
        }
        out.total = total.value();
        return out;
      }
      if (zf <= static_cast<double>(ladder.exact_cap)) {
        tier = 0;
        z = zf > 0.0 ? static_cast<std::uint64_t>(std::llround(zf)) : 0;
      }
    }
    if (tier == 0) {
      total.add_exact(z);
      if (record) out.generations.push_back(ExtendedCount::exact(z));
      if (z == 0) {
        if (record) out.generations.resize(x, ExtendedCount::exact(0));
        break;
      }
    } else {
      total.add_float(zf);
      if (record) out.generations.push_back(ExtendedCount::from_real(zf, ladder.exact_cap));
    }
  }
  out.total = total.value();
  return out;
}

}  // namespace detail

/// Simulates Z_1..Z_x and S_x through the number ladder.
inline ProgenyPath simulate_total_progeny(const OffspringLaw& law, std::uint64_t x, RngStream& rng,
                                          const NumberLadder& ladder = {}) {
  return detail::run_progeny(law, x, rng, ladder, true);
}

/// S_x only; faster than simulate_total_progeny since generations are not kept.
inline ExtendedCount sample_total_progeny(const OffspringLaw& law, std::uint64_t x, RngStream& rng,
                                          const NumberLadder& ladder = {}) {
  return detail::run_progeny(law, x, rng, ladder, false).total;
}

/// S_x for a generation count that is itself in the log tier.
///
/// For m > 1 uses log S = x log m + log(m/(m-1)). Laws that cannot grow are
/// simulated until extinction, which happens almost surely long before the
/// generation count is exhausted.
inline ExtendedCount total_progeny_log_generations(const OffspringLaw& law, double log_x, RngStream& rng,
                                                   const NumberLadder& ladder = {}) {
  if (law.p1() == 1.0) return ExtendedCount::from_log(log_x, ladder.exact_cap);
  const double m = law.mean();
  if (m > 1.0) {
    const double x = std::exp(log_x);
    return ExtendedCount::from_log(x * std::log(m) + std::log(m / (m - 1.0)), ladder.exact_cap);
  }
  return detail::run_progeny(law, std::numeric_limits<std::uint64_t>::max(), rng, ladder, false).total;
}

/// Binomial(count, theta) thinning through the ladder.
inline ExtendedCount thin(const ExtendedCount& count, double theta, RngStream& rng,
                          const NumberLadder& ladder = {}) {
  require(theta > 0.0 && theta <= 1.0, "theta must lie in (0,1]");
  if (theta == 1.0 || count.is_zero()) return count;
  if (!count.is_exact()) return ExtendedCount::from_log(count.log_value() + std::log(theta), ladder.exact_cap);
  const std::uint64_t n = count.exact_value();
  if (n <= ladder.exact_binomial_cap) return ExtendedCount::exact(rng.binomial(n, theta));
  const double nd = static_cast<double>(n);
  const double draw = std::nearbyint(nd * theta + std::sqrt(nd * theta * (1.0 - theta)) * rng.normal());
  const double clamped = std::clamp(draw, 0.0, nd);
  return ExtendedCount::exact(static_cast<std::uint64_t>(clamped));
}

/// 1 - f(1 - u), accurate for small u.
inline double pgf_complement(const OffspringLaw& law, double u) {
  const double l = std::log1p(-u);
  double acc = 0.0;
  for (std::size_t k = 1; k < law.probs().size(); ++k)
    if (law.p(k) != 0.0) acc -= law.p(k) * std::expm1(static_cast<double>(k) * l);
  return acc;
}

/// f^{(x)}(s): the x-fold iterate of the PGF.
///
/// Iterates with u = 1 - s once s >= 1/2; near 1 each step multiplies the
/// absolute error by about f'(1), which ruins the direct form.
inline double pgf_iterate(const OffspringLaw& law, std::uint64_t x, double s) {
  std::uint64_t i = 0;
  for (; i < x && s < 0.5; ++i) s = law.pgf_unchecked(s);
  if (i == x) return s;
  double u = 1.0 - s;
  for (; i < x; ++i) u = pgf_complement(law, u);
  return 1.0 - u;
}

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  // Below rounding level the halved tolerance can never be met.
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(left + right);
  if (depth <= 0 || std::abs(delta) <= 15.0 * std::max(tol, floor)) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature of f on [a, b] to absolute tolerance `tol`.
/// `fa` overrides f(a), for integrands that only have a limit there.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, double fa, int max_depth = 60) {
  const double m = 0.5 * (a + b);
  const double fb = f(b), fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

inline constexpr double kDefaultQuadTol = 1e-10;

/// E(1/Z_x) = integral over [0,1] of f^{(x)}(s)/s ds, valid when p_0 = 0.
/// The integrand tends to p_1^x at s = 0.
inline double harmonic_moment(const OffspringLaw& law, std::uint64_t x, double quad_tol = kDefaultQuadTol) {
  require_regime(law.p0() == 0.0, "harmonic moment needs p_0 = 0 so that Z_x >= 1");
  require(x >= 1, "harmonic moment needs x >= 1");
  require(quad_tol > 0.0, "quadrature tolerance must be positive");
  if (law.p1() == 1.0) return 1.0;
  auto integrand = [&](double s) { return pgf_iterate(law, x, s) / s; };
  const double at_zero = std::pow(law.p1(), static_cast<double>(x));
  return std::clamp(adaptive_simpson(integrand, 0.0, 1.0, quad_tol, at_zero), 0.0, 1.0);
}

}  // namespace igw
