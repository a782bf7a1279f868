// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "igw/error.hpp"
#include "igw/extended_count.hpp"
#include "igw/gw_engine.hpp"
#include "igw/reproduction_laws.hpp"
#include "igw/rng.hpp"

namespace igw {

/// One transition X_n -> X_{n+1}: total progeny of x generations, then
/// binomial thinning.
inline ExtendedCount step(const ExtendedCount& x, const IGWParams& params, RngStream& rng,
                          const NumberLadder& ladder = {}) {
  if (x.is_zero()) return x;
  const ExtendedCount total = x.is_exact()
                                  ? sample_total_progeny(params.law, x.exact_value(), rng, ladder)
                                  : total_progeny_log_generations(params.law, x.log_value(), rng, ladder);
  return thin(total, params.theta, rng, ladder);
}

enum class Termination { Died, Exploded, HorizonReached };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::Died: return "died";
    case Termination::Exploded: return "exploded";
    case Termination::HorizonReached: return "horizon";
  }
  return "?";
}

struct Trajectory {
  std::uint64_t initial_state = 0;
  std::vector<ExtendedCount> states;  // X_0..X_N
  Termination termination = Termination::HorizonReached;
  std::size_t termination_step = 0;
  // ratios[n] = log(X_{n+1}) / X_n, empty when X_{n+1} = 0.
  std::vector<std::optional<double>> ratios;
};

/// Y_n = log(X_{n+1}) / X_n; nullopt when either state is 0.
inline std::optional<double> ratio(const ExtendedCount& cur, const ExtendedCount& next) {
  if (cur.is_zero() || next.is_zero()) return std::nullopt;
  const double denom = cur.to_double();
  return next.log_value() / denom;
}

/// True when the next step's generation count can still be represented.
inline bool steppable(const ExtendedCount& x, const NumberLadder& ladder) {
  return x.is_exact() || x.log_value() <= ladder.log_float_cap();
}

/// Iterates `step` until the chain dies, reaches `explosion_threshold`, or
/// runs `horizon` steps. A state beyond the ladder's float cap cannot be
/// advanced and also counts as an explosion.
inline Trajectory simulate_trajectory(std::uint64_t x0, const IGWParams& params, std::size_t horizon,
                                      const ExtendedCount& explosion_threshold, RngStream& rng,
                                      const NumberLadder& ladder = {}) {
  require(horizon >= 1, "horizon must be >= 1");
  require(!(explosion_threshold < ExtendedCount::exact(x0)), "explosion threshold must be >= x0");
  Trajectory traj;
  traj.initial_state = x0;
  traj.states.push_back(ExtendedCount::exact(x0));
  if (x0 == 0) {
    traj.termination = Termination::Died;
    return traj;
  }
  for (std::size_t n = 0; n < horizon; ++n) {
    const ExtendedCount& cur = traj.states.back();
    ExtendedCount next = step(cur, params, rng, ladder);
    traj.ratios.push_back(ratio(cur, next));
    traj.states.push_back(next);
    if (next.is_zero()) {
      traj.termination = Termination::Died;
      traj.termination_step = n + 1;
      return traj;
    }
    if (!(next < explosion_threshold) || !steppable(next, ladder)) {
      traj.termination = Termination::Exploded;
      traj.termination_step = n + 1;
      return traj;
    }
  }
  traj.termination = Termination::HorizonReached;
  traj.termination_step = horizon;
  return traj;
}

enum class MeanRegime { MeanExplodes, MeanVanishes, MeanConstant };
enum class AsRegime { AlmostSureDeath, AlmostSureExplosion, MixedDeathOrExplosion, ThinnedIdentity };

inline std::string to_string(MeanRegime r) {
  switch (r) {
    case MeanRegime::MeanExplodes: return "MeanExplodes";
    case MeanRegime::MeanVanishes: return "MeanVanishes";
    case MeanRegime::MeanConstant: return "MeanConstant";
  }
  return "?";
}

inline std::string to_string(AsRegime r) {
  switch (r) {
    case AsRegime::AlmostSureDeath: return "AlmostSureDeath";
    case AsRegime::AlmostSureExplosion: return "AlmostSureExplosion";
    case AsRegime::MixedDeathOrExplosion: return "MixedDeathOrExplosion";
    case AsRegime::ThinnedIdentity: return "ThinnedIdentity";
  }
  return "?";
}

struct RegimeReport {
  MeanRegime mean_regime;
  AsRegime as_regime;

  friend bool operator==(const RegimeReport&, const RegimeReport&) = default;
};

/// Mean-behaviour and almost-sure-behaviour classification of the chain.
///
/// p_1 = 1 gets its own label: then S_x = x and the chain is pure thinning
/// of the current state.
inline RegimeReport classify_regimes(const IGWParams& params) {
  const double m = params.mean();
  const bool no_thinning = params.theta == 1.0;
  RegimeReport r{};
  if (m > 1.0)
    r.mean_regime = MeanRegime::MeanExplodes;
  else if (m < 1.0 || !no_thinning)
    r.mean_regime = MeanRegime::MeanVanishes;
  else
    r.mean_regime = MeanRegime::MeanConstant;

  if (params.law.p0() > 0.0)
    r.as_regime = AsRegime::AlmostSureDeath;
  else if (params.law.p1() == 1.0)
    r.as_regime = AsRegime::ThinnedIdentity;
  else if (no_thinning)
    r.as_regime = AsRegime::AlmostSureExplosion;
  else
    r.as_regime = AsRegime::MixedDeathOrExplosion;
  return r;
}

struct RatioRow {
  std::size_t n;
  ExtendedCount state;
  double y;
  double relative_error;
};

/// Rows (n, X_n, Y_n, Y_n / log m - 1) along a trajectory.
inline std::vector<RatioRow> asymptotic_ratios(const Trajectory& traj, double law_mean) {
  require_regime(law_mean > 1.0, "ratio diagnostic needs m > 1");
  const double log_m = std::log(law_mean);
  std::vector<RatioRow> rows;
  for (std::size_t n = 0; n < traj.ratios.size(); ++n) {
    if (!traj.ratios[n]) continue;
    const double y = *traj.ratios[n];
    rows.push_back({n, traj.states[n], y, y / log_m - 1.0});
  }
  return rows;
}

}  // namespace igw
