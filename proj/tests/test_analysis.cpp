// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "igw/analysis.hpp"

using igw::Caps;
using igw::CheckStatus;
using igw::IGWParams;
using igw::IntervalProb;
using igw::OffspringLaw;

namespace {

// Smaller root of s = g(s) for binary(lambda): with a = 1 - theta,
// lambda theta^2 s^2 + (2 lambda a theta + (1 - lambda) theta - 1) s + lambda a^2 + (1 - lambda) a = 0.
double binary_root(double lambda, double theta) {
  const double a = 1.0 - theta;
  const double A = lambda * theta * theta;
  const double B = 2.0 * lambda * a * theta + (1.0 - lambda) * theta - 1.0;
  const double C = lambda * a * a + (1.0 - lambda) * a;
  return (-B - std::sqrt(B * B - 4.0 * A * C)) / (2.0 * A);
}

igw::McOptions mc(std::size_t replicas, std::uint64_t seed) {
  igw::McOptions o;
  o.replicas = replicas;
  o.master_seed = seed;
  return o;
}

}  // namespace

TEST(FixedPoint, QuadraticRoots) {
  EXPECT_NEAR(igw::fixed_point_q(IGWParams(OffspringLaw::binary(1.0), 0.8)), binary_root(1.0, 0.8), 1e-12);
  EXPECT_NEAR(igw::fixed_point_q(IGWParams(OffspringLaw::binary(1.0), 0.8)), 0.0625, 1e-9);
  EXPECT_NEAR(igw::fixed_point_q(IGWParams(OffspringLaw::binary(0.5), 0.9)), 11.0 / 81.0, 1e-9);
  EXPECT_EQ(igw::fixed_point_q(IGWParams(OffspringLaw::binary(0.5), 1.0)), 0.0);
}

TEST(FixedPoint, SubcriticalReportsOne) {
  EXPECT_EQ(igw::fixed_point_q(IGWParams(OffspringLaw::binary(0.5), 0.6)), 1.0);
  EXPECT_THROW(igw::fixed_point_q(IGWParams(OffspringLaw::explicit_pmf({0.1, 0.0, 0.9}), 0.8)), igw::RegimeError);
}

TEST(FixedPoint, GridProperties) {
  const double tol = 1e-13;
  for (double lambda = 0.1; lambda <= 1.0001; lambda += 0.1)
    for (double theta = 0.05; theta <= 1.0001; theta += 0.05) {
      const IGWParams params(OffspringLaw::binary(std::min(lambda, 1.0)), std::min(theta, 1.0));
      const double q = igw::fixed_point_q(params, tol);
      const double mt = params.mean() * params.theta;
      EXPECT_EQ(q < 1.0, mt > 1.0) << lambda << " " << theta;
      if (q < 1.0) {
        EXPECT_LE(std::abs(igw::thinned_pgf(params, q) - q), 1e-12);
        EXPECT_NEAR(q, igw::binary_death_bound(*params.law.lambda(), params.theta), 1e-9);
      }
    }
  const IGWParams general(OffspringLaw::explicit_pmf({0.0, 0.2, 0.3, 0.5}), 0.6);
  const double q = igw::fixed_point_q(general);
  EXPECT_LT(q, 1.0);
  EXPECT_LE(std::abs(igw::thinned_pgf(general, q) - q), 1e-12);
}

TEST(BinaryDeathBound, Values) {
  EXPECT_NEAR(igw::binary_death_bound(1.0, 0.8), 0.0625, 1e-15);
  EXPECT_EQ(igw::binary_death_bound(0.7, 1.0), 0.0);
  EXPECT_NEAR(igw::binary_death_bound(0.5, 0.9), 11.0 / 81.0, 1e-15);
  EXPECT_THROW(igw::binary_death_bound(0.5, 0.6), igw::RegimeError);
  EXPECT_THROW(igw::binary_death_bound(0.0, 0.9), igw::InvalidInput);
}

TEST(GeometricDeathBound, Values) {
  EXPECT_DOUBLE_EQ(igw::geometric_death_bound(0.0625, 2), 0.00390625);
  EXPECT_EQ(igw::geometric_death_bound(1.0, 7), 1.0);
  EXPECT_EQ(igw::geometric_death_bound(0.3, 0), 1.0);
  EXPECT_GT(igw::geometric_death_bound(0.999, 100000), 0.0);
}

TEST(AbsorptionFloor, BelowEveryOneStepDeath) {
  const IGWParams a(OffspringLaw::explicit_pmf({0.2, 0.0, 0.8}), 1.0);
  EXPECT_EQ(igw::absorption_floor(a), 0.2);
  const IGWParams b(OffspringLaw::explicit_pmf({0.2, 0.3, 0.5}), 0.6);
  const double d = igw::absorption_floor(b);
  EXPECT_NEAR(d, b.law.pgf(0.4 * d), 1e-12);
  for (std::uint64_t x = 1; x <= 200; ++x) EXPECT_LE(d, igw::one_step_death_prob(x, b));
  EXPECT_EQ(igw::absorption_floor(IGWParams(OffspringLaw::binary(0.5), 0.5)), 0.0);
}

TEST(Wilson, ReferenceValues) {
  const auto e = igw::wilson_estimate(50, 100, 0.95);
  EXPECT_NEAR(e.ci_lo, 0.40383, 1e-4);
  EXPECT_NEAR(e.ci_hi, 0.59617, 1e-4);
  const auto z = igw::wilson_estimate(0, 1000, 0.99);
  EXPECT_EQ(z.point, 0.0);
  EXPECT_EQ(z.ci_lo, 0.0);
  EXPECT_GT(z.ci_hi, 0.0);
  const auto one = igw::wilson_estimate(1000, 1000, 0.99);
  EXPECT_EQ(one.ci_hi, 1.0);
  EXPECT_LT(one.ci_lo, 1.0);
  for (std::size_t k = 0; k <= 40; ++k) {
    const auto w = igw::wilson_estimate(k, 40, 0.99);
    EXPECT_LE(w.ci_lo, w.point);
    EXPECT_LE(w.point, w.ci_hi);
  }
}

TEST(ParallelMap, OrderAndErrors) {
  const auto v = igw::parallel_map<int>(1000, 4, [](std::size_t i) { return static_cast<int>(i * i); });
  for (std::size_t i = 0; i < v.size(); ++i) ASSERT_EQ(v[i], static_cast<int>(i * i));
  EXPECT_THROW(igw::parallel_map<int>(100, 3,
                                      [](std::size_t i) -> int {
                                        if (i == 57) throw std::runtime_error("boom");
                                        return 0;
                                      }),
               std::runtime_error);
}

TEST(McDeath, CertainDeath) {
  const auto e = igw::mc_death_prob(1, IGWParams(OffspringLaw::from_pairs({{0, 1.0}}), 0.5), mc(500, 1));
  EXPECT_EQ(e.death.point, 1.0);
  EXPECT_EQ(e.undecided, 0.0);
}

TEST(McDeath, NoThinningNeverDies) {
  const auto e = igw::mc_death_prob(1, IGWParams(OffspringLaw::binary(0.5), 1.0), mc(2000, 2));
  EXPECT_EQ(e.death.point, 0.0);
  EXPECT_EQ(e.explosion.point, 1.0);
}

TEST(McDeath, IndependentOfWorkerCount) {
  const IGWParams params(OffspringLaw::binary(0.7), 0.8);
  auto o = mc(3000, 5);
  const auto a = igw::mc_death_prob(2, params, o);
  o.workers = 4;
  const auto b = igw::mc_death_prob(2, params, o);
  EXPECT_EQ(a.death.successes, b.death.successes);
  EXPECT_EQ(a.explosion.successes, b.explosion.successes);
  EXPECT_EQ(a.death.ci_lo, b.death.ci_lo);
}

TEST(McDeath, IntervalIntersectsCertifiedInterval) {
  const std::vector<IGWParams> grid = {IGWParams(OffspringLaw::binary(1.0), 0.8),
                                       IGWParams(OffspringLaw::binary(0.5), 0.9),
                                       IGWParams(OffspringLaw::explicit_pmf({0.0, 0.3, 0.4, 0.3}), 0.7)};
  for (const auto& params : grid) {
    const IntervalProb certified = igw::death_prob_interval(1, params);
    const auto e = igw::mc_death_prob(1, params, mc(20000, 9));
    EXPECT_LE(e.death.ci_lo, certified.hi) << igw::format_law(params.law);
    EXPECT_GE(e.death.ci_hi, certified.lo) << igw::format_law(params.law);
    EXPECT_LT(e.undecided, 1e-3);
  }
}

TEST(RatioConvergence, DeterministicDoubling) {
  igw::RatioOptions o;
  o.replicas = 4;
  o.align_level = 0;
  const auto rc = igw::mc_ratio_convergence(IGWParams(OffspringLaw::from_pairs({{2, 1.0}}), 1.0), 2, o);
  EXPECT_EQ(rc.exploded, 4u);
  ASSERT_GE(rc.rows.size(), 2u);
  // X = 2, 6, 126, ...: Y_1 = log(126)/6.
  EXPECT_NEAR(rc.rows[1].median_y, std::log(126.0) / 6.0, 1e-12);
  for (std::size_t i = 1; i < rc.rows.size(); ++i)
    EXPECT_LT(rc.rows[i].median_abs_error, rc.rows[i - 1].median_abs_error);
}

TEST(RatioConvergence, MixedRegimeUsesExplodingPathsOnly) {
  igw::RatioOptions o;
  o.replicas = 400;
  o.align_level = 0;
  o.master_seed = 4;
  const auto rc = igw::mc_ratio_convergence(IGWParams(OffspringLaw::binary(1.0), 0.6), 1, o);
  EXPECT_GT(rc.died, 0u);
  EXPECT_GT(rc.exploded, 0u);
  EXPECT_EQ(rc.died + rc.exploded + rc.undecided, 400u);
  for (const auto& row : rc.rows) EXPECT_LE(row.count, rc.exploded);
  EXPECT_THROW(igw::mc_ratio_convergence(IGWParams(OffspringLaw::explicit_pmf({0.1, 0.0, 0.9}), 0.6), 1, {}),
               igw::RegimeError);
}

TEST(ExplosionCertificate, BinaryOneThetaPointNine) {
  const IGWParams params(OffspringLaw::binary(1.0), 0.9);
  const auto cert = igw::explosion_lower_bound(10, params);
  EXPECT_TRUE(cert.valid);
  EXPECT_GT(cert.bound, 0.0);
  EXPECT_LT(cert.bound, 1.0);
  const IntervalProb d = igw::death_prob_interval(10, params);
  EXPECT_LE(cert.bound, 1.0 - d.lo);
  for (std::size_t i = 0; i < cert.records.size(); ++i) {
    const auto& r = cert.records[i];
    EXPECT_GE(r.gamma, r.raw);
    EXPECT_LE(r.gamma, 1.0);
    EXPECT_GE(r.raw, 0.0);
    if (i > 0) {
      EXPECT_LE(r.gamma, cert.records[i - 1].gamma);
    }
  }
  EXPECT_EQ(cert.records.front().state, 10u);
  EXPECT_EQ(cert.records.front().method, igw::GammaMethod::Exact);
  EXPECT_EQ(cert.records.back().method, igw::GammaMethod::TailBound);
}

TEST(ExplosionCertificate, ExactGammaMatchesEnumeration) {
  // binary(0.5), theta = 1: X_1 = S_x, P(S_1 <= 1) = 1/2, P(S_2 <= 2) = 1/4.
  const auto cert = igw::explosion_lower_bound(1, IGWParams(OffspringLaw::binary(0.5), 1.0));
  ASSERT_GE(cert.records.size(), 2u);
  EXPECT_NEAR(cert.records[0].raw, 0.5, 1e-15);
  EXPECT_NEAR(cert.records[1].raw, 0.25, 1e-15);
  // Without thinning the Chernoff term vanishes.
  EXPECT_TRUE(cert.valid);
  for (const auto& r : cert.records) {
    if (r.method == igw::GammaMethod::TailBound) {
      EXPECT_EQ(r.b_part, 0.0);
    }
  }
}

TEST(ExplosionCertificate, Preconditions) {
  EXPECT_THROW(igw::explosion_lower_bound(1, IGWParams(OffspringLaw::from_pairs({{1, 1.0}}), 0.9)), igw::RegimeError);
  EXPECT_THROW(igw::explosion_lower_bound(1, IGWParams(OffspringLaw::explicit_pmf({0.1, 0.0, 0.9}), 0.9)),
               igw::RegimeError);
  EXPECT_THROW(igw::explosion_lower_bound(0, IGWParams(OffspringLaw::binary(1.0), 0.9)), igw::InvalidInput);
}

TEST(ExplosionCertificate, NondecreasingInXAndConsistent) {
  const std::vector<IGWParams> grid = {IGWParams(OffspringLaw::binary(1.0), 0.9),
                                       IGWParams(OffspringLaw::binary(0.5), 0.95),
                                       IGWParams(OffspringLaw::explicit_pmf({0.0, 0.2, 0.5, 0.3}), 0.8)};
  for (const auto& params : grid) {
    const igw::TransitionKernel kernel(params);
    double prev = 0.0;
    for (std::uint64_t x = 1; x <= 12; ++x) {
      const auto cert = igw::explosion_lower_bound(x, params);
      EXPECT_GE(cert.bound, prev - 1e-12) << igw::format_law(params.law) << " x=" << x;
      prev = cert.bound;
      const IntervalProb d = igw::death_prob_interval(kernel, x, igw::kDefaultDeathHorizon);
      EXPECT_LE(cert.bound + d.hi, 1.0 + 1e-9) << igw::format_law(params.law) << " x=" << x;
    }
  }
}

TEST(ExplosionCertificate, LooserChernoffFormIsNoBetter) {
  const IGWParams params(OffspringLaw::binary(1.0), 0.9);
  igw::ExplosionOptions squared;
  squared.theta_squared_chernoff = true;
  const auto a = igw::explosion_lower_bound(10, params);
  const auto b = igw::explosion_lower_bound(10, params, {}, squared);
  EXPECT_LE(b.bound, a.bound + 1e-15);
}

TEST(ExplosionCertificate, BelowMonteCarloExplosion) {
  const IGWParams params(OffspringLaw::binary(0.5), 0.9);
  for (std::uint64_t x : {3u, 6u}) {
    const auto cert = igw::explosion_lower_bound(x, params);
    const auto e = igw::mc_death_prob(x, params, mc(20000, 17));
    EXPECT_GE(e.explosion.point, cert.bound - 4.0 * e.explosion.standard_error() - 1e-12) << x;
  }
}

TEST(Submultiplicativity, SmallCases) {
  const IGWParams params(OffspringLaw::binary(0.5), 0.7);
  const igw::TransitionKernel kernel(params, Caps{1024, 1024, 256});
  const auto r = igw::submultiplicativity_check(kernel, 1, 1, 1);
  EXPECT_EQ(r.status, CheckStatus::Pass);
  EXPECT_NEAR(r.joint.lo, igw::one_step_death_prob(2, params), 1e-14);
  EXPECT_NEAR(r.left.lo, igw::one_step_death_prob(1, params), 1e-14);
  const auto none = igw::submultiplicativity_check(IGWParams(OffspringLaw::binary(0.5), 1.0), 2, 3, 4,
                                                   Caps{256, 256, 64});
  EXPECT_EQ(none.status, CheckStatus::Pass);
  EXPECT_EQ(none.joint.hi, 0.0);
  EXPECT_THROW(igw::submultiplicativity_check(IGWParams(OffspringLaw::explicit_pmf({0.5, 0.5}), 0.5), 1, 1, 1),
               igw::RegimeError);
}

TEST(Submultiplicativity, GridAtDefaultCaps) {
  const IGWParams params(OffspringLaw::binary(0.5), 0.7);
  const igw::TransitionKernel kernel(params);
  for (std::uint64_t x = 1; x <= 4; ++x)
    for (std::uint64_t y = 1; y <= 4; ++y)
      for (std::size_t n = 1; n <= 8; ++n)
        EXPECT_EQ(igw::submultiplicativity_check(kernel, x, y, n).status, CheckStatus::Pass) << x << y << n;
}

TEST(Submultiplicativity, MonteCarloWithinFourStandardErrors) {
  const IGWParams params(OffspringLaw::binary(0.5), 0.7);
  const std::size_t n = 3;
  auto death_by_n = [&](std::uint64_t x) {
    auto o = mc(20000, 100 + x);
    o.horizon = n;
    return igw::mc_death_prob(x, params, o).death;
  };
  const auto a = death_by_n(1), b = death_by_n(2), ab = death_by_n(3);
  const double product = a.point * b.point;
  const double se = std::sqrt(ab.standard_error() * ab.standard_error() +
                              std::pow(a.point * b.standard_error(), 2) + std::pow(b.point * a.standard_error(), 2));
  EXPECT_LE(ab.point, product + 4.0 * se);
}

TEST(GeometricAbsorption, ExactChainWithoutThinning) {
  const IGWParams params(OffspringLaw::explicit_pmf({0.2, 0.0, 0.8}), 1.0);
  for (const auto& row : igw::geometric_absorption_check(params, 1, 12)) {
    EXPECT_EQ(row.status, CheckStatus::Pass) << row.n;
    EXPECT_NEAR(row.survival.hi, row.bound, 1e-12 * row.bound);
  }
}

TEST(GeometricAbsorption, StrictWithThinning) {
  const IGWParams params(OffspringLaw::explicit_pmf({0.2, 0.0, 0.8}), 0.9);
  for (const auto& row : igw::geometric_absorption_check(params, 1, 12)) {
    EXPECT_EQ(row.status, CheckStatus::Pass);
    EXPECT_TRUE(row.strict) << row.n;
  }
}

TEST(GeometricAbsorption, Edges) {
  const auto dead = igw::geometric_absorption_check(IGWParams(OffspringLaw::from_pairs({{0, 1.0}}), 0.5), 3, 2,
                                                    Caps{64, 64, 32});
  EXPECT_EQ(dead[0].survival.hi, 0.0);
  EXPECT_EQ(dead[0].status, CheckStatus::Pass);
  EXPECT_THROW(igw::geometric_absorption_check(IGWParams(OffspringLaw::binary(0.5), 0.5), 1, 3), igw::RegimeError);
  // Starting far above x_cap only the envelopes are available: never a spurious failure.
  const auto far = igw::geometric_absorption_check(IGWParams(OffspringLaw::explicit_pmf({0.05, 0.0, 0.95}), 0.3),
                                                   200, 6, Caps{16, 16, 8});
  for (const auto& row : far) EXPECT_NE(row.status, CheckStatus::Fail);
}
