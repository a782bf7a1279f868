// Copyright 2026 The IGW Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "igw/rng.hpp"

using igw::PhiloxBlock;
using igw::PhiloxKey;
using igw::RngStream;

// Known-answer vectors for Philox4x32-10 from the Random123 distribution.
TEST(Philox, KnownAnswerZero) {
  const PhiloxBlock out = igw::philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (PhiloxBlock{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const PhiloxBlock out =
      igw::philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (PhiloxBlock{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const PhiloxBlock out =
      igw::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (PhiloxBlock{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RngStream, FirstWordsComeFromBlockZero) {
  RngStream rng(0, 0);
  const PhiloxBlock b = igw::philox4x32_10({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(rng(), (std::uint64_t{b[1]} << 32) | b[0]);
  EXPECT_EQ(rng(), (std::uint64_t{b[3]} << 32) | b[2]);
  EXPECT_EQ(rng.blocks_used(), 1u);
}

TEST(RngStream, ReproducibleFromSeedAndStream) {
  RngStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    EXPECT_EQ(va, b());
    if (i == 0) {
      EXPECT_NE(va, c());
      EXPECT_NE(va, d());
    }
  }
}

TEST(RngStream, DerivedStreamIdsAreDistinct) {
  std::set<std::uint64_t> ids;
  for (std::uint64_t i = 0; i < 10000; ++i) ids.insert(igw::derive_stream_id(i, "death"));
  EXPECT_EQ(ids.size(), 10000u);
  EXPECT_NE(igw::derive_stream_id(0, "death"), igw::derive_stream_id(0, "ratio"));
  static_assert(igw::derive_stream_id(3, "x") == igw::derive_stream_id(3, "x"));
}

TEST(RngStream, UniformRangeAndMoments) {
  RngStream rng(1, 2);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = rng.uniform_open0();
    ASSERT_GT(v, 0.0);
    ASSERT_LE(v, 1.0);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n, var = sum2 / n - mean * mean;
  // 6 standard errors.
  EXPECT_NEAR(mean, 0.5, 6.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(var, 1.0 / 12.0, 0.002);
}

TEST(RngStream, NormalMoments) {
  RngStream rng(3, 4);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 6.0 / std::sqrt(n));
  EXPECT_NEAR(sum2 / n, 1.0, 0.02);
}

TEST(RngStream, BinomialEdgesAndMean) {
  RngStream rng(5, 6);
  EXPECT_EQ(rng.binomial(0, 0.5), 0u);
  EXPECT_EQ(rng.binomial(10, 0.0), 0u);
  EXPECT_EQ(rng.binomial(10, 1.0), 10u);
  const int reps = 20000;
  double sum = 0.0;
  for (int i = 0; i < reps; ++i) {
    const auto k = rng.binomial(1000, 0.3);
    ASSERT_LE(k, 1000u);
    sum += static_cast<double>(k);
  }
  EXPECT_NEAR(sum / reps, 300.0, 6.0 * std::sqrt(1000 * 0.3 * 0.7 / reps));
}
