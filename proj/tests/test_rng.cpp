#include <gtest/gtest.h>

#include <cstdint>
#include <vector>

#include "schatten_lab/rng.hpp"

// Reference values come from a separate Python implementation of the same
// published algorithms.

TEST(SplitMix64, ReferenceStream) {
  schatten::SplitMix64 sm(0);
  EXPECT_EQ(sm.next(), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(sm.next(), 0x6e789e6aa1b965f4ULL);
  EXPECT_EQ(sm.next(), 0x06c45d188009454fULL);
}

TEST(Xoshiro, ReferenceStreams) {
  schatten::Rng a(0);
  EXPECT_EQ(a.next_u64(), 0x99ec5f36cb75f2b4ULL);
  EXPECT_EQ(a.next_u64(), 0xbf6e1f784956452aULL);
  EXPECT_EQ(a.next_u64(), 0x1a5f849d4933e6e0ULL);
  EXPECT_EQ(a.next_u64(), 0x6aa594f1262d2d2cULL);
  schatten::Rng b(42);
  EXPECT_EQ(b.next_u64(), 0x15780b2e0c2ec716ULL);
  EXPECT_EQ(b.next_u64(), 0x6104d9866d113a7eULL);
  EXPECT_EQ(b.next_u64(), 0xae17533239e499a1ULL);
  EXPECT_EQ(b.next_u64(), 0xecb8ad4703b360a1ULL);
}

TEST(Xoshiro, DerivedDraws) {
  schatten::Rng u(7);
  EXPECT_DOUBLE_EQ(u.uniform(), 0.7005764821796896);
  EXPECT_DOUBLE_EQ(u.uniform(), 0.2787512294737843);
  EXPECT_DOUBLE_EQ(u.uniform(), 0.8396274618764198);

  schatten::Rng k(7);
  std::vector<std::uint64_t> got;
  for (int i = 0; i < 8; ++i) got.push_back(k.below(10));
  EXPECT_EQ(got, (std::vector<std::uint64_t>{7, 2, 8, 9, 9, 8, 0, 1}));

  schatten::Rng g(11);
  EXPECT_NEAR(g.normal(), 0.6067351097783689, 1e-15);
  EXPECT_NEAR(g.normal(), 0.37041641789966706, 1e-15);
  EXPECT_NEAR(g.normal(), -0.703850498343298, 1e-15);
  EXPECT_NEAR(g.normal(), 0.2595386611168741, 1e-15);
}

TEST(Xoshiro, BetweenStaysInRange) {
  schatten::Rng r(3);
  for (int i = 0; i < 1000; ++i) {
    const auto v = r.between(2, 6);
    EXPECT_GE(v, 2u);
    EXPECT_LE(v, 6u);
  }
}

TEST(Xoshiro, GaussianMomentsAreSane) {
  schatten::Rng r(99);
  const std::size_t n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = r.normal();
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}
