#include <gtest/gtest.h>

#include <set>

#include "mcar/rng.hpp"

using mcar::Philox;

// Known-answer vectors of the Random123 reference implementation.
TEST(Philox, KnownAnswers) {
  EXPECT_EQ(Philox::rounds({0, 0, 0, 0}, {0, 0}), (Philox::Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox::rounds({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (Philox::Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox::rounds({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (Philox::Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamLayout) {
  Philox g(0, 0);
  auto b = Philox::rounds({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(g(), (static_cast<std::uint64_t>(b[1]) << 32) | b[0]);
  EXPECT_EQ(g(), (static_cast<std::uint64_t>(b[3]) << 32) | b[2]);
  auto b1 = Philox::rounds({1, 0, 0, 0}, {0, 0});
  EXPECT_EQ(g(), (static_cast<std::uint64_t>(b1[1]) << 32) | b1[0]);
}

TEST(Philox, SubstreamsAreReproducibleAndDistinct) {
  auto a = mcar::substream(7, mcar::StreamTag::bootstrap, 3, 4);
  auto b = mcar::substream(7, mcar::StreamTag::bootstrap, 3, 4);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
  std::set<std::uint64_t> firsts;
  for (std::uint64_t s = 0; s < 50; ++s)
    for (std::uint64_t r = 0; r < 50; ++r) firsts.insert(mcar::derive_seed(7, mcar::StreamTag::repetition, s, r));
  EXPECT_EQ(firsts.size(), 2500u);
  EXPECT_NE(mcar::stream_id(mcar::StreamTag::bootstrap, 1), mcar::stream_id(mcar::StreamTag::split, 1));
}

TEST(Philox, RoughlyUniformBits) {
  Philox g(12345, 0);
  int ones = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) ones += __builtin_popcountll(g());
  double mean = static_cast<double>(ones) / n;
  EXPECT_NEAR(mean, 32.0, 0.2);
}
