#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vesta/error.hpp"
#include "vesta/golden.hpp"

using namespace vesta;
using namespace vesta::golden;

TEST(Requantize, FloorsTowardNegativeInfinityAndSaturates) {
  EXPECT_EQ(requantize(7, 2), 1);
  EXPECT_EQ(requantize(-7, 2), -2);
  EXPECT_EQ(requantize(-8, 2), -2);
  EXPECT_EQ(requantize(1 << 20, 4), 127);
  EXPECT_EQ(requantize(-(1 << 20), 4), -128);
  EXPECT_EQ(requantize(-1, 0), -1);
  EXPECT_THROW(requantize(1, 32), ArgumentError);
  EXPECT_THROW(requantize(1, -1), ArgumentError);
}

TEST(Requantize, MatchesFloatingOracle) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::int32_t> v(-(1 << 23), (1 << 23) - 1);
  for (int i = 0; i < 20000; ++i) {
    const std::int32_t a = v(rng);
    const int s = i % 16;
    EXPECT_EQ(requantize(a, s), oracle::requant(a, s));
  }
}

TEST(RefOps, SpikingConvMatchesOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int T = 1 + trial % 4, C = 1 + trial % 5, H = 4 + 2 * (trial % 3), W = 6, Co = 3;
    const int k = trial % 2 ? 2 : 3, s = k == 2 ? 2 : 1;
    const auto x = oracle::random_bits(T * C * H * W, 0.3, rng);
    const auto w = oracle::random_ints(Co * C * k * k, -128, 127, rng);
    const auto got = ref_spiking_conv2d(
        oracle::to_spikes(x, {std::size_t(T), std::size_t(C), std::size_t(H), std::size_t(W)}),
        oracle::to_weights(w, {std::size_t(Co), std::size_t(C), std::size_t(k), std::size_t(k)}),
        s);
    EXPECT_TRUE(oracle::equal(got, oracle::conv(x, w, T, C, H, W, Co, k, s)));
  }
}

TEST(RefOps, ByteConvReplicatesAcrossTimesteps) {
  std::mt19937_64 rng(22);
  const int C = 3, H = 6, W = 6, Co = 4, k = 2, T = 4;
  const auto px = oracle::random_ints(C * H * W, 0, 255, rng);
  const auto w = oracle::random_ints(Co * C * k * k, -128, 127, rng);
  const auto got = ref_conv2d_u8(oracle::to_image(px, {3, 6, 6}),
                                 oracle::to_weights(w, {4, 3, 2, 2}), 2, T);
  auto want = oracle::conv(px, w, 1, C, H, W, Co, k, 2);
  const auto one = want;
  for (int t = 1; t < T; ++t) want.insert(want.end(), one.begin(), one.end());
  EXPECT_TRUE(oracle::equal(got, want));
}

TEST(RefOps, LinearMatchesOracle) {
  std::mt19937_64 rng(23);
  const int T = 4, N = 5, Din = 70, Dout = 9;
  const auto x = oracle::random_bits(T * N * Din, 0.5, rng);
  const auto w = oracle::random_ints(Dout * Din, -128, 127, rng);
  const auto got = ref_spiking_linear(oracle::to_spikes(x, {4, 5, 70}),
                                      oracle::to_weights(w, {9, 70}));
  EXPECT_TRUE(oracle::equal(got, oracle::linear(x, w, T, N, Din, Dout)));
}

TEST(RefOps, AttentionMatchesOracle) {
  std::mt19937_64 rng(24);
  const int T = 2, H = 3, N = 6, dh = 16;
  const auto q = oracle::random_bits(T * H * N * dh, 0.5, rng);
  const auto k = oracle::random_bits(q.size(), 0.5, rng);
  const auto v = oracle::random_bits(q.size(), 0.5, rng);
  const Shape shape{2, 3, 6, 16};
  TFLIFParams lif;
  lif.timesteps = T;
  for (int shift : {0, 1, 3}) {
    const auto got = ref_ssa(oracle::to_spikes(q, shape), oracle::to_spikes(k, shape),
                             oracle::to_spikes(v, shape), {shift, 2}, lif);
    const auto want = oracle::attention(q, k, v, T, H, N, dh, shift);
    EXPECT_TRUE(oracle::equal(got.scores, want.scores));
    EXPECT_TRUE(oracle::equal(got.raw, want.raw));
  }
}

TEST(RefOps, ShapeErrors) {
  const SpikeTensor x({1, 2, 4, 4});
  EXPECT_THROW(ref_spiking_conv2d(x, WeightMatrix({1, 3, 2, 2}), 2), ShapeError);
  EXPECT_THROW(ref_spiking_conv2d(x, WeightMatrix({1, 2, 3, 3}), 2), ShapeError);
  EXPECT_THROW(ref_spiking_conv2d(x, WeightMatrix({1, 2, 2, 2}), 0), ArgumentError);
  EXPECT_THROW(ref_spiking_linear(SpikeTensor({1, 2, 3}), WeightMatrix({4, 5})), ShapeError);
  EXPECT_THROW(ref_ssa(SpikeTensor({1, 1, 2, 2}), SpikeTensor({1, 1, 2, 3}),
                       SpikeTensor({1, 1, 2, 2}), {}, TFLIFParams{}),
               ShapeError);
}

TEST(Residual, TruthTables) {
  const auto a = oracle::to_spikes({0, 0, 1, 1}, {4});
  const auto b = oracle::to_spikes({0, 1, 0, 1}, {4});
  EXPECT_EQ(oracle::bits_of(iand_residual(a, b)), (std::vector<int>{0, 1, 0, 0}));
  EXPECT_EQ(oracle::bits_of(iand_residual(a, b, ResidualOp::kOr)),
            (std::vector<int>{0, 1, 1, 1}));
  EXPECT_THROW(iand_residual(a, SpikeTensor({5})), ShapeError);
}

TEST(Layout, TokensAreRowMajorPixels) {
  // [T=1, C=2, H=2, W=2]; set channel 1 at pixel (1, 0) -> token 2, feature 1.
  SpikeTensor f({1, 2, 2, 2});
  f.set(1 * 4 + 2, true);
  const auto t = tokens_from_feature_map(f);
  ASSERT_EQ(t.shape(), (Shape{1, 4, 2}));
  EXPECT_TRUE(t.get(2 * 2 + 1));
  EXPECT_EQ(t.popcount(), 1u);
}

TEST(Layout, SplitMergeRoundTrip) {
  std::mt19937_64 rng(25);
  const auto bits = oracle::random_bits(2 * 5 * 12, 0.5, rng);
  const auto x = oracle::to_spikes(bits, {2, 5, 12});
  const auto s = split_heads(x, 3);
  ASSERT_EQ(s.shape(), (Shape{2, 3, 5, 4}));
  // feature 6 of token 1 at t=0 lands in head 1, column 2.
  EXPECT_EQ(s.get(((0 * 3 + 1) * 5 + 1) * 4 + 2), x.get((0 * 5 + 1) * 12 + 6));
  EXPECT_EQ(oracle::bits_of(merge_heads(s)), bits);
  EXPECT_THROW(split_heads(x, 5), ShapeError);
}

TEST(Fire, RequantThenLifPerChannel) {
  // Two channels on the last axis, one with a bias that never fires.
  TFLIFParams p;
  p.timesteps = 2;
  p.channels = {LifChannel{1, 0, 0, 0}, LifChannel{1, 0, -1000, 0}};
  const AccumTensor acc({2, 1, 2}, {64, 64, -64, 64});
  const auto s = fire(acc, 4, p, ChannelAxis::kLast);
  // ch0: x = 4, -4 -> u=4 fire, u=-4 no. ch1 never.
  EXPECT_EQ(oracle::bits_of(s), (std::vector<int>{1, 0, 0, 0}));
  p.timesteps = 3;
  EXPECT_THROW(fire(acc, 4, p, ChannelAxis::kLast), ShapeError);
}
