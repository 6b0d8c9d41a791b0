#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vesta/error.hpp"
#include "vesta/tflif.hpp"

using namespace vesta;
using namespace vesta::golden;

namespace {

TFLIFParams single(std::int32_t m, std::int32_t bias, std::int32_t th, ResetMode reset,
                   bool carry = true) {
  TFLIFParams p;
  p.channels = {LifChannel{m, 0, bias, th}};
  p.reset = reset;
  p.carry_membrane = carry;
  return p;
}

std::vector<int> fire_seq(const std::vector<std::int8_t>& x, const TFLIFParams& p) {
  const auto out = tflif_forward(x, p);
  return {out.spikes.begin(), out.spikes.end()};
}

}  // namespace

TEST(Tflif, HandWorkedHardReset) {
  // bias -10, mantissa 1, decay 1/2:
  // t0: u = 6 - 10 = -4          -> 0
  // t1: u = -2 + 12 - 10 = 0     -> 1, reset to 0
  // t2: u = 0 + 3 - 10 = -7      -> 0
  // t3: u = floor(-3.5) + 20 - 10 = 6 -> 1
  const auto p = single(1, -10, 10, ResetMode::kHard);
  EXPECT_EQ(fire_seq({6, 12, 3, 20}, p), (std::vector<int>{0, 1, 0, 1}));
}

TEST(Tflif, SubtractResetKeepsResidual) {
  const auto p = single(1, -5, 8, ResetMode::kSubtract);
  const auto out = tflif_forward(std::vector<std::int8_t>{20, 0, 0, 0}, p);
  // t0: u=15 fire, u=7; t1: u=3-5=-2; t2: u=-1-5=-6; t3: u=-3-5=-8
  EXPECT_EQ(std::vector<int>(out.spikes.begin(), out.spikes.end()),
            (std::vector<int>{1, 0, 0, 0}));
  EXPECT_EQ(out.membrane, -8);
}

TEST(Tflif, NoCarryMakesTimestepsIndependent) {
  const auto p = single(1, -5, 5, ResetMode::kHard, false);
  EXPECT_EQ(fire_seq({4, 5, 6, -100}, p), (std::vector<int>{0, 1, 1, 0}));
}

TEST(Tflif, MatchesOracleOnRandomSequences) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> m(-300, 300), b(-2000, 2000), th(0, 3000);
  for (int trial = 0; trial < 2000; ++trial) {
    const bool hard = trial % 2 == 0;
    const bool carry = trial % 3 != 0;
    const auto p = single(m(rng), b(rng), th(rng),
                          hard ? ResetMode::kHard : ResetMode::kSubtract, carry);
    const auto xs = oracle::random_ints(4, -128, 127, rng);
    std::vector<std::int8_t> x(xs.begin(), xs.end());
    const auto& ch = p.channels[0];
    EXPECT_EQ(fire_seq(x, p),
              oracle::lif(xs, ch.mantissa, ch.bias_folded, ch.threshold, 1, 2, hard, carry));
  }
}

TEST(Tflif, WrongLengthThrows) {
  const auto p = single(1, 0, 0, ResetMode::kHard);
  EXPECT_THROW(tflif_forward(std::vector<std::int8_t>{1, 2, 3}, p), ArgumentError);
}

TEST(Tflif, ValidateRejectsBadDecay) {
  TFLIFParams p;
  p.decay_num = 3;
  p.decay_den = 2;
  EXPECT_THROW(p.validate(), ArgumentError);
  p.decay_num = 1;
  p.decay_den = 0;
  EXPECT_THROW(p.validate(), ArgumentError);
}

TEST(Fold, IdentityBatchNormKeepsThresholdDecision) {
  BatchNormStats bn{{1.0}, {0.0}, {0.0}, {1.0}, 0.0};
  const auto p = fold_bn_into_lif(bn, 2.0);
  const auto& ch = p.channels[0];
  // 2^15 would overflow a 16-bit signed mantissa, so the shift stops at 14.
  EXPECT_EQ(ch.shift, 14);
  EXPECT_EQ(ch.mantissa, 16384);
  EXPECT_NEAR(ch.scale(), 1.0, 1e-4);
  // x = 2 sits exactly on the threshold, x = 1 below it.
  TFLIFParams one = p;
  one.carry_membrane = false;
  EXPECT_EQ(tflif_forward(std::vector<std::int8_t>{2, 1, 3, -1}, one).spikes,
            (std::vector<std::uint8_t>{1, 0, 1, 0}));
}

TEST(Fold, FoldedDecisionsAgreeOutsideTolerance) {
  // Property: with no carry, the folded single-step decision equals
  // BN(x) >= threshold whenever the margin exceeds the documented tolerance.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> g(0.2, 3.0), beta(-2, 2), mean(-3, 3), var(0.05, 4);
  for (int trial = 0; trial < 300; ++trial) {
    BatchNormStats bn{{g(rng)}, {beta(rng)}, {mean(rng)}, {var(rng)}, 1e-5};
    const double th = 1.0;
    FoldOptions opt;
    opt.carry_membrane = false;
    const auto p = fold_bn_into_lif(bn, th, opt);
    const auto& ch = p.channels[0];
    for (int x = -128; x <= 127; ++x) {
      const double real =
          bn.gamma[0] * (x - bn.mean[0]) / std::sqrt(bn.var[0] + bn.eps) + bn.beta[0];
      const double margin = real - th;
      if (std::fabs(margin) <= fold_decision_tolerance(ch, x)) continue;
      const std::vector<std::int8_t> seq(4, static_cast<std::int8_t>(x));
      EXPECT_EQ(tflif_forward(seq, p).spikes[0] == 1, margin >= 0)
          << "trial " << trial << " x " << x;
    }
  }
}

TEST(Fold, PicksLargestShiftThatFits) {
  BatchNormStats bn{{0.5}, {0.0}, {0.0}, {1.0}, 0.0};
  FoldOptions opt;
  opt.mantissa_bits = 8;  // |m| <= 127
  const auto p = fold_bn_into_lif(bn, 0.0, opt);
  // 0.5 * 2^s <= 127 -> s = 7 (64); s = 8 would give 128.
  EXPECT_EQ(p.channels[0].shift, 7);
  EXPECT_EQ(p.channels[0].mantissa, 64);
}

TEST(Fold, Errors) {
  BatchNormStats neg{{1.0}, {0.0}, {0.0}, {-1.0}, 1e-5};
  EXPECT_THROW(fold_bn_into_lif(neg, 1.0), FoldError);
  BatchNormStats huge{{1e12}, {0.0}, {0.0}, {1.0}, 0.0};
  EXPECT_THROW(fold_bn_into_lif(huge, 1.0), PrecisionError);
  BatchNormStats ragged{{1.0, 1.0}, {0.0}, {0.0}, {1.0}, 0.0};
  EXPECT_THROW(fold_bn_into_lif(ragged, 1.0), ArgumentError);
}
