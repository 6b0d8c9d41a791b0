#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vesta::golden {

enum class ResetMode {
  kHard,      // membrane returns to 0 after a spike
  kSubtract,  // membrane drops by the fixed-point threshold after a spike
};

// Folded batch-norm + LIF parameters for one output channel.
//
// The membrane lives in the threshold-shifted domain at a fixed-point scale
// of 2^-shift: the input current for an 8-bit accumulator x is
// mantissa * x + bias_folded, and the neuron fires when the membrane is >= 0.
struct LifChannel {
  std::int32_t mantissa = 1;
  std::uint8_t shift = 0;
  std::int32_t bias_folded = 0;
  // Pre-fold LIF threshold at the same scale; only used by kSubtract.
  std::int32_t threshold = 0;

  double scale() const;
};

struct TFLIFParams {
  // One entry per output channel; a single entry broadcasts to all channels.
  std::vector<LifChannel> channels{LifChannel{}};
  std::int32_t decay_num = 1;
  std::int32_t decay_den = 2;
  ResetMode reset = ResetMode::kHard;
  // When false every timestep starts from a zero membrane.
  bool carry_membrane = true;
  std::size_t timesteps = 4;

  const LifChannel& channel(std::size_t c) const {
    return channels.size() == 1 ? channels.front() : channels[c];
  }
  // Throws ArgumentError when decay, shifts or channel list are malformed.
  void validate() const;
};

struct BatchNormStats {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> mean;
  std::vector<double> var;
  double eps = 1e-5;
};

struct FoldOptions {
  int mantissa_bits = 16;  // signed, includes the sign bit
  std::int32_t decay_num = 1;
  std::int32_t decay_den = 2;
  ResetMode reset = ResetMode::kHard;
  bool carry_membrane = true;
  std::size_t timesteps = 4;
};

// Folds BN(x) = gamma * (x - mean) / sqrt(var + eps) + beta and the LIF
// threshold into one affine map with a zero firing threshold. The shift per
// channel is the largest in [0, 31] that keeps mantissa, bias and threshold
// inside their widths.
//
// Throws FoldError when var + eps <= 0 and PrecisionError when no shift fits.
TFLIFParams fold_bn_into_lif(const BatchNormStats& bn, double threshold,
                             const FoldOptions& options = {});

// Largest |error| of the folded pre-activation relative to the exact real
// one, for accumulator value x, in real units. Folded and unfolded spike
// decisions can only disagree when |BN(x) - threshold| is below this.
double fold_decision_tolerance(const LifChannel& ch, int x);

struct TflifOutput {
  std::vector<std::uint8_t> spikes;
  std::int64_t membrane = 0;  // after the last timestep
};

// Runs the fused LIF over T requantized 8-bit accumulator values:
//
//   u_t = floor(u_{t-1} * decay_num / decay_den) + mantissa * acc_t + bias
//   spike_t = u_t >= 0
//
// followed by the configured reset when spike_t fires.
TflifOutput tflif_forward(std::span<const std::int8_t> acc,
                          const TFLIFParams& params, std::size_t channel = 0);

}  // namespace vesta::golden
