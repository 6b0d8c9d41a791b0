#pragma once

#include <cstddef>
#include <cstdint>

#include "vesta/tensor.hpp"
#include "vesta/tflif.hpp"

// Dense, schedule-free reference semantics for every layer type. Nothing in
// here knows about the PE array; the dataflow executor is checked against
// these functions bit for bit.
namespace vesta::golden {

// Saturating floor(acc / 2^shift) into [-128, 127].
std::int8_t requantize(std::int32_t acc, int shift);

// Which axis of a [T, ...] accumulator carries the TFLIF channel index.
enum class ChannelAxis {
  kFirst,  // [T, C, ...]          conv feature maps
  kLast,   // [T, N, D]            token features
  kHeads,  // [T, heads, N, d_h]   channel = head * d_h + j
};

// Requantizes every accumulator and runs TFLIF across the leading T axis.
SpikeTensor fire(const AccumTensor& acc, int requant_shift,
                 const TFLIFParams& params, ChannelAxis axis);

// Per-timestep cross-correlation, valid padding, no bias.
// in: [T, C_in, H, W] spikes, w: [C_out, C_in, k, k] -> [T, C_out, H', W'].
AccumTensor ref_spiking_conv2d(const SpikeTensor& in, const WeightMatrix& w,
                               std::size_t stride);

// Dense u8 x i8 convolution of the input image, replicated across T.
// img: [C_in, H, W], w: [C_out, C_in, k, k] -> [T, C_out, H', W'].
AccumTensor ref_conv2d_u8(const ByteImage& img, const WeightMatrix& w,
                          std::size_t stride, std::size_t timesteps);

// in: [T, N, D_in], w: [D_out, D_in] -> [T, N, D_out].
AccumTensor ref_spiking_linear(const SpikeTensor& in, const WeightMatrix& w);

struct AttentionQuant {
  int score_shift = 0;    // scores are requantized to 8 bits by this shift
  int requant_shift = 0;  // S'V accumulators are requantized by this shift
};

struct SsaOutput {
  AccumTensor scores;  // [T, heads, N, N] after score requantization
  AccumTensor raw;     // [T, heads, N, d_h] = scores . v
  SpikeTensor out;     // [T, heads, N, d_h]
};

// Softmax-free spiking self attention on binary q, k, v of shape
// [T, heads, N, d_h]: S = q k^T, S' = requantize(S, score_shift),
// raw = S' v, out = TFLIF(requantize(raw, requant_shift)).
SsaOutput ref_ssa(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
                  const AttentionQuant& quant, const TFLIFParams& tflif);

enum class ResidualOp {
  kIand,  // (NOT a) AND b
  kOr,
};

// a is the block output, b the shortcut input.
SpikeTensor iand_residual(const SpikeTensor& a, const SpikeTensor& b,
                          ResidualOp op = ResidualOp::kIand);

// [T, C, H, W] feature map -> [T, H*W, C] tokens (token n = h * W + w).
SpikeTensor tokens_from_feature_map(const SpikeTensor& fmap);
// [T, N, heads * d_h] -> [T, heads, N, d_h].
SpikeTensor split_heads(const SpikeTensor& x, std::size_t heads);
// Inverse of split_heads.
SpikeTensor merge_heads(const SpikeTensor& x);

}  // namespace vesta::golden
