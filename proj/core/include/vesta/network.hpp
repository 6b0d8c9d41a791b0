#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vesta/golden.hpp"
#include "vesta/tensor.hpp"
#include "vesta/tflif.hpp"

namespace vesta::golden {

enum class LayerKind {
  kConv8bitInput,
  kSpikeConv,
  kSpikeLinear,
  kSpikeAttention,
  kResidual,
  kHead,
};

std::string to_string(LayerKind kind);

struct ConvGeometry {
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t height = 0;  // input
  std::size_t width = 0;
  std::size_t kernel = 2;
  std::size_t stride = 2;

  std::size_t h_out() const { return (height - kernel) / stride + 1; }
  std::size_t w_out() const { return (width - kernel) / stride + 1; }
};

struct LinearGeometry {
  std::size_t tokens = 0;
  std::size_t d_in = 0;
  std::size_t d_out = 0;
};

struct AttentionGeometry {
  std::size_t heads = 0;
  std::size_t head_dim = 0;
  std::size_t tokens = 0;
};

using Geometry =
    std::variant<std::monostate, ConvGeometry, LinearGeometry, AttentionGeometry>;

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::kSpikeLinear;
  std::vector<std::string> inputs;
  Geometry geometry;
  int requant_shift = 0;
  int score_shift = 0;  // attention only
  bool has_tflif = true;
  ResidualOp residual_op = ResidualOp::kIand;

  const ConvGeometry& conv() const { return std::get<ConvGeometry>(geometry); }
  const LinearGeometry& linear() const { return std::get<LinearGeometry>(geometry); }
  const AttentionGeometry& attention() const {
    return std::get<AttentionGeometry>(geometry);
  }
};

struct LifConfig {
  double threshold = 1.0;
  std::int32_t decay_num = 1;
  std::int32_t decay_den = 2;
  ResetMode reset = ResetMode::kHard;
  bool carry_membrane = true;
  int mantissa_bits = 16;
};

// Requantization shift per layer role, applied before TFLIF.
struct RequantShifts {
  int input_conv = 8;
  int spike_conv = 4;
  int qkv = 4;
  int attention = 2;
  int proj = 4;
  int mlp1 = 4;
  int mlp2 = 5;
};

struct NetworkSpec {
  std::string name = "network";
  std::size_t timesteps = kDefaultTimesteps;
  std::size_t image_channels = 3;
  std::size_t image_height = 224;
  std::size_t image_width = 224;
  // Channel widths through the convolutional stem, input channels first and
  // embed_dim last. Every stage is a 2x2 stride-2 convolution.
  std::vector<std::size_t> scs_channels{3, 64, 128, 256, 512};
  std::size_t embed_dim = 512;
  std::size_t num_blocks = 8;
  std::size_t num_heads = 8;
  std::size_t mlp_hidden = 2048;
  std::size_t num_classes = 1000;
  int attention_score_shift = 0;
  ResidualOp residual_op = ResidualOp::kIand;
  RequantShifts requant;
  LifConfig lif;

  // Derived by expand_layers(); ordered, first entry is the input conv.
  std::vector<LayerSpec> layers;

  std::size_t grid_height() const;
  std::size_t grid_width() const;
  std::size_t tokens() const { return grid_height() * grid_width(); }
  std::size_t head_dim() const { return embed_dim / num_heads; }
};

// Checks the hyper-parameters for internal consistency. Throws ArgumentError
// naming the offending field.
void validate(const NetworkSpec& spec);

// Validates and fills spec.layers from the hyper-parameters.
void expand_layers(NetworkSpec& spec);

// Name of the tensor produced by tokenizing the stem output.
inline constexpr const char* kTokensTensor = "tokens";
inline constexpr const char* kImageTensor = "image";

struct LayerParams {
  WeightMatrix weights;               // empty for attention / residual
  std::optional<TFLIFParams> tflif;   // absent for residual / head
};

struct NetworkParams {
  std::vector<LayerParams> layers;  // parallel to NetworkSpec::layers
};

// Seeded synthetic weights (uniform int8) and TFLIF parameters folded from
// seeded batch-norm statistics. Portable: only raw mt19937_64 output is used.
NetworkParams synthesize_params(const NetworkSpec& spec, std::uint64_t seed);

ByteImage synthetic_image(std::size_t channels, std::size_t height, std::size_t width,
                          std::uint64_t seed);

struct LayerResult {
  std::optional<AccumTensor> accum;  // pre-TFLIF accumulators (or logits)
  SpikeTensor spikes;                // empty for the head
};

struct LayerOutput {
  std::string name;
  LayerKind kind = LayerKind::kSpikeLinear;
  LayerResult result;
};

struct NetworkTrace {
  std::vector<LayerOutput> layers;
  AccumTensor logits;  // [T, classes]
  std::size_t predicted_class = 0;
};

// Strategy that evaluates the compute layers of a network. The walker owns
// tensor naming, tokenization, head splitting and residual gates.
class LayerBackend {
 public:
  virtual ~LayerBackend() = default;

  virtual LayerResult input_conv(const LayerSpec& layer, const LayerParams& params,
                                 const ByteImage& image) = 0;
  virtual LayerResult spike_conv(const LayerSpec& layer, const LayerParams& params,
                                 const SpikeTensor& in) = 0;
  virtual LayerResult linear(const LayerSpec& layer, const LayerParams& params,
                             const SpikeTensor& in) = 0;
  // q, k, v: [T, heads, N, d_h]; result spikes in the same layout.
  virtual LayerResult attention(const LayerSpec& layer, const LayerParams& params,
                                const SpikeTensor& q, const SpikeTensor& k,
                                const SpikeTensor& v) = 0;
  // Returns [T, classes] logits summed over tokens.
  virtual AccumTensor head(const LayerSpec& layer, const LayerParams& params,
                           const SpikeTensor& in) = 0;
};

class GoldenBackend final : public LayerBackend {
 public:
  explicit GoldenBackend(std::size_t timesteps) : timesteps_(timesteps) {}

  LayerResult input_conv(const LayerSpec& layer, const LayerParams& params,
                         const ByteImage& image) override;
  LayerResult spike_conv(const LayerSpec& layer, const LayerParams& params,
                         const SpikeTensor& in) override;
  LayerResult linear(const LayerSpec& layer, const LayerParams& params,
                     const SpikeTensor& in) override;
  LayerResult attention(const LayerSpec& layer, const LayerParams& params,
                        const SpikeTensor& q, const SpikeTensor& k,
                        const SpikeTensor& v) override;
  AccumTensor head(const LayerSpec& layer, const LayerParams& params,
                   const SpikeTensor& in) override;

 private:
  std::size_t timesteps_;
};

// Walks spec.layers in order. Errors are rethrown as LayerError carrying the
// failing layer's index.
NetworkTrace run_network(const NetworkSpec& spec, const NetworkParams& params,
                         const ByteImage& image, LayerBackend& backend);

NetworkTrace run_network_reference(const NetworkSpec& spec, const NetworkParams& params,
                                   const ByteImage& image);

// Output shape of every layer without touching data.
std::vector<std::pair<std::string, Shape>> shape_trace(const NetworkSpec& spec);

// Sums logits over T and returns the first index of the maximum.
std::size_t classify(const AccumTensor& logits);

}  // namespace vesta::golden
