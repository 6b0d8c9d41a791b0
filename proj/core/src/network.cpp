#include "vesta/network.hpp"

#include <cmath>
#include <map>
#include <random>

#include "vesta/error.hpp"

namespace vesta::golden {

namespace {

bool is_conv(LayerKind k) {
  return k == LayerKind::kConv8bitInput || k == LayerKind::kSpikeConv;
}

void check_shift(int shift, const std::string& field) {
  if (shift < 0 || shift > 31) {
    throw ArgumentError(field + ": shift " + std::to_string(shift) + " outside [0,31]");
  }
}

std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer_index) {
  // splitmix64 of (seed, index); keeps per-layer streams independent.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (layer_index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double unit_real(std::mt19937_64& rng) {
  return std::ldexp(static_cast<double>(rng() >> 11), -53);
}

WeightMatrix random_weights(Shape shape, std::mt19937_64& rng) {
  WeightMatrix w(std::move(shape));
  for (auto& v : w.values()) {
    v = static_cast<std::int8_t>(static_cast<std::uint8_t>(rng() >> 56));
  }
  return w;
}

TFLIFParams random_tflif(std::size_t channels, const NetworkSpec& spec,
                         std::mt19937_64& rng) {
  BatchNormStats bn;
  bn.eps = 1e-5;
  for (std::size_t c = 0; c < channels; ++c) {
    bn.gamma.push_back(0.75 + 0.5 * unit_real(rng));
    bn.beta.push_back(-0.25 + 0.5 * unit_real(rng));
    bn.mean.push_back(-0.5 + unit_real(rng));
    bn.var.push_back(0.5 + unit_real(rng));
  }
  FoldOptions opt;
  opt.mantissa_bits = spec.lif.mantissa_bits;
  opt.decay_num = spec.lif.decay_num;
  opt.decay_den = spec.lif.decay_den;
  opt.reset = spec.lif.reset;
  opt.carry_membrane = spec.lif.carry_membrane;
  opt.timesteps = spec.timesteps;
  return fold_bn_into_lif(bn, spec.lif.threshold, opt);
}

}  // namespace

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv8bitInput:
      return "Conv8bitInput";
    case LayerKind::kSpikeConv:
      return "SpikeConv";
    case LayerKind::kSpikeLinear:
      return "SpikeLinear";
    case LayerKind::kSpikeAttention:
      return "SpikeAttention";
    case LayerKind::kResidual:
      return "Residual";
    case LayerKind::kHead:
      return "Head";
  }
  return "?";
}

std::size_t NetworkSpec::grid_height() const {
  const std::size_t convs = scs_channels.empty() ? 0 : scs_channels.size() - 1;
  return image_height >> convs;
}

std::size_t NetworkSpec::grid_width() const {
  const std::size_t convs = scs_channels.empty() ? 0 : scs_channels.size() - 1;
  return image_width >> convs;
}

void validate(const NetworkSpec& spec) {
  if (spec.timesteps == 0) throw ArgumentError("timesteps: must be positive");
  if (spec.scs_channels.size() < 2) {
    throw ArgumentError("scs_channels: need at least one stem convolution");
  }
  if (spec.scs_channels.front() != spec.image_channels) {
    throw ArgumentError("scs_channels: first entry must equal image channels");
  }
  if (spec.scs_channels.back() != spec.embed_dim) {
    throw ArgumentError("scs_channels: last entry must equal embed_dim");
  }
  for (std::size_t c : spec.scs_channels) {
    if (c == 0) throw ArgumentError("scs_channels: zero channel count");
  }
  const std::size_t convs = spec.scs_channels.size() - 1;
  if (convs >= 32) throw ArgumentError("scs_channels: too many stem stages");
  const std::size_t down = std::size_t{1} << convs;
  if (spec.image_height == 0 || spec.image_width == 0 ||
      spec.image_height % down != 0 || spec.image_width % down != 0) {
    throw ArgumentError("image: height/width must be positive multiples of " +
                        std::to_string(down));
  }
  if (spec.num_heads == 0 || spec.embed_dim % spec.num_heads != 0) {
    throw ArgumentError("num_heads: must divide embed_dim");
  }
  if (spec.mlp_hidden == 0) throw ArgumentError("mlp_hidden: must be positive");
  if (spec.num_classes == 0) throw ArgumentError("num_classes: must be positive");
  check_shift(spec.attention_score_shift, "attention_score_shift");
  check_shift(spec.requant.input_conv, "requant_shift.input_conv");
  check_shift(spec.requant.spike_conv, "requant_shift.spike_conv");
  check_shift(spec.requant.qkv, "requant_shift.qkv");
  check_shift(spec.requant.attention, "requant_shift.attention");
  check_shift(spec.requant.proj, "requant_shift.proj");
  check_shift(spec.requant.mlp1, "requant_shift.mlp1");
  check_shift(spec.requant.mlp2, "requant_shift.mlp2");
  if (spec.lif.decay_den <= 0 || spec.lif.decay_num < 0 ||
      spec.lif.decay_num > spec.lif.decay_den) {
    throw ArgumentError("lif.decay: must lie in [0,1]");
  }
  if (spec.lif.mantissa_bits < 2 || spec.lif.mantissa_bits > 16) {
    throw ArgumentError("lif.mantissa_bits: must lie in [2,16]");
  }
}

void expand_layers(NetworkSpec& spec) {
  validate(spec);
  std::vector<LayerSpec> layers;

  std::size_t h = spec.image_height;
  std::size_t w = spec.image_width;
  std::string prev = kImageTensor;
  for (std::size_t i = 0; i + 1 < spec.scs_channels.size(); ++i) {
    LayerSpec l;
    l.name = "scs" + std::to_string(i);
    l.kind = i == 0 ? LayerKind::kConv8bitInput : LayerKind::kSpikeConv;
    l.inputs = {prev};
    l.geometry = ConvGeometry{spec.scs_channels[i], spec.scs_channels[i + 1], h, w, 2, 2};
    l.requant_shift = i == 0 ? spec.requant.input_conv : spec.requant.spike_conv;
    layers.push_back(l);
    prev = l.name;
    h /= 2;
    w /= 2;
  }

  const std::size_t N = spec.tokens();
  const std::size_t D = spec.embed_dim;
  std::string x = kTokensTensor;
  auto linear = [&](const std::string& name, const std::string& in, std::size_t d_in,
                    std::size_t d_out, int shift) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::kSpikeLinear;
    l.inputs = {in};
    l.geometry = LinearGeometry{N, d_in, d_out};
    l.requant_shift = shift;
    layers.push_back(l);
  };
  auto residual = [&](const std::string& name, const std::string& a,
                      const std::string& b) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::kResidual;
    l.inputs = {a, b};
    l.has_tflif = false;
    l.residual_op = spec.residual_op;
    layers.push_back(l);
  };

  for (std::size_t b = 0; b < spec.num_blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    linear(p + "q", x, D, D, spec.requant.qkv);
    linear(p + "k", x, D, D, spec.requant.qkv);
    linear(p + "v", x, D, D, spec.requant.qkv);

    LayerSpec attn;
    attn.name = p + "attn";
    attn.kind = LayerKind::kSpikeAttention;
    attn.inputs = {p + "q", p + "k", p + "v"};
    attn.geometry = AttentionGeometry{spec.num_heads, spec.head_dim(), N};
    attn.requant_shift = spec.requant.attention;
    attn.score_shift = spec.attention_score_shift;
    layers.push_back(attn);

    linear(p + "proj", p + "attn", D, D, spec.requant.proj);
    residual(p + "res1", p + "proj", x);
    linear(p + "mlp1", p + "res1", D, spec.mlp_hidden, spec.requant.mlp1);
    linear(p + "mlp2", p + "mlp1", spec.mlp_hidden, D, spec.requant.mlp2);
    residual(p + "res2", p + "mlp2", p + "res1");
    x = p + "res2";
  }

  LayerSpec head;
  head.name = "head";
  head.kind = LayerKind::kHead;
  head.inputs = {x};
  head.geometry = LinearGeometry{N, D, spec.num_classes};
  head.has_tflif = false;
  layers.push_back(head);

  spec.layers = std::move(layers);
}

NetworkParams synthesize_params(const NetworkSpec& spec, std::uint64_t seed) {
  if (spec.layers.empty()) {
    throw ArgumentError("synthesize_params: spec has no expanded layers");
  }
  NetworkParams params;
  params.layers.reserve(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    std::mt19937_64 rng(layer_seed(seed, i));
    LayerParams p;
    switch (l.kind) {
      case LayerKind::kConv8bitInput:
      case LayerKind::kSpikeConv: {
        const auto& g = l.conv();
        p.weights = random_weights({g.c_out, g.c_in, g.kernel, g.kernel}, rng);
        p.tflif = random_tflif(g.c_out, spec, rng);
        break;
      }
      case LayerKind::kSpikeLinear: {
        const auto& g = l.linear();
        p.weights = random_weights({g.d_out, g.d_in}, rng);
        p.tflif = random_tflif(g.d_out, spec, rng);
        break;
      }
      case LayerKind::kSpikeAttention: {
        const auto& g = l.attention();
        p.tflif = random_tflif(g.heads * g.head_dim, spec, rng);
        break;
      }
      case LayerKind::kHead: {
        const auto& g = l.linear();
        p.weights = random_weights({g.d_out, g.d_in}, rng);
        break;
      }
      case LayerKind::kResidual:
        break;
    }
    params.layers.push_back(std::move(p));
  }
  return params;
}

ByteImage synthetic_image(std::size_t channels, std::size_t height, std::size_t width,
                          std::uint64_t seed) {
  std::mt19937_64 rng(layer_seed(seed, 0xFFFFu));
  ByteImage img({channels, height, width});
  for (auto& v : img.values()) {
    v = static_cast<std::uint8_t>(rng() >> 56);
  }
  return img;
}

LayerResult GoldenBackend::input_conv(const LayerSpec& layer, const LayerParams& params,
                                      const ByteImage& image) {
  LayerResult r;
  r.accum = ref_conv2d_u8(image, params.weights, layer.conv().stride, timesteps_);
  r.spikes = fire(*r.accum, layer.requant_shift, *params.tflif, ChannelAxis::kFirst);
  return r;
}

LayerResult GoldenBackend::spike_conv(const LayerSpec& layer, const LayerParams& params,
                                      const SpikeTensor& in) {
  LayerResult r;
  r.accum = ref_spiking_conv2d(in, params.weights, layer.conv().stride);
  r.spikes = fire(*r.accum, layer.requant_shift, *params.tflif, ChannelAxis::kFirst);
  return r;
}

LayerResult GoldenBackend::linear(const LayerSpec& layer, const LayerParams& params,
                                  const SpikeTensor& in) {
  LayerResult r;
  r.accum = ref_spiking_linear(in, params.weights);
  r.spikes = fire(*r.accum, layer.requant_shift, *params.tflif, ChannelAxis::kLast);
  return r;
}

LayerResult GoldenBackend::attention(const LayerSpec& layer, const LayerParams& params,
                                     const SpikeTensor& q, const SpikeTensor& k,
                                     const SpikeTensor& v) {
  auto ssa = ref_ssa(q, k, v, AttentionQuant{layer.score_shift, layer.requant_shift},
                     *params.tflif);
  LayerResult r;
  r.accum = std::move(ssa.raw);
  r.spikes = std::move(ssa.out);
  return r;
}

AccumTensor GoldenBackend::head(const LayerSpec&, const LayerParams& params,
                                const SpikeTensor& in) {
  const AccumTensor per_token = ref_spiking_linear(in, params.weights);
  const std::size_t T = per_token.shape()[0];
  const std::size_t N = per_token.shape()[1];
  const std::size_t C = per_token.shape()[2];
  AccumTensor logits({T, C});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      std::int64_t sum = 0;
      for (std::size_t n = 0; n < N; ++n) sum += per_token[(t * N + n) * C + c];
      if (sum > INT32_MAX || sum < INT32_MIN) {
        throw WidthError("head: logit exceeds 32 bits");
      }
      logits[t * C + c] = static_cast<std::int32_t>(sum);
    }
  }
  return logits;
}

NetworkTrace run_network(const NetworkSpec& spec, const NetworkParams& params,
                         const ByteImage& image, LayerBackend& backend) {
  if (params.layers.size() != spec.layers.size()) {
    throw ArgumentError("run_network: parameter count does not match layers");
  }
  const Shape expected_image{spec.image_channels, spec.image_height, spec.image_width};
  if (image.shape() != expected_image) {
    throw ShapeError("run_network: image " + shape_to_string(image.shape()) +
                     ", spec expects " + shape_to_string(expected_image));
  }

  std::map<std::string, SpikeTensor> named;
  auto lookup = [&](const std::string& name) -> const SpikeTensor& {
    auto it = named.find(name);
    if (it == named.end()) {
      throw ArgumentError("input tensor '" + name + "' not produced yet");
    }
    return it->second;
  };

  NetworkTrace trace;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    const LayerParams& p = params.layers[i];
    try {
      LayerOutput out;
      out.name = l.name;
      out.kind = l.kind;
      switch (l.kind) {
        case LayerKind::kConv8bitInput:
          out.result = backend.input_conv(l, p, image);
          named[l.name] = out.result.spikes;
          break;
        case LayerKind::kSpikeConv:
          out.result = backend.spike_conv(l, p, lookup(l.inputs.at(0)));
          named[l.name] = out.result.spikes;
          break;
        case LayerKind::kSpikeLinear:
          out.result = backend.linear(l, p, lookup(l.inputs.at(0)));
          named[l.name] = out.result.spikes;
          break;
        case LayerKind::kSpikeAttention: {
          const std::size_t heads = l.attention().heads;
          const SpikeTensor q = split_heads(lookup(l.inputs.at(0)), heads);
          const SpikeTensor k = split_heads(lookup(l.inputs.at(1)), heads);
          const SpikeTensor v = split_heads(lookup(l.inputs.at(2)), heads);
          out.result = backend.attention(l, p, q, k, v);
          named[l.name] = merge_heads(out.result.spikes);
          break;
        }
        case LayerKind::kResidual:
          out.result.spikes = iand_residual(lookup(l.inputs.at(0)),
                                            lookup(l.inputs.at(1)), l.residual_op);
          named[l.name] = out.result.spikes;
          break;
        case LayerKind::kHead:
          trace.logits = backend.head(l, p, lookup(l.inputs.at(0)));
          out.result.accum = trace.logits;
          break;
      }
      const bool stem_done = is_conv(l.kind) && (i + 1 == spec.layers.size() ||
                                                 !is_conv(spec.layers[i + 1].kind));
      if (stem_done) {
        named[kTokensTensor] = tokens_from_feature_map(out.result.spikes);
      }
      trace.layers.push_back(std::move(out));
    } catch (const LayerError&) {
      throw;
    } catch (const std::exception& e) {
      throw LayerError(i, l.name, e.what());
    }
  }
  trace.predicted_class = classify(trace.logits);
  return trace;
}

NetworkTrace run_network_reference(const NetworkSpec& spec, const NetworkParams& params,
                                   const ByteImage& image) {
  GoldenBackend backend(spec.timesteps);
  return run_network(spec, params, image, backend);
}

std::vector<std::pair<std::string, Shape>> shape_trace(const NetworkSpec& spec) {
  const std::size_t T = spec.timesteps;
  std::vector<std::pair<std::string, Shape>> out;
  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::kConv8bitInput:
      case LayerKind::kSpikeConv: {
        const auto& g = l.conv();
        out.emplace_back(l.name, Shape{T, g.c_out, g.h_out(), g.w_out()});
        break;
      }
      case LayerKind::kSpikeLinear: {
        const auto& g = l.linear();
        out.emplace_back(l.name, Shape{T, g.tokens, g.d_out});
        break;
      }
      case LayerKind::kSpikeAttention: {
        const auto& g = l.attention();
        out.emplace_back(l.name, Shape{T, g.tokens, g.heads * g.head_dim});
        break;
      }
      case LayerKind::kResidual:
        out.emplace_back(l.name, Shape{T, spec.tokens(), spec.embed_dim});
        break;
      case LayerKind::kHead:
        out.emplace_back(l.name, Shape{T, l.linear().d_out});
        break;
    }
  }
  return out;
}

std::size_t classify(const AccumTensor& logits) {
  if (logits.rank() != 2 || logits.size() == 0) {
    throw ShapeError("classify: logits must be [T, classes]");
  }
  const std::size_t T = logits.shape()[0];
  const std::size_t C = logits.shape()[1];
  std::size_t best = 0;
  std::int64_t best_sum = 0;
  for (std::size_t c = 0; c < C; ++c) {
    std::int64_t sum = 0;
    for (std::size_t t = 0; t < T; ++t) sum += logits[t * C + c];
    if (c == 0 || sum > best_sum) {
      best = c;
      best_sum = sum;
    }
  }
  return best;
}

}  // namespace vesta::golden
