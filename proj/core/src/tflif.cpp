#include "vesta/tflif.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "vesta/error.hpp"

namespace vesta::golden {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

constexpr double kInt32Max = static_cast<double>(std::numeric_limits<std::int32_t>::max());

}  // namespace

double LifChannel::scale() const {
  return std::ldexp(static_cast<double>(mantissa), -static_cast<int>(shift));
}

void TFLIFParams::validate() const {
  if (channels.empty()) {
    throw ArgumentError("TFLIF: no channel parameters");
  }
  if (decay_den <= 0 || decay_num < 0 || decay_num > decay_den) {
    throw ArgumentError("TFLIF: decay " + std::to_string(decay_num) + "/" +
                        std::to_string(decay_den) + " outside [0,1]");
  }
  if (timesteps == 0) {
    throw ArgumentError("TFLIF: zero timesteps");
  }
  for (const auto& ch : channels) {
    if (ch.shift > 31) {
      throw ArgumentError("TFLIF: shift " + std::to_string(ch.shift) + " > 31");
    }
  }
}

TFLIFParams fold_bn_into_lif(const BatchNormStats& bn, double threshold,
                             const FoldOptions& options) {
  const std::size_t n = bn.gamma.size();
  if (bn.beta.size() != n || bn.mean.size() != n || bn.var.size() != n || n == 0) {
    throw ArgumentError("fold_bn_into_lif: per-channel vectors differ in length");
  }
  if (options.mantissa_bits < 2 || options.mantissa_bits > 16) {
    throw ArgumentError("fold_bn_into_lif: mantissa bits must be in [2,16]");
  }
  const double mantissa_max = std::ldexp(1.0, options.mantissa_bits - 1) - 1.0;

  TFLIFParams params;
  params.channels.clear();
  params.channels.reserve(n);
  params.decay_num = options.decay_num;
  params.decay_den = options.decay_den;
  params.reset = options.reset;
  params.carry_membrane = options.carry_membrane;
  params.timesteps = options.timesteps;

  for (std::size_t c = 0; c < n; ++c) {
    const double denom = bn.var[c] + bn.eps;
    if (!(denom > 0.0)) {
      throw FoldError("fold_bn_into_lif: channel " + std::to_string(c) +
                      " has non-positive var + eps");
    }
    const double scale = bn.gamma[c] / std::sqrt(denom);
    const double bias = bn.beta[c] - scale * bn.mean[c] - threshold;

    bool placed = false;
    for (int s = 31; s >= 0; --s) {
      const double m = std::nearbyint(std::ldexp(scale, s));
      const double b = std::nearbyint(std::ldexp(bias, s));
      const double th = std::nearbyint(std::ldexp(threshold, s));
      if (std::fabs(m) <= mantissa_max && std::fabs(b) <= kInt32Max &&
          std::fabs(th) <= kInt32Max) {
        params.channels.push_back(LifChannel{
            static_cast<std::int32_t>(m), static_cast<std::uint8_t>(s),
            static_cast<std::int32_t>(b), static_cast<std::int32_t>(th)});
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw PrecisionError("fold_bn_into_lif: channel " + std::to_string(c) +
                           " scale/bias do not fit the fixed-point widths");
    }
  }
  params.validate();
  return params;
}

double fold_decision_tolerance(const LifChannel& ch, int x) {
  return std::ldexp(0.5 * std::fabs(static_cast<double>(x)) + 0.5,
                    -static_cast<int>(ch.shift));
}

TflifOutput tflif_forward(std::span<const std::int8_t> acc,
                          const TFLIFParams& params, std::size_t channel) {
  if (acc.size() != params.timesteps) {
    throw ArgumentError("tflif_forward: " + std::to_string(acc.size()) +
                        " accumulator values for T=" +
                        std::to_string(params.timesteps));
  }
  const LifChannel& ch = params.channel(channel);
  TflifOutput out;
  out.spikes.resize(acc.size());
  std::int64_t u = 0;
  for (std::size_t t = 0; t < acc.size(); ++t) {
    const std::int64_t carried =
        params.carry_membrane ? floor_div(u * params.decay_num, params.decay_den) : 0;
    u = carried + static_cast<std::int64_t>(ch.mantissa) * acc[t] + ch.bias_folded;
    const bool spike = u >= 0;
    out.spikes[t] = spike ? 1 : 0;
    if (spike) {
      if (params.reset == ResetMode::kHard) {
        u = 0;
      } else {
        u -= ch.threshold;
      }
    }
  }
  out.membrane = u;
  return out;
}

}  // namespace vesta::golden
