#include "vesta/golden.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "vesta/error.hpp"

namespace vesta::golden {

namespace {

std::int32_t narrow_accum(std::int64_t v, const char* where) {
  if (v < std::numeric_limits<std::int32_t>::min() ||
      v > std::numeric_limits<std::int32_t>::max()) {
    throw WidthError(std::string(where) + ": accumulator " + std::to_string(v) +
                     " exceeds 32 bits");
  }
  return static_cast<std::int32_t>(v);
}

void require_rank(const Shape& s, std::size_t rank, const char* what) {
  if (s.size() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                     ", got " + shape_to_string(s));
  }
}

struct ConvDims {
  std::size_t c_out, c_in, k, h, w, h_out, w_out;
};

ConvDims conv_dims(std::size_t c_in, std::size_t h, std::size_t w,
                   const WeightMatrix& weights, std::size_t stride,
                   const char* what) {
  require_rank(weights.shape(), 4, what);
  const auto& ws = weights.shape();
  if (ws[1] != c_in) {
    throw ShapeError(std::string(what) + ": weight C_in " + std::to_string(ws[1]) +
                     " != input channels " + std::to_string(c_in));
  }
  if (ws[2] != ws[3]) {
    throw ShapeError(std::string(what) + ": non-square kernel");
  }
  if (stride == 0) {
    throw ArgumentError(std::string(what) + ": zero stride");
  }
  const std::size_t k = ws[2];
  if (h < k || w < k || (h - k) % stride != 0 || (w - k) % stride != 0) {
    throw ShapeError(std::string(what) + ": input " + std::to_string(h) + "x" +
                     std::to_string(w) + " does not tile with kernel " +
                     std::to_string(k) + " stride " + std::to_string(stride));
  }
  return ConvDims{ws[0], c_in, k, h, w, (h - k) / stride + 1, (w - k) / stride + 1};
}

}  // namespace

std::int8_t requantize(std::int32_t acc, int shift) {
  if (shift < 0 || shift > 31) {
    throw ArgumentError("requantize: shift " + std::to_string(shift) + " outside [0,31]");
  }
  const std::int64_t d = std::int64_t{1} << shift;
  const std::int64_t a = acc;
  const std::int64_t q = a >= 0 ? a / d : -((-a + d - 1) / d);
  return static_cast<std::int8_t>(std::clamp<std::int64_t>(q, -128, 127));
}

SpikeTensor fire(const AccumTensor& acc, int requant_shift,
                 const TFLIFParams& params, ChannelAxis axis) {
  params.validate();
  const Shape& s = acc.shape();
  if (s.size() < 2) {
    throw ShapeError("fire: accumulator needs [T, ...], got " + shape_to_string(s));
  }
  const std::size_t T = s[0];
  if (T != params.timesteps) {
    throw ShapeError("fire: accumulator has T=" + std::to_string(T) +
                     ", TFLIF expects " + std::to_string(params.timesteps));
  }
  const std::size_t slice = acc.size() / T;

  std::size_t num_channels = 0;
  auto channel_of = [&](std::size_t pos) -> std::size_t {
    switch (axis) {
      case ChannelAxis::kFirst:
        return pos / (slice / s[1]);
      case ChannelAxis::kLast:
        return pos % s.back();
      case ChannelAxis::kHeads: {
        const std::size_t dh = s[3];
        const std::size_t head = pos / (s[2] * dh);
        return head * dh + pos % dh;
      }
    }
    return 0;
  };
  switch (axis) {
    case ChannelAxis::kFirst:
      num_channels = s[1];
      break;
    case ChannelAxis::kLast:
      num_channels = s.back();
      break;
    case ChannelAxis::kHeads:
      require_rank(s, 4, "fire");
      num_channels = s[1] * s[3];
      break;
  }
  if (params.channels.size() != 1 && params.channels.size() != num_channels) {
    throw ShapeError("fire: " + std::to_string(params.channels.size()) +
                     " TFLIF channels for " + std::to_string(num_channels) +
                     " output channels");
  }

  SpikeTensor out(s);
  std::vector<std::int8_t> series(T);
  for (std::size_t pos = 0; pos < slice; ++pos) {
    for (std::size_t t = 0; t < T; ++t) {
      series[t] = requantize(acc[t * slice + pos], requant_shift);
    }
    const auto result = tflif_forward(series, params, channel_of(pos));
    for (std::size_t t = 0; t < T; ++t) {
      if (result.spikes[t]) out.set(t * slice + pos, true);
    }
  }
  return out;
}

AccumTensor ref_spiking_conv2d(const SpikeTensor& in, const WeightMatrix& w,
                               std::size_t stride) {
  require_rank(in.shape(), 4, "ref_spiking_conv2d");
  const std::size_t T = in.shape()[0];
  const ConvDims d = conv_dims(in.shape()[1], in.shape()[2], in.shape()[3], w,
                               stride, "ref_spiking_conv2d");
  AccumTensor out({T, d.c_out, d.h_out, d.w_out});
  std::size_t o = 0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t co = 0; co < d.c_out; ++co) {
      for (std::size_t oy = 0; oy < d.h_out; ++oy) {
        for (std::size_t ox = 0; ox < d.w_out; ++ox) {
          std::int64_t sum = 0;
          for (std::size_t ci = 0; ci < d.c_in; ++ci) {
            for (std::size_t ky = 0; ky < d.k; ++ky) {
              for (std::size_t kx = 0; kx < d.k; ++kx) {
                const std::size_t iy = oy * stride + ky;
                const std::size_t ix = ox * stride + kx;
                if (in.get(((t * d.c_in + ci) * d.h + iy) * d.w + ix)) {
                  sum += w[((co * d.c_in + ci) * d.k + ky) * d.k + kx];
                }
              }
            }
          }
          out[o++] = narrow_accum(sum, "ref_spiking_conv2d");
        }
      }
    }
  }
  return out;
}

AccumTensor ref_conv2d_u8(const ByteImage& img, const WeightMatrix& w,
                          std::size_t stride, std::size_t timesteps) {
  require_rank(img.shape(), 3, "ref_conv2d_u8");
  if (timesteps == 0) {
    throw ArgumentError("ref_conv2d_u8: zero timesteps");
  }
  const ConvDims d = conv_dims(img.shape()[0], img.shape()[1], img.shape()[2], w,
                               stride, "ref_conv2d_u8");
  const std::size_t slice = d.c_out * d.h_out * d.w_out;
  AccumTensor out({timesteps, d.c_out, d.h_out, d.w_out});
  std::size_t o = 0;
  for (std::size_t co = 0; co < d.c_out; ++co) {
    for (std::size_t oy = 0; oy < d.h_out; ++oy) {
      for (std::size_t ox = 0; ox < d.w_out; ++ox) {
        std::int64_t sum = 0;
        for (std::size_t ci = 0; ci < d.c_in; ++ci) {
          for (std::size_t ky = 0; ky < d.k; ++ky) {
            for (std::size_t kx = 0; kx < d.k; ++kx) {
              const std::size_t iy = oy * stride + ky;
              const std::size_t ix = ox * stride + kx;
              sum += static_cast<std::int64_t>(img[(ci * d.h + iy) * d.w + ix]) *
                     w[((co * d.c_in + ci) * d.k + ky) * d.k + kx];
            }
          }
        }
        out[o++] = narrow_accum(sum, "ref_conv2d_u8");
      }
    }
  }
  for (std::size_t t = 1; t < timesteps; ++t) {
    std::copy_n(out.values().begin(), slice, out.values().begin() + t * slice);
  }
  return out;
}

AccumTensor ref_spiking_linear(const SpikeTensor& in, const WeightMatrix& w) {
  require_rank(in.shape(), 3, "ref_spiking_linear");
  require_rank(w.shape(), 2, "ref_spiking_linear");
  const std::size_t T = in.shape()[0];
  const std::size_t N = in.shape()[1];
  const std::size_t d_in = in.shape()[2];
  const std::size_t d_out = w.shape()[0];
  if (w.shape()[1] != d_in) {
    throw ShapeError("ref_spiking_linear: weight " + shape_to_string(w.shape()) +
                     " vs input features " + std::to_string(d_in));
  }
  AccumTensor out({T, N, d_out});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t row = (t * N + n) * d_in;
      for (std::size_t o = 0; o < d_out; ++o) {
        std::int64_t sum = 0;
        for (std::size_t i = 0; i < d_in; ++i) {
          if (in.get(row + i)) sum += w[o * d_in + i];
        }
        out[(t * N + n) * d_out + o] = narrow_accum(sum, "ref_spiking_linear");
      }
    }
  }
  return out;
}

SsaOutput ref_ssa(const SpikeTensor& q, const SpikeTensor& k, const SpikeTensor& v,
                  const AttentionQuant& quant, const TFLIFParams& tflif) {
  require_rank(q.shape(), 4, "ref_ssa");
  if (k.shape() != q.shape() || v.shape() != q.shape()) {
    throw ShapeError("ref_ssa: q, k, v shapes differ");
  }
  const std::size_t T = q.shape()[0];
  const std::size_t H = q.shape()[1];
  const std::size_t N = q.shape()[2];
  const std::size_t D = q.shape()[3];
  if (D > 0xFFFF) {
    throw WidthError("ref_ssa: head_dim does not fit 16-bit scores");
  }

  SsaOutput out;
  out.scores = AccumTensor({T, H, N, N});
  out.raw = AccumTensor({T, H, N, D});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t h = 0; h < H; ++h) {
      const std::size_t base = (t * H + h) * N;
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t m = 0; m < N; ++m) {
          std::int32_t s = 0;
          for (std::size_t j = 0; j < D; ++j) {
            s += (q.get((base + n) * D + j) && k.get((base + m) * D + j)) ? 1 : 0;
          }
          out.scores[(base + n) * N + m] = requantize(s, quant.score_shift);
        }
      }
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t j = 0; j < D; ++j) {
          std::int64_t acc = 0;
          for (std::size_t m = 0; m < N; ++m) {
            if (v.get((base + m) * D + j)) acc += out.scores[(base + n) * N + m];
          }
          out.raw[(base + n) * D + j] = narrow_accum(acc, "ref_ssa");
        }
      }
    }
  }
  out.out = fire(out.raw, quant.requant_shift, tflif, ChannelAxis::kHeads);
  return out;
}

SpikeTensor iand_residual(const SpikeTensor& a, const SpikeTensor& b, ResidualOp op) {
  if (a.shape() != b.shape()) {
    throw ShapeError("residual: " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  SpikeTensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a.get(i);
    const bool y = b.get(i);
    const bool r = op == ResidualOp::kIand ? (!x && y) : (x || y);
    if (r) out.set(i, true);
  }
  return out;
}

SpikeTensor tokens_from_feature_map(const SpikeTensor& fmap) {
  require_rank(fmap.shape(), 4, "tokens_from_feature_map");
  const auto& s = fmap.shape();
  const std::size_t T = s[0], C = s[1], HW = s[2] * s[3];
  SpikeTensor out({T, HW, C});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t p = 0; p < HW; ++p) {
        if (fmap.get((t * C + c) * HW + p)) out.set((t * HW + p) * C + c, true);
      }
    }
  }
  return out;
}

SpikeTensor split_heads(const SpikeTensor& x, std::size_t heads) {
  require_rank(x.shape(), 3, "split_heads");
  const std::size_t T = x.shape()[0], N = x.shape()[1], D = x.shape()[2];
  if (heads == 0 || D % heads != 0) {
    throw ShapeError("split_heads: " + std::to_string(D) + " features over " +
                     std::to_string(heads) + " heads");
  }
  const std::size_t dh = D / heads;
  SpikeTensor out({T, heads, N, dh});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t f = 0; f < D; ++f) {
        if (x.get((t * N + n) * D + f)) {
          const std::size_t h = f / dh, j = f % dh;
          out.set(((t * heads + h) * N + n) * dh + j, true);
        }
      }
    }
  }
  return out;
}

SpikeTensor merge_heads(const SpikeTensor& x) {
  require_rank(x.shape(), 4, "merge_heads");
  const std::size_t T = x.shape()[0], H = x.shape()[1], N = x.shape()[2],
                    dh = x.shape()[3];
  SpikeTensor out({T, N, H * dh});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t j = 0; j < dh; ++j) {
          if (x.get(((t * H + h) * N + n) * dh + j)) {
            out.set((t * N + n) * H * dh + h * dh + j, true);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace vesta::golden
