#include "vesta/dataflow.hpp"

#include <algorithm>
#include <bit>
#include <ostream>

#include "vesta/error.hpp"

namespace vesta::dataflow {

using golden::LayerKind;
using golden::LayerSpec;
using memory::BankId;

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::size_t pow2_ceil(std::size_t v) { return std::bit_ceil(std::max<std::size_t>(v, 1)); }

std::int32_t addr(std::size_t v) { return static_cast<std::int32_t>(v); }

void check_addressable(std::size_t elements, const std::string& what) {
  if (elements > static_cast<std::size_t>(INT32_MAX)) {
    throw SchedulingError(what + ": operand too large to address");
  }
}

void check_lanes(const MappingPolicy& policy, std::size_t timesteps,
                 const pe::PEModuleConfig& pe, const std::string& where) {
  if (policy.tokens_per_unit * timesteps != pe.pes_per_unit) {
    throw PolicyError(where + ": " + std::to_string(policy.tokens_per_unit) +
                      " tokens x T=" + std::to_string(timesteps) + " does not fill " +
                      std::to_string(pe.pes_per_unit) + " lanes per unit");
  }
}

void reset_item(WorkItem& item, std::size_t units, std::size_t groups) {
  item.units.assign(units, UnitSlot{});
  item.dests.assign(groups, GroupDest{});
  item.mem_ops.clear();
  item.weights_loaded = false;
}

void add_op(WorkItem& item, BankId bank, MemOpKind kind, std::uint64_t bits,
            BufferTag tag) {
  if (bits > 0) item.mem_ops.push_back(MemOp{bank, kind, bits, tag});
}

using Emit = std::function<void(const WorkItem&)>;

// -------------------------------------------------------------------- ZSC --

void enumerate(const ZscPlan& p, const Emit& fn) {
  const auto& g = p.geom;
  const std::size_t T = p.timesteps;
  const std::size_t ho = g.h_out(), wo = g.w_out();
  const std::size_t P = ho * wo;
  const std::size_t ppu = p.policy.tokens_per_unit;
  const std::size_t kk = g.kernel * g.kernel;
  WorkItem item;
  item.phase = Phase::kZsc;
  item.step = Step::kMain;
  item.mode = pe::SumAcrossUnits{p.pe.num_units};
  std::uint64_t cycle = 0;
  for (std::size_t co = 0; co < g.c_out; ++co) {
    for (std::size_t pp = 0; pp < p.pixel_pairs; ++pp) {
      const std::size_t pix_here = std::min(ppu, P - pp * ppu);
      for (std::size_t ch = 0; ch < p.chunks; ++ch) {
        reset_item(item, p.pe.num_units, 1);
        item.cycle = cycle++;
        item.weights_loaded = p.chunks > 1 || pp == 0;
        const std::size_t c0 = ch * p.channels_per_cycle;
        const std::size_t cnt = std::min(p.channels_per_cycle, g.c_in - c0);
        for (std::size_t gi = 0; gi < cnt; ++gi) {
          const std::size_t ci = c0 + gi;
          for (std::size_t kidx = 0; kidx < kk; ++kidx) {
            const std::size_t ky = kidx / g.kernel, kx = kidx % g.kernel;
            UnitSlot& u = item.units[gi * kk + kidx];
            u.weight = addr(((co * g.c_in + ci) * g.kernel + ky) * g.kernel + kx);
            for (std::size_t pix = 0; pix < pix_here; ++pix) {
              const std::size_t pi = pp * ppu + pix;
              const std::size_t y = (pi / wo) * g.stride + ky;
              const std::size_t x = (pi % wo) * g.stride + kx;
              for (std::size_t t = 0; t < T; ++t) {
                u.lanes[pix * T + t] = addr(((t * g.c_in + ci) * g.height + y) * g.width + x);
              }
            }
          }
        }
        GroupDest& d = item.dests[0];
        d.final = ch + 1 == p.chunks;
        for (std::size_t pix = 0; pix < pix_here; ++pix) {
          const std::size_t pi = pp * ppu + pix;
          for (std::size_t t = 0; t < T; ++t) {
            d.lanes[pix * T + t] = addr(((t * g.c_out + co) * ho + pi / wo) * wo + pi % wo);
          }
        }
        if (item.weights_loaded) {
          add_op(item, BankId::kLW, MemOpKind::kRead, cnt * kk * 8, BufferTag::kWeights);
        }
        add_op(item, BankId::kLI, MemOpKind::kRead, cnt * kk * pix_here * T,
               BufferTag::kSpikes);
        if (d.final) {
          add_op(item, BankId::kOut, MemOpKind::kWrite, pix_here * T,
                 BufferTag::kOutputSpikes);
        }
        fn(item);
      }
    }
  }
}

// ------------------------------------------------------------------- SSSC --

void enumerate(const SsscPlan& p, const Emit& fn) {
  const auto& g = p.geom;
  const std::size_t ho = g.h_out(), wo = g.w_out();
  const std::size_t P = ho * wo;
  const std::size_t k = g.kernel;
  const std::size_t groups = p.pe.num_units / p.units_per_pixel;

  WorkItem item;
  item.phase = Phase::kSssc;
  item.step = Step::kMain;
  item.mode = pe::ShiftSumWithinUnit{p.units_per_pixel, pe::kIdentityBitplanes};
  std::uint64_t cycle = 0;
  for (std::size_t co = 0; co < g.c_out; ++co) {
    for (std::size_t b = 0; b < p.batches; ++b) {
      reset_item(item, p.pe.num_units, groups);
      item.cycle = cycle++;
      item.weights_loaded = b == 0;
      const std::size_t here = std::min(p.pixels_per_cycle, P - b * p.pixels_per_cycle);
      for (std::size_t pi = 0; pi < here; ++pi) {
        const std::size_t pix = b * p.pixels_per_cycle + pi;
        const std::size_t oy = pix / wo, ox = pix % wo;
        for (std::size_t ci = 0; ci < g.c_in; ++ci) {
          for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
              UnitSlot& u = item.units[pi * p.units_per_pixel + (ci * k + ky) * k + kx];
              u.weight = addr(((co * g.c_in + ci) * k + ky) * k + kx);
              const auto a = addr((ci * g.height + oy * g.stride + ky) * g.width +
                                  ox * g.stride + kx);
              u.lanes.fill(a);
            }
          }
        }
        item.dests[pi].lanes[0] = addr((co * ho + oy) * wo + ox);
      }
      if (item.weights_loaded) {
        add_op(item, BankId::kSW, MemOpKind::kRead, p.units_per_pixel * 8,
               BufferTag::kWeights);
      }
      add_op(item, BankId::kLI, MemOpKind::kRead, here * p.units_per_pixel * 8,
             BufferTag::kPixels);
      add_op(item, BankId::kOut, MemOpKind::kWrite, here * p.timesteps,
             BufferTag::kOutputSpikes);
      fn(item);
    }
  }
}

// ------------------------------------------------------------------- WSSL --

void enumerate(const WsslPlan& p, const Emit& fn) {
  const auto& g = p.geom;
  const std::size_t T = p.timesteps;
  const std::size_t U = p.pe.num_units;
  const std::size_t tpu = p.policy.tokens_per_unit;
  const bool head = p.layer.kind == LayerKind::kHead;
  const std::uint64_t column_bits = g.d_in * 8;

  WorkItem item;
  item.phase = Phase::kWssl;
  item.step = Step::kMain;
  item.mode = pe::SumAcrossUnits{U};
  std::uint64_t cycle = 0;
  for (std::size_t o = 0; o < g.d_out; ++o) {
    for (std::size_t tg = 0; tg < p.token_groups; ++tg) {
      const std::size_t tok_here = std::min(tpu, g.tokens - tg * tpu);
      for (std::size_t s = 0; s < p.sections; ++s) {
        reset_item(item, U, 1);
        item.cycle = cycle++;
        item.weights_loaded = p.sections > 1 || tg == 0;
        const std::size_t d0 = s * U;
        const std::size_t cnt = std::min(U, g.d_in - d0);
        const bool first = tg == 0 && s == 0;
        const bool last = tg + 1 == p.token_groups && s + 1 == p.sections;
        if (first) add_op(item, BankId::kLW, MemOpKind::kAlloc, column_bits, BufferTag::kWeights);
        for (std::size_t ui = 0; ui < cnt; ++ui) {
          const std::size_t d = d0 + ui;
          UnitSlot& u = item.units[ui];
          u.weight = addr(o * g.d_in + d);
          for (std::size_t tok = 0; tok < tok_here; ++tok) {
            const std::size_t n = tg * tpu + tok;
            for (std::size_t t = 0; t < T; ++t) {
              u.lanes[tok * T + t] = addr((t * g.tokens + n) * g.d_in + d);
            }
          }
        }
        GroupDest& dest = item.dests[0];
        dest.final = s + 1 == p.sections;
        for (std::size_t tok = 0; tok < tok_here; ++tok) {
          const std::size_t n = tg * tpu + tok;
          for (std::size_t t = 0; t < T; ++t) {
            dest.lanes[tok * T + t] = addr((t * g.tokens + n) * g.d_out + o);
          }
        }
        if (item.weights_loaded) {
          add_op(item, BankId::kLW, MemOpKind::kRead, cnt * 8, BufferTag::kWeights);
        }
        add_op(item, BankId::kLI, MemOpKind::kRead, cnt * tok_here * T, BufferTag::kSpikes);
        if (dest.final) {
          if (head) {
            add_op(item, BankId::kOut, MemOpKind::kWrite,
                   tok_here * T * static_cast<std::uint64_t>(p.pe.accumulator_width),
                   BufferTag::kLogits);
          } else {
            add_op(item, BankId::kOut, MemOpKind::kWrite, tok_here * T,
                   BufferTag::kOutputSpikes);
          }
        }
        if (last) add_op(item, BankId::kLW, MemOpKind::kFree, column_bits, BufferTag::kWeights);
        fn(item);
      }
    }
  }
}

// ------------------------------------------------------------------- STDP --

void enumerate(const StdpPlan& p, const Emit& fn) {
  const auto& g = p.geom;
  const std::size_t T = p.timesteps;
  const std::size_t H = g.heads, N = g.tokens, dh = g.head_dim;
  const std::size_t U = p.pe.num_units;
  const std::size_t R = p.rows_per_block;

  WorkItem item;
  item.phase = Phase::kStdp;
  std::uint64_t cycle = 0;
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t b = 0; b < p.row_blocks; ++b) {
      const std::size_t rows = p.rows_in_block(b);
      const std::size_t row0 = b * R;
      const std::uint64_t score_bits = rows * N * 8;
      const std::uint64_t stage_bits = rows * dh * 8;
      for (std::size_t t = 0; t < T; ++t) {
        const std::size_t th = t * H + h;

        // Score step: K rows as 0/1 weights, one key per unit group, one
        // query row per lane.
        for (std::size_t i = 0; i < p.score_cycles; ++i) {
          reset_item(item, U, p.keys_per_cycle);
          item.step = Step::kScore;
          item.mode = pe::SumAcrossUnits{p.score_group};
          item.cycle = cycle++;
          item.weights_loaded = true;
          if (i == 0) add_op(item, BankId::kSW, MemOpKind::kAlloc, score_bits, BufferTag::kScores);
          std::size_t keys = 0;
          for (std::size_t kp = 0; kp < p.keys_per_cycle; ++kp) {
            const std::size_t m = i * p.keys_per_cycle + kp;
            if (m >= N) break;
            ++keys;
            for (std::size_t j = 0; j < dh; ++j) {
              UnitSlot& u = item.units[kp * p.score_group + j];
              u.weight = addr((th * N + m) * dh + j);
              for (std::size_t l = 0; l < rows; ++l) {
                u.lanes[l] = addr((th * N + row0 + l) * dh + j);
              }
            }
            for (std::size_t l = 0; l < rows; ++l) {
              item.dests[kp].lanes[l] = addr((th * N + row0 + l) * N + m);
            }
          }
          add_op(item, BankId::kLI, MemOpKind::kRead, keys * dh, BufferTag::kSpikes);
          add_op(item, BankId::kLI, MemOpKind::kRead, keys * dh * rows, BufferTag::kSpikes);
          add_op(item, BankId::kSW, MemOpKind::kWrite, keys * rows * 8, BufferTag::kScores);
          fn(item);
        }

        // Value step: requantized scores stationary, one V tile streamed per
        // item, one query row per unit group.
        const std::size_t row_chunks = ceil_div(rows, p.rows_per_value_cycle);
        for (std::size_t rc = 0; rc < row_chunks; ++rc) {
          const std::size_t r_here =
              std::min(p.rows_per_value_cycle, rows - rc * p.rows_per_value_cycle);
          for (std::size_t jt = 0; jt < p.v_tiles; ++jt) {
            const std::size_t j0 = jt * p.policy.v_tile;
            const std::size_t cols = std::min(p.policy.v_tile, dh - j0);
            for (std::size_t kc = 0; kc < p.key_chunks; ++kc) {
              reset_item(item, U, p.rows_per_value_cycle);
              item.step = Step::kValue;
              item.mode = pe::SumAcrossUnits{p.value_group};
              item.cycle = cycle++;
              item.weights_loaded = p.key_chunks > 1 || jt == 0;
              const std::size_t m0 = kc * U;
              const std::size_t keys = std::min(p.value_group, N - m0);
              if (kc == 0) {
                add_op(item, BankId::kSI, MemOpKind::kAlloc, cols * N, BufferTag::kValueTile);
              }
              for (std::size_t r = 0; r < r_here; ++r) {
                const std::size_t n = row0 + rc * p.rows_per_value_cycle + r;
                for (std::size_t mi = 0; mi < keys; ++mi) {
                  const std::size_t m = m0 + mi;
                  UnitSlot& u = item.units[r * p.value_group + mi];
                  u.weight = addr((th * N + n) * N + m);
                  for (std::size_t l = 0; l < cols; ++l) {
                    u.lanes[l] = addr((th * N + m) * dh + j0 + l);
                  }
                }
                GroupDest& d = item.dests[r];
                d.final = kc + 1 == p.key_chunks;
                for (std::size_t l = 0; l < cols; ++l) {
                  d.lanes[l] = addr((th * N + n) * dh + j0 + l);
                }
              }
              if (kc == 0) {
                add_op(item, BankId::kSI, MemOpKind::kWrite, cols * N, BufferTag::kValueTile);
              }
              if (item.weights_loaded) {
                add_op(item, BankId::kSW, MemOpKind::kRead, r_here * keys * 8,
                       BufferTag::kScores);
              }
              add_op(item, BankId::kSI, MemOpKind::kRead, keys * cols, BufferTag::kValueTile);
              if (kc + 1 == p.key_chunks) {
                add_op(item, BankId::kSI, MemOpKind::kFree, cols * N, BufferTag::kValueTile);
              }
              const bool last = rc + 1 == row_chunks && jt + 1 == p.v_tiles &&
                                kc + 1 == p.key_chunks;
              if (last) {
                add_op(item, BankId::kSW, MemOpKind::kFree, score_bits, BufferTag::kScores);
                if (t + 1 < T) {
                  add_op(item, BankId::kOut, MemOpKind::kAlloc, stage_bits, BufferTag::kStaging);
                  add_op(item, BankId::kOut, MemOpKind::kWrite, stage_bits, BufferTag::kStaging);
                } else {
                  add_op(item, BankId::kOut, MemOpKind::kRead, stage_bits * (T - 1),
                         BufferTag::kStaging);
                  add_op(item, BankId::kOut, MemOpKind::kFree, stage_bits * (T - 1),
                         BufferTag::kStaging);
                  add_op(item, BankId::kOut, MemOpKind::kWrite, rows * dh * T,
                         BufferTag::kOutputSpikes);
                }
              }
              fn(item);
            }
          }
        }
      }
    }
  }
}

template <class P>
const PlanBase& base(const P& p) {
  return p;
}

}  // namespace

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::kZsc:
      return "ZSC";
    case Phase::kSssc:
      return "SSSC";
    case Phase::kWssl:
      return "WSSL";
    case Phase::kStdp:
      return "STDP";
  }
  return "?";
}

std::string to_string(Step step) {
  switch (step) {
    case Step::kMain:
      return "main";
    case Step::kScore:
      return "score";
    case Step::kValue:
      return "value";
  }
  return "?";
}

std::string to_string(BufferTag tag) {
  switch (tag) {
    case BufferTag::kWeights:
      return "weights";
    case BufferTag::kSpikes:
      return "spikes";
    case BufferTag::kPixels:
      return "pixels";
    case BufferTag::kScores:
      return "scores";
    case BufferTag::kValueTile:
      return "value-tile";
    case BufferTag::kPartialSum:
      return "partial-sum";
    case BufferTag::kOutputSpikes:
      return "output-spikes";
    case BufferTag::kLogits:
      return "logits";
    case BufferTag::kStaging:
      return "staging";
  }
  return "?";
}

void MappingPolicy::validate(const pe::PEModuleConfig& pe) const {
  pe.validate();
  if (tokens_per_unit == 0 || tokens_per_unit > pe.pes_per_unit) {
    throw PolicyError("tokens_per_unit must lie in [1, pes_per_unit]");
  }
  if (zsc_group == 0 || zsc_group > pe.num_units) {
    throw PolicyError("zsc_group must lie in [1, num_units]");
  }
  if (v_tile == 0 || v_tile > pe.pes_per_unit) {
    throw PolicyError("v_tile must lie in [1, pes_per_unit]");
  }
}

std::size_t WorkItem::active_lanes() const {
  std::size_t n = 0;
  for (const auto& u : units) {
    if (u.weight < 0) continue;
    for (auto a : u.lanes) n += a >= 0;
  }
  return n;
}

double PhaseCounters::utilization() const {
  return lane_slots == 0 ? 0.0
                         : static_cast<double>(active_lanes) /
                               static_cast<double>(lane_slots);
}

PhaseCounters& PhaseCounters::operator+=(const PhaseCounters& o) {
  cycles += o.cycles;
  stall_cycles += o.stall_cycles;
  lane_slots += o.lane_slots;
  active_lanes += o.active_lanes;
  spike_lanes += o.spike_lanes;
  weight_loads += o.weight_loads;
  partial_sum_sram_bits += o.partial_sum_sram_bits;
  accumulator_buffer_high_water_bits =
      std::max(accumulator_buffer_high_water_bits, o.accumulator_buffer_high_water_bits);
  return *this;
}

std::size_t StdpPlan::rows_in_block(std::size_t b) const {
  return std::min(rows_per_block, geom.tokens - b * rows_per_block);
}

std::size_t StdpPlan::value_cycles(std::size_t rows) const {
  return ceil_div(rows, rows_per_value_cycle) * v_tiles * key_chunks;
}

// --------------------------------------------------------------- Schedule --

Phase Schedule::phase() const {
  return static_cast<Phase>(plan_.index());
}

const LayerSpec& Schedule::layer() const {
  return std::visit([](const auto& p) -> const LayerSpec& { return base(p).layer; }, plan_);
}

const pe::PEModuleConfig& Schedule::pe() const {
  return std::visit([](const auto& p) -> const pe::PEModuleConfig& { return base(p).pe; },
                    plan_);
}

std::size_t Schedule::timesteps() const {
  return std::visit([](const auto& p) { return base(p).timesteps; }, plan_);
}

std::uint64_t Schedule::predicted_cycles() const {
  struct V {
    std::uint64_t operator()(const ZscPlan& p) const {
      return std::uint64_t{p.geom.c_out} * p.chunks * p.pixel_pairs;
    }
    std::uint64_t operator()(const SsscPlan& p) const {
      return std::uint64_t{p.geom.c_out} * p.batches;
    }
    std::uint64_t operator()(const WsslPlan& p) const {
      return std::uint64_t{p.sections} * p.geom.d_out * p.token_groups;
    }
    std::uint64_t operator()(const StdpPlan& p) const {
      std::uint64_t per_head_t = 0;
      for (std::size_t b = 0; b < p.row_blocks; ++b) {
        per_head_t += p.score_cycles + p.value_cycles(p.rows_in_block(b));
      }
      return per_head_t * p.geom.heads * p.timesteps;
    }
  };
  return std::visit(V{}, plan_);
}

std::uint64_t Schedule::active_lane_ops() const {
  struct V {
    std::uint64_t operator()(const ZscPlan& p) const {
      const auto& g = p.geom;
      return std::uint64_t{g.c_out} * g.c_in * g.kernel * g.kernel * g.h_out() * g.w_out() *
             p.timesteps;
    }
    std::uint64_t operator()(const SsscPlan& p) const {
      const auto& g = p.geom;
      return std::uint64_t{g.c_out} * g.h_out() * g.w_out() * p.units_per_pixel * 8;
    }
    std::uint64_t operator()(const WsslPlan& p) const {
      const auto& g = p.geom;
      return std::uint64_t{g.d_out} * g.d_in * g.tokens * p.timesteps;
    }
    std::uint64_t operator()(const StdpPlan& p) const {
      const auto& g = p.geom;
      return 2 * std::uint64_t{p.timesteps} * g.heads * g.tokens * g.tokens * g.head_dim;
    }
  };
  return std::visit(V{}, plan_);
}

std::uint64_t Schedule::weight_loads() const {
  struct V {
    std::uint64_t operator()(const ZscPlan& p) const {
      return p.chunks == 1 ? p.geom.c_out
                           : std::uint64_t{p.geom.c_out} * p.chunks * p.pixel_pairs;
    }
    std::uint64_t operator()(const SsscPlan& p) const { return p.geom.c_out; }
    std::uint64_t operator()(const WsslPlan& p) const {
      return p.sections == 1 ? p.geom.d_out
                             : std::uint64_t{p.sections} * p.geom.d_out * p.token_groups;
    }
    std::uint64_t operator()(const StdpPlan& p) const {
      std::uint64_t per_head_t = 0;
      for (std::size_t b = 0; b < p.row_blocks; ++b) {
        const std::size_t rows = p.rows_in_block(b);
        per_head_t += p.score_cycles +
                      (p.key_chunks == 1 ? ceil_div(rows, p.rows_per_value_cycle)
                                         : p.value_cycles(rows));
      }
      return per_head_t * p.geom.heads * p.timesteps;
    }
  };
  return std::visit(V{}, plan_);
}

PhaseCounters Schedule::predicted_counters(std::uint32_t weight_load_latency) const {
  PhaseCounters c;
  c.cycles = predicted_cycles();
  c.weight_loads = weight_loads();
  c.stall_cycles = c.weight_loads * weight_load_latency;
  c.lane_slots = c.cycles * pe().total_pes();
  c.active_lanes = active_lane_ops();
  c.accumulator_buffer_high_water_bits = predicted_buffers().accumulator_buffer_bits;
  return c;
}

BufferPrediction Schedule::predicted_buffers() const {
  BufferPrediction b;
  auto set = [&b](BankId id, std::uint64_t bits) {
    b.bank_bits[static_cast<std::size_t>(id)] = bits;
  };
  const std::uint64_t acc_w = static_cast<std::uint64_t>(pe().accumulator_width);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ZscPlan>) {
          const std::size_t P_ = p.geom.h_out() * p.geom.w_out();
          if (p.chunks > 1) {
            b.accumulator_buffer_bits =
                std::min(p.policy.tokens_per_unit, P_) * p.timesteps * acc_w;
          }
        } else if constexpr (std::is_same_v<P, WsslPlan>) {
          set(BankId::kLW, std::uint64_t{p.geom.d_in} * 8);
          if (p.sections > 1) {
            b.accumulator_buffer_bits =
                std::min(p.policy.tokens_per_unit, p.geom.tokens) * p.timesteps * acc_w;
          }
        } else if constexpr (std::is_same_v<P, StdpPlan>) {
          const auto& g = p.geom;
          const std::uint64_t rows = std::min(p.rows_per_block, g.tokens);
          set(BankId::kSW, rows * g.tokens * 8);
          set(BankId::kSI, std::uint64_t{std::min(p.policy.v_tile, g.head_dim)} * g.tokens);
          set(BankId::kOut, (p.timesteps - 1) * rows * g.head_dim * 8);
          if (p.key_chunks > 1) {
            b.accumulator_buffer_bits = std::min(p.policy.v_tile, g.head_dim) * acc_w;
          }
        }
      },
      plan_);
  return b;
}

memory::BufferComparison Schedule::buffer_comparison() const {
  const std::uint64_t acc_w = static_cast<std::uint64_t>(pe().accumulator_width);
  const BufferPrediction pred = predicted_buffers();
  return std::visit(
      [&](const auto& p) -> memory::BufferComparison {
        using P = std::decay_t<decltype(p)>;
        const std::string& name = p.layer.name;
        if constexpr (std::is_same_v<P, ZscPlan>) {
          // Channel-by-channel mapping spills one partial map per output channel.
          return {name + " ZSC partial sums", pred.accumulator_buffer_bits,
                  std::uint64_t{p.geom.h_out()} * p.geom.w_out() * p.timesteps * acc_w};
        } else if constexpr (std::is_same_v<P, SsscPlan>) {
          // Recomputing every timestep would stream the image T times.
          const std::uint64_t img =
              std::uint64_t{p.geom.c_in} * p.geom.height * p.geom.width * 8;
          return {name + " SSSC input stream", img, img * p.timesteps};
        } else if constexpr (std::is_same_v<P, WsslPlan>) {
          // Section-outer order keeps partial sums for the whole column.
          return {name + " WSSL split buffer", pred.accumulator_buffer_bits,
                  p.sections > 1 ? std::uint64_t{p.geom.tokens} * p.timesteps * acc_w : 0};
        } else {
          return {name + " STDP V storage", pred.bank(BankId::kSI),
                  std::uint64_t{p.geom.tokens} * p.geom.head_dim};
        }
      },
      plan_);
}

void Schedule::for_each(const std::function<void(const WorkItem&)>& fn) const {
  std::visit([&](const auto& p) { enumerate(p, fn); }, plan_);
}

std::vector<WorkItem> Schedule::materialize() const {
  std::vector<WorkItem> items;
  items.reserve(predicted_cycles());
  for_each([&items](const WorkItem& w) { items.push_back(w); });
  return items;
}

// ------------------------------------------------------------- schedulers --

Schedule schedule_zsc(const LayerSpec& layer, std::size_t timesteps,
                      const HardwareConfig& hw) {
  if (layer.kind != LayerKind::kSpikeConv) {
    throw UnsupportedLayerError("ZSC: layer " + layer.name + " is " +
                                golden::to_string(layer.kind) + ", not a spike convolution");
  }
  hw.policy.validate(hw.pe);
  const auto& g = layer.conv();
  if (g.kernel != 2 || g.stride != 2) {
    throw UnsupportedLayerError("ZSC: layer " + layer.name + " has kernel " +
                                std::to_string(g.kernel) + " stride " +
                                std::to_string(g.stride) + "; only 2x2 stride 2 is mapped");
  }
  if (hw.policy.zsc_group != g.kernel * g.kernel) {
    throw PolicyError("ZSC: zsc_group must equal the kernel area");
  }
  check_lanes(hw.policy, timesteps, hw.pe, "ZSC");
  if (g.height < g.kernel || g.width < g.kernel || g.c_in == 0 || g.c_out == 0) {
    throw ShapeError("ZSC: empty convolution " + layer.name);
  }
  check_addressable(timesteps * g.c_in * g.height * g.width, "ZSC");

  ZscPlan p;
  p.layer = layer;
  p.timesteps = timesteps;
  p.pe = hw.pe;
  p.policy = hw.policy;
  p.geom = g;
  p.channels_per_cycle = hw.pe.num_units / hw.policy.zsc_group;
  p.chunks = ceil_div(g.c_in, p.channels_per_cycle);
  p.pixel_pairs = ceil_div(g.h_out() * g.w_out(), hw.policy.tokens_per_unit);
  return Schedule(std::move(p));
}

Schedule schedule_sssc(const LayerSpec& layer, std::size_t timesteps,
                       const HardwareConfig& hw) {
  if (layer.kind != LayerKind::kConv8bitInput) {
    throw SchedulingError("SSSC: layer " + layer.name +
                          " is not the 8-bit input convolution");
  }
  hw.policy.validate(hw.pe);
  if (hw.pe.pes_per_unit != pe::kMaxLanes) {
    throw PolicyError("SSSC: needs 8 lanes per unit, one per bitplane");
  }
  const auto& g = layer.conv();
  if (g.height < g.kernel || g.width < g.kernel || g.c_in == 0 || g.c_out == 0 ||
      g.kernel == 0 || g.stride == 0) {
    throw ShapeError("SSSC: empty convolution " + layer.name);
  }
  const std::size_t upp = g.kernel * g.kernel * g.c_in;
  if (upp > hw.pe.num_units) {
    throw PolicyError("SSSC: receptive field of " + std::to_string(upp) +
                      " units exceeds the PE module");
  }
  check_addressable(timesteps * g.c_out * g.h_out() * g.w_out(), "SSSC");

  SsscPlan p;
  p.layer = layer;
  p.timesteps = timesteps;
  p.pe = hw.pe;
  p.policy = hw.policy;
  p.geom = g;
  p.units_per_pixel = upp;
  p.pixels_per_cycle = hw.pe.num_units / upp;
  p.batches = ceil_div(g.h_out() * g.w_out(), p.pixels_per_cycle);
  return Schedule(std::move(p));
}

Schedule schedule_wssl(const LayerSpec& layer, std::size_t timesteps,
                       const HardwareConfig& hw) {
  if (layer.kind != LayerKind::kSpikeLinear && layer.kind != LayerKind::kHead) {
    throw UnsupportedLayerError("WSSL: layer " + layer.name + " is " +
                                golden::to_string(layer.kind));
  }
  hw.policy.validate(hw.pe);
  check_lanes(hw.policy, timesteps, hw.pe, "WSSL");
  const auto& g = layer.linear();
  if (g.tokens == 0 || g.d_in == 0 || g.d_out == 0) {
    throw ShapeError("WSSL: empty linear layer " + layer.name);
  }
  check_addressable(timesteps * g.tokens * std::max(g.d_in, g.d_out), "WSSL");
  check_addressable(g.d_in * g.d_out, "WSSL");

  WsslPlan p;
  p.layer = layer;
  p.timesteps = timesteps;
  p.pe = hw.pe;
  p.policy = hw.policy;
  p.geom = g;
  p.sections = ceil_div(g.d_in, hw.pe.num_units);
  p.token_groups = ceil_div(g.tokens, hw.policy.tokens_per_unit);
  return Schedule(std::move(p));
}

Schedule schedule_stdp(const LayerSpec& layer, std::size_t timesteps,
                       const HardwareConfig& hw) {
  if (layer.kind != LayerKind::kSpikeAttention) {
    throw UnsupportedLayerError("STDP: layer " + layer.name + " is " +
                                golden::to_string(layer.kind));
  }
  hw.policy.validate(hw.pe);
  const auto& g = layer.attention();
  const std::size_t U = hw.pe.num_units;
  if (g.heads == 0 || g.head_dim == 0 || g.tokens == 0 || timesteps == 0) {
    throw ShapeError("STDP: empty attention layer " + layer.name);
  }
  if (g.head_dim > U) {
    throw PolicyError("STDP: head_dim " + std::to_string(g.head_dim) +
                      " exceeds " + std::to_string(U) + " units");
  }
  const std::size_t gs = pow2_ceil(g.head_dim);
  const std::size_t gv = pow2_ceil(std::min(g.tokens, U));
  if (U % gs != 0 || U % gv != 0) {
    throw PolicyError("STDP: unit count " + std::to_string(U) +
                      " is not divisible by the adder-tree group sizes");
  }
  check_addressable(timesteps * g.heads * g.tokens * std::max(g.tokens, g.head_dim),
                    "STDP");

  StdpPlan p;
  p.layer = layer;
  p.timesteps = timesteps;
  p.pe = hw.pe;
  p.policy = hw.policy;
  p.geom = g;
  p.rows_per_block = hw.pe.pes_per_unit;
  p.row_blocks = ceil_div(g.tokens, p.rows_per_block);
  p.score_group = gs;
  p.keys_per_cycle = U / gs;
  p.score_cycles = ceil_div(g.tokens, p.keys_per_cycle);
  p.value_group = gv;
  p.rows_per_value_cycle = U / gv;
  p.key_chunks = ceil_div(g.tokens, U);
  p.v_tiles = ceil_div(g.head_dim, hw.policy.v_tile);
  return Schedule(std::move(p));
}

Schedule schedule_layer(const LayerSpec& layer, std::size_t timesteps,
                        const HardwareConfig& hw) {
  switch (layer.kind) {
    case LayerKind::kConv8bitInput:
      return schedule_sssc(layer, timesteps, hw);
    case LayerKind::kSpikeConv:
      return schedule_zsc(layer, timesteps, hw);
    case LayerKind::kSpikeLinear:
    case LayerKind::kHead:
      return schedule_wssl(layer, timesteps, hw);
    case LayerKind::kSpikeAttention:
      return schedule_stdp(layer, timesteps, hw);
    case LayerKind::kResidual:
      break;
  }
  throw UnsupportedLayerError("layer " + layer.name + " has no PE-module dataflow");
}

void dump_schedule(const Schedule& schedule, std::ostream& os) {
  schedule.for_each([&os](const WorkItem& item) {
    os << to_string(item.phase) << '\t' << item.cycle << '\t' << to_string(item.step)
       << '\t' << item.active_lanes() << '\t';
    bool first_group = true;
    for (const auto& d : item.dests) {
      bool any = false;
      for (auto a : d.lanes) any |= a >= 0;
      if (!any) continue;
      if (!first_group) os << ';';
      first_group = false;
      bool first = true;
      for (auto a : d.lanes) {
        if (a < 0) continue;
        if (!first) os << ',';
        first = false;
        os << a;
      }
      if (!d.final) os << '+';
    }
    os << '\n';
  });
}

}  // namespace vesta::dataflow
