#include "vesta/execute.hpp"

#include <ostream>
#include <span>
#include <vector>

#include "vesta/error.hpp"
#include "vesta/pe_array.hpp"

namespace vesta::dataflow {

using memory::AccessKind;

namespace {

void expect_shape(const Shape& got, const Shape& want, const char* what) {
  if (got != want) {
    throw ShapeError(std::string("execute: ") + what + " has shape " + shape_to_string(got) +
                     ", schedule expects " + shape_to_string(want));
  }
}

template <class T>
const T& require(const T* p, const char* what) {
  if (p == nullptr) throw ArgumentError(std::string("execute: missing operand ") + what);
  return *p;
}

void apply_mem_ops(const WorkItem& item, memory::MemoryMap& mem, PhaseCounters& c) {
  for (const MemOp& op : item.mem_ops) {
    switch (op.kind) {
      case MemOpKind::kRead:
        mem.access(op.bank, AccessKind::kRead, op.bits);
        break;
      case MemOpKind::kWrite:
        mem.access(op.bank, AccessKind::kWrite, op.bits);
        if (op.tag == BufferTag::kPartialSum) c.partial_sum_sram_bits += op.bits;
        break;
      case MemOpKind::kAlloc:
        mem.allocate(op.bank, op.bits);
        break;
      case MemOpKind::kFree:
        mem.release(op.bank, op.bits);
        break;
    }
  }
}

// Requantize with the PE-side shifter, then the fused LIF per channel.
SpikeTensor fire_stage(const AccumTensor& acc, const TflifStage& stage,
                       golden::ChannelAxis axis) {
  stage.params.validate();
  const Shape& s = acc.shape();
  const std::size_t T = s[0];
  if (T != stage.params.timesteps) {
    throw ShapeError("execute: TFLIF expects T=" + std::to_string(stage.params.timesteps));
  }
  const std::size_t inner = acc.size() / T;
  SpikeTensor out(s);
  std::vector<std::int8_t> series(T);
  for (std::size_t i = 0; i < inner; ++i) {
    std::size_t ch = 0;
    switch (axis) {
      case golden::ChannelAxis::kFirst:
        ch = i / (inner / s[1]);
        break;
      case golden::ChannelAxis::kLast:
        ch = i % s.back();
        break;
      case golden::ChannelAxis::kHeads:
        ch = (i / (s[2] * s[3])) * s[3] + i % s[3];
        break;
    }
    for (std::size_t t = 0; t < T; ++t) {
      series[t] = pe::requantize_to_8bit(acc[t * inner + i], stage.requant_shift);
    }
    const auto r = golden::tflif_forward(series, stage.params, ch);
    for (std::size_t t = 0; t < T; ++t) out.set(t * inner + i, r.spikes[t] != 0);
  }
  return out;
}

}  // namespace

ExecResult execute(const Schedule& schedule, memory::MemoryMap& mem,
                   const ExecInputs& inputs, const ExecOptions& options) {
  const pe::PEModuleConfig& pe = schedule.pe();
  pe.validate();
  const std::size_t T = schedule.timesteps();
  const Phase phase = schedule.phase();
  const bool data = !std::holds_alternative<std::monostate>(inputs);

  // Operand views, filled according to the phase.
  const WeightMatrix* weights = nullptr;
  const SpikeTensor* lane_spikes = nullptr;
  const ByteImage* image = nullptr;
  const SpikeTensor* q = nullptr;
  const SpikeTensor* k = nullptr;
  const SpikeTensor* v = nullptr;
  AccumTensor scores_raw;
  int score_shift = schedule.layer().score_shift;

  ExecResult result;
  golden::ChannelAxis axis = golden::ChannelAxis::kFirst;

  if (data && inputs.index() != static_cast<std::size_t>(phase) + 1) {
    throw ArgumentError("execute: inputs do not match the " + to_string(phase) +
                        " schedule");
  }

  std::visit(
      [&](const auto& plan) {
        using P = std::decay_t<decltype(plan)>;
        if constexpr (std::is_same_v<P, ZscPlan>) {
          const auto& g = plan.geom;
          if (data) {
            const auto& in = std::get<ZscInputs>(inputs);
            lane_spikes = &require(in.spikes, "spikes");
            weights = &require(in.weights, "weights");
            expect_shape(lane_spikes->shape(), {T, g.c_in, g.height, g.width}, "input");
            expect_shape(weights->shape(), {g.c_out, g.c_in, g.kernel, g.kernel}, "weights");
            result.acc = AccumTensor({T, g.c_out, g.h_out(), g.w_out()});
          }
        } else if constexpr (std::is_same_v<P, SsscPlan>) {
          const auto& g = plan.geom;
          if (data) {
            const auto& in = std::get<SsscInputs>(inputs);
            image = &require(in.image, "image");
            weights = &require(in.weights, "weights");
            expect_shape(image->shape(), {g.c_in, g.height, g.width}, "image");
            expect_shape(weights->shape(), {g.c_out, g.c_in, g.kernel, g.kernel}, "weights");
            result.acc = AccumTensor({T, g.c_out, g.h_out(), g.w_out()});
          }
        } else if constexpr (std::is_same_v<P, WsslPlan>) {
          const auto& g = plan.geom;
          axis = golden::ChannelAxis::kLast;
          if (data) {
            const auto& in = std::get<WsslInputs>(inputs);
            lane_spikes = &require(in.spikes, "spikes");
            weights = &require(in.weights, "weights");
            expect_shape(lane_spikes->shape(), {T, g.tokens, g.d_in}, "input");
            expect_shape(weights->shape(), {g.d_out, g.d_in}, "weights");
            result.acc = AccumTensor({T, g.tokens, g.d_out});
          }
        } else {
          const auto& g = plan.geom;
          axis = golden::ChannelAxis::kHeads;
          if (data) {
            const auto& in = std::get<StdpInputs>(inputs);
            q = &require(in.q, "q");
            k = &require(in.k, "k");
            v = &require(in.v, "v");
            const Shape s{T, g.heads, g.tokens, g.head_dim};
            expect_shape(q->shape(), s, "q");
            expect_shape(k->shape(), s, "k");
            expect_shape(v->shape(), s, "v");
            scores_raw = AccumTensor({T, g.heads, g.tokens, g.tokens});
            result.acc = AccumTensor(s);
          }
        }
      },
      schedule.plan());

  PhaseCounters& c = result.counters;
  const std::uint64_t acc_w = static_cast<std::uint64_t>(pe.accumulator_width);
  std::vector<pe::LaneProducts> products(pe.num_units);

  schedule.for_each([&](const WorkItem& item) {
    ++c.cycles;
    c.lane_slots += pe.total_pes();
    if (item.weights_loaded) {
      ++c.weight_loads;
      c.stall_cycles += options.weight_load_latency;
    }
    apply_mem_ops(item, mem, c);

    std::uint64_t pending = 0;
    for (const auto& d : item.dests) {
      if (d.final) continue;
      for (auto a : d.lanes) pending += a >= 0;
    }
    c.accumulator_buffer_high_water_bits =
        std::max(c.accumulator_buffer_high_water_bits, pending * acc_w);

    const pe::BitplaneTags* planes = nullptr;
    if (const auto* m = std::get_if<pe::ShiftSumWithinUnit>(&item.mode)) planes = &m->bitplane;

    for (std::size_t u = 0; u < pe.num_units; ++u) {
      const UnitSlot& slot = item.units[u];
      pe::UnitInput in;
      if (slot.weight >= 0) {
        for (std::size_t l = 0; l < pe.pes_per_unit; ++l) {
          c.active_lanes += slot.lanes[l] >= 0;
        }
      }
      if (!data || slot.weight < 0) {
        products[u] = pe::LaneProducts{};
        continue;
      }
      const auto w = static_cast<std::size_t>(slot.weight);
      switch (item.step) {
        case Step::kMain:
          in.weight = (*weights)[w];
          break;
        case Step::kScore:
          in.weight = k->get(w) ? 1 : 0;
          break;
        case Step::kValue:
          in.weight = pe::requantize_to_8bit(scores_raw[w], score_shift);
          break;
      }
      for (std::size_t l = 0; l < pe.pes_per_unit; ++l) {
        const std::int32_t a = slot.lanes[l];
        if (a < 0) continue;
        const auto ai = static_cast<std::size_t>(a);
        bool bit = false;
        if (planes != nullptr) {
          bit = ((*image)[ai] >> (*planes)[l]) & 1u;
        } else if (item.step == Step::kScore) {
          bit = q->get(ai);
        } else if (item.step == Step::kValue) {
          bit = v->get(ai);
        } else {
          bit = lane_spikes->get(ai);
        }
        if (bit) {
          in.spikes = static_cast<std::uint8_t>(in.spikes | (1u << l));
          ++c.spike_lanes;
        }
      }
      products[u] = pe::unit_cycle(in);
    }
    if (!data) return;

    const std::vector<std::int32_t> sums = pe::adder_tree_reduce(products, item.mode, pe);
    AccumTensor& target = item.step == Step::kScore ? scores_raw : result.acc;
    const std::size_t per_group = planes != nullptr ? 1 : pe.pes_per_unit;
    for (std::size_t gi = 0; gi < item.dests.size(); ++gi) {
      const GroupDest& d = item.dests[gi];
      for (std::size_t l = 0; l < per_group; ++l) {
        const std::int32_t a = d.lanes[l];
        if (a < 0) continue;
        const std::int32_t val = sums[gi * per_group + l];
        std::int32_t& slot = target[static_cast<std::size_t>(a)];
        const std::int64_t next = std::int64_t{slot} + val;
        pe::check_width(next, pe.accumulator_width, "accumulator");
        slot = static_cast<std::int32_t>(next);
        if (options.arithmetic_trace != nullptr) {
          *options.arithmetic_trace << item.cycle << ' ' << a << ' ' << slot << '\n';
        }
      }
    }
  });

  if (!data) return result;

  if (phase == Phase::kSssc) {
    // The image is identical at every timestep; copy instead of recomputing.
    const std::size_t slice = result.acc.size() / T;
    auto vals = result.acc.values();
    for (std::size_t t = 1; t < T; ++t) {
      std::copy(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(slice),
                vals.begin() + static_cast<std::ptrdiff_t>(t * slice));
    }
  }
  if (phase == Phase::kStdp) {
    AccumTensor s(scores_raw.shape());
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = pe::requantize_to_8bit(scores_raw[i], score_shift);
    }
    result.scores = std::move(s);
  }
  if (options.tflif) {
    result.spikes = fire_stage(result.acc, *options.tflif, axis);
  }
  return result;
}

}  // namespace vesta::dataflow
