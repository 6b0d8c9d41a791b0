#pragma once

#include <iosfwd>
#include <optional>
#include <variant>

#include "vesta/dataflow.hpp"
#include "vesta/memory.hpp"
#include "vesta/tensor.hpp"
#include "vesta/tflif.hpp"

namespace vesta::dataflow {

// Operands are borrowed; they must outlive the execute() call.
struct ZscInputs {
  const SpikeTensor* spikes = nullptr;   // [T, C_in, H, W]
  const WeightMatrix* weights = nullptr; // [C_out, C_in, 2, 2]
};

struct SsscInputs {
  const ByteImage* image = nullptr;      // [C_in, H, W]
  const WeightMatrix* weights = nullptr; // [C_out, C_in, k, k]
};

struct WsslInputs {
  const SpikeTensor* spikes = nullptr;   // [T, N, D_in]
  const WeightMatrix* weights = nullptr; // [D_out, D_in]
};

struct StdpInputs {
  const SpikeTensor* q = nullptr;  // [T, heads, N, d_h]
  const SpikeTensor* k = nullptr;
  const SpikeTensor* v = nullptr;
};

// monostate walks the schedule for counters and memory traffic only.
using ExecInputs =
    std::variant<std::monostate, ZscInputs, SsscInputs, WsslInputs, StdpInputs>;

struct TflifStage {
  int requant_shift = 0;
  golden::TFLIFParams params;
};

struct ExecOptions {
  std::optional<TflifStage> tflif;
  // When set, every adder-tree result is written as "cycle dest value".
  std::ostream* arithmetic_trace = nullptr;
  std::uint32_t weight_load_latency = 0;
};

struct ExecResult {
  // Pre-TFLIF accumulators. ZSC/SSSC: [T, C_out, H', W']; WSSL: [T, N, D_out];
  // STDP: [T, heads, N, d_h] score-times-V sums.
  AccumTensor acc;
  std::optional<SpikeTensor> spikes;
  std::optional<AccumTensor> scores;  // STDP: requantized scores [T, heads, N, N]
  PhaseCounters counters;
};

// Drives the PE module through every item of the schedule. Throws
// CapacityError (naming the bank) when a held buffer overflows its bank,
// WidthError on accumulator overflow and ShapeError on operand mismatch.
ExecResult execute(const Schedule& schedule, memory::MemoryMap& mem,
                   const ExecInputs& inputs, const ExecOptions& options = {});

}  // namespace vesta::dataflow
