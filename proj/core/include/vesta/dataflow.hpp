#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "vesta/memory.hpp"
#include "vesta/network.hpp"
#include "vesta/pe_array.hpp"

namespace vesta::dataflow {

enum class Phase { kZsc = 0, kSssc, kWssl, kStdp };

inline constexpr std::size_t kNumPhases = 4;
inline constexpr std::array<Phase, kNumPhases> kAllPhases{Phase::kZsc, Phase::kSssc,
                                                          Phase::kWssl, Phase::kStdp};

std::string to_string(Phase phase);

// STDP items are either score (QK^T) or score-times-V cycles.
enum class Step { kMain, kScore, kValue };

std::string to_string(Step step);

struct MappingPolicy {
  // Lanes of a unit carry tokens_per_unit tokens (or output pixels for ZSC)
  // times T timesteps; the product has to match pes_per_unit.
  std::size_t tokens_per_unit = 2;
  // Units cooperating on one input channel in ZSC; equals kernel area.
  std::size_t zsc_group = 4;
  // V columns held per unit in the STDP value step.
  std::size_t v_tile = 8;

  // Throws PolicyError when the policy does not fit the PE module.
  void validate(const pe::PEModuleConfig& pe) const;
  bool operator==(const MappingPolicy&) const = default;
};

struct HardwareConfig {
  pe::PEModuleConfig pe;
  MappingPolicy policy;
  memory::BankSizes banks;
  std::uint64_t sram_budget_bits = memory::kDefaultBudgetBits;
  // Stall cycles charged whenever an item loads a new stationary weight set.
  std::uint32_t weight_load_latency = 0;
};

enum class MemOpKind { kRead, kWrite, kAlloc, kFree };

enum class BufferTag {
  kWeights,
  kSpikes,
  kPixels,
  kScores,
  kValueTile,
  kPartialSum,
  kOutputSpikes,
  kLogits,
  kStaging,
};

std::string to_string(BufferTag tag);

struct MemOp {
  memory::BankId bank = memory::BankId::kLW;
  MemOpKind kind = MemOpKind::kRead;
  std::uint64_t bits = 0;
  BufferTag tag = BufferTag::kSpikes;
};

// Flat operand addresses; -1 marks an idle unit or lane.
struct UnitSlot {
  std::int32_t weight = -1;
  std::array<std::int32_t, pe::kMaxLanes> lanes{-1, -1, -1, -1, -1, -1, -1, -1};
};

// Where each adder-tree output of one group goes. `final` is false while the
// value is still a partial sum waiting for more input chunks.
struct GroupDest {
  std::array<std::int32_t, pe::kMaxLanes> lanes{-1, -1, -1, -1, -1, -1, -1, -1};
  bool final = true;
};

// One PE-module cycle.
struct WorkItem {
  Phase phase = Phase::kZsc;
  Step step = Step::kMain;
  std::uint64_t cycle = 0;
  pe::AdderTreeMode mode;
  bool weights_loaded = false;  // stationary weights differ from previous item
  std::vector<UnitSlot> units;  // one entry per PE unit
  std::vector<GroupDest> dests;
  std::vector<MemOp> mem_ops;

  std::size_t active_lanes() const;
};

struct PhaseCounters {
  std::uint64_t cycles = 0;
  std::uint64_t stall_cycles = 0;
  std::uint64_t lane_slots = 0;    // cycles x total PEs
  std::uint64_t active_lanes = 0;  // lanes with an assigned operand pair
  std::uint64_t spike_lanes = 0;   // active lanes whose spike was 1 (data runs only)
  std::uint64_t weight_loads = 0;
  std::uint64_t accumulator_buffer_high_water_bits = 0;
  std::uint64_t partial_sum_sram_bits = 0;  // pre-TFLIF sums written to any bank

  // One active PE-cycle counts as two synaptic operations.
  std::uint64_t sops() const { return 2 * active_lanes; }
  double utilization() const;
  PhaseCounters& operator+=(const PhaseCounters& o);
  bool operator==(const PhaseCounters&) const = default;
};

// High-water occupancy each bank reaches while the schedule runs.
struct BufferPrediction {
  std::array<std::uint64_t, memory::kNumBanks> bank_bits{};
  std::uint64_t accumulator_buffer_bits = 0;

  std::uint64_t bank(memory::BankId id) const {
    return bank_bits[static_cast<std::size_t>(id)];
  }
};

struct PlanBase {
  golden::LayerSpec layer;
  std::size_t timesteps = kDefaultTimesteps;
  pe::PEModuleConfig pe;
  MappingPolicy policy;
};

struct ZscPlan : PlanBase {
  golden::ConvGeometry geom;
  std::size_t channels_per_cycle = 0;
  std::size_t chunks = 0;
  std::size_t pixel_pairs = 0;
};

struct SsscPlan : PlanBase {
  golden::ConvGeometry geom;
  std::size_t units_per_pixel = 0;
  std::size_t pixels_per_cycle = 0;
  std::size_t batches = 0;
};

struct WsslPlan : PlanBase {
  golden::LinearGeometry geom;
  std::size_t sections = 0;
  std::size_t token_groups = 0;
};

struct StdpPlan : PlanBase {
  golden::AttentionGeometry geom;
  std::size_t rows_per_block = 0;    // query rows per score item (one per lane)
  std::size_t row_blocks = 0;
  std::size_t score_group = 0;       // units per key
  std::size_t keys_per_cycle = 0;
  std::size_t score_cycles = 0;      // per (head, block, t)
  std::size_t value_group = 0;       // units per query row
  std::size_t rows_per_value_cycle = 0;
  std::size_t key_chunks = 0;
  std::size_t v_tiles = 0;

  std::size_t rows_in_block(std::size_t b) const;
  std::size_t value_cycles(std::size_t rows) const;
};

using Plan = std::variant<ZscPlan, SsscPlan, WsslPlan, StdpPlan>;

class Schedule {
 public:
  explicit Schedule(Plan plan) : plan_(std::move(plan)) {}

  Phase phase() const;
  const Plan& plan() const { return plan_; }
  const golden::LayerSpec& layer() const;
  const pe::PEModuleConfig& pe() const;
  std::size_t timesteps() const;

  // Closed forms; the enumerated item stream matches them exactly.
  std::uint64_t predicted_cycles() const;
  std::uint64_t active_lane_ops() const;
  std::uint64_t weight_loads() const;
  PhaseCounters predicted_counters(std::uint32_t weight_load_latency = 0) const;
  BufferPrediction predicted_buffers() const;
  // Proposed buffer against the straightforward mapping of the same layer.
  memory::BufferComparison buffer_comparison() const;

  // Streams the items in cycle order. The item passed to `fn` is reused
  // between calls.
  void for_each(const std::function<void(const WorkItem&)>& fn) const;
  std::vector<WorkItem> materialize() const;

 private:
  Plan plan_;
};

// pre: 2x2 stride-2 spike convolution, 1-bit input.
// Throws UnsupportedLayerError on other kernels, PolicyError on lane misfit.
Schedule schedule_zsc(const golden::LayerSpec& layer, std::size_t timesteps,
                      const HardwareConfig& hw);
// pre: the 8-bit input convolution. Throws SchedulingError for other layers.
Schedule schedule_sssc(const golden::LayerSpec& layer, std::size_t timesteps,
                       const HardwareConfig& hw);
// Spike linear and classifier head layers.
Schedule schedule_wssl(const golden::LayerSpec& layer, std::size_t timesteps,
                       const HardwareConfig& hw);
Schedule schedule_stdp(const golden::LayerSpec& layer, std::size_t timesteps,
                       const HardwareConfig& hw);

// Picks the dataflow for a compute layer; throws UnsupportedLayerError for
// residual layers.
Schedule schedule_layer(const golden::LayerSpec& layer, std::size_t timesteps,
                        const HardwareConfig& hw);

// One record per item: phase, cycle, step, active lanes, destinations.
void dump_schedule(const Schedule& schedule, std::ostream& os);

}  // namespace vesta::dataflow
