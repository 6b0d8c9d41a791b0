#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace vesta::pe {

// Upper bound on PEs per unit; one spike lane per PE.
inline constexpr std::size_t kMaxLanes = 8;

struct PEModuleConfig {
  std::size_t num_units = 512;
  std::size_t pes_per_unit = 8;
  int accumulator_width = 24;
  int requant_width = 8;

  std::size_t total_pes() const { return num_units * pes_per_unit; }
  void validate() const;
  bool operator==(const PEModuleConfig&) const = default;
};

using LaneProducts = std::array<std::int8_t, kMaxLanes>;
using BitplaneTags = std::array<std::uint8_t, kMaxLanes>;

inline constexpr BitplaneTags kIdentityBitplanes{0, 1, 2, 3, 4, 5, 6, 7};

// One unit's operands for a cycle: a shared weight and one spike per lane
// (bit i of `spikes` feeds lane i). Lane roles (timestep, token, bitplane)
// are carried by the adder tree mode and the schedule's destinations.
struct UnitInput {
  std::int8_t weight = 0;
  std::uint8_t spikes = 0;
};

// Lane i of every unit in a group of `group_size` consecutive units is
// summed; lanes are never mixed. Produces (num_units / group_size) x lanes
// values.
struct SumAcrossUnits {
  std::size_t group_size = 512;
};

// Each unit's lanes are bitplanes of one 8-bit input: lane i is shifted left
// by bitplane[i] and the lanes summed. Consecutive runs of `group_size` units
// are then summed into one value; trailing units that do not form a full
// group are ignored.
struct ShiftSumWithinUnit {
  std::size_t group_size = 1;
  BitplaneTags bitplane = kIdentityBitplanes;
};

// Every lane product forwarded unchanged (num_units x lanes values).
struct PassThrough {};

using AdderTreeMode = std::variant<SumAcrossUnits, ShiftSumWithinUnit, PassThrough>;

// Returns w when s is set, 0 otherwise. A multiplexer, not a multiplier.
constexpr std::int8_t pe_mux_multiply(std::int8_t w, bool s) {
  return s ? w : std::int8_t{0};
}

LaneProducts unit_cycle(const UnitInput& in);

// Throws MappingError when the bitplane tags are not a permutation of 0..7.
std::int32_t shift_sum_within_unit(const LaneProducts& lanes, const BitplaneTags& bitplane);

// Throws WidthError if any partial or final sum leaves accumulator_width bits
// and MappingError when the mode does not fit the unit count.
std::vector<std::int32_t> adder_tree_reduce(std::span<const LaneProducts> unit_outputs,
                                            const AdderTreeMode& mode,
                                            const PEModuleConfig& config);

// Saturating arithmetic right shift (rounds toward -inf) into [-128, 127].
std::int8_t requantize_to_8bit(std::int32_t acc, int shift);

// Throws WidthError when v does not fit a signed `width`-bit integer.
void check_width(std::int64_t v, int width, const char* where);

}  // namespace vesta::pe
