#include "vesta/pe_array.hpp"

#include <algorithm>
#include <string>

#include "vesta/error.hpp"

namespace vesta::pe {

void PEModuleConfig::validate() const {
  if (num_units == 0) throw ArgumentError("PE module: zero units");
  if (pes_per_unit == 0 || pes_per_unit > kMaxLanes) {
    throw ArgumentError("PE module: pes_per_unit must be in [1,8]");
  }
  if (accumulator_width <= 0 || accumulator_width > 32) {
    throw ArgumentError("PE module: accumulator width must be in [1,32]");
  }
  if (requant_width <= 0 || requant_width > 8) {
    throw ArgumentError("PE module: requant width must be in [1,8]");
  }
}

void check_width(std::int64_t v, int width, const char* where) {
  const std::int64_t lim = std::int64_t{1} << (width - 1);
  if (v < -lim || v >= lim) {
    throw WidthError(std::string(where) + ": value " + std::to_string(v) +
                     " exceeds " + std::to_string(width) + "-bit accumulator");
  }
}

LaneProducts unit_cycle(const UnitInput& in) {
  LaneProducts out{};
  for (std::size_t i = 0; i < kMaxLanes; ++i) {
    out[i] = pe_mux_multiply(in.weight, (in.spikes >> i) & 1u);
  }
  return out;
}

std::int32_t shift_sum_within_unit(const LaneProducts& lanes, const BitplaneTags& bitplane) {
  std::uint8_t seen = 0;
  std::int32_t sum = 0;
  for (std::size_t i = 0; i < kMaxLanes; ++i) {
    const std::uint8_t b = bitplane[i];
    if (b > 7 || (seen >> b) & 1u) {
      throw MappingError("shift_sum_within_unit: bitplane tags are not a permutation of 0..7");
    }
    seen |= static_cast<std::uint8_t>(1u << b);
    sum += static_cast<std::int32_t>(lanes[i]) * (std::int32_t{1} << b);
  }
  return sum;
}

std::vector<std::int32_t> adder_tree_reduce(std::span<const LaneProducts> unit_outputs,
                                            const AdderTreeMode& mode,
                                            const PEModuleConfig& config) {
  if (unit_outputs.size() != config.num_units) {
    throw MappingError("adder tree: " + std::to_string(unit_outputs.size()) +
                       " unit outputs for " + std::to_string(config.num_units) + " units");
  }
  const int width = config.accumulator_width;
  const std::size_t lanes = config.pes_per_unit;

  return std::visit(
      [&](const auto& m) -> std::vector<std::int32_t> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, SumAcrossUnits>) {
          if (m.group_size == 0 || config.num_units % m.group_size != 0) {
            throw MappingError("adder tree: group size " + std::to_string(m.group_size) +
                               " does not divide " + std::to_string(config.num_units));
          }
          const std::size_t groups = config.num_units / m.group_size;
          std::vector<std::int32_t> out(groups * lanes, 0);
          for (std::size_t g = 0; g < groups; ++g) {
            for (std::size_t l = 0; l < lanes; ++l) {
              std::int64_t sum = 0;
              for (std::size_t u = g * m.group_size; u < (g + 1) * m.group_size; ++u) {
                sum += unit_outputs[u][l];
              }
              check_width(sum, width, "adder tree");
              out[g * lanes + l] = static_cast<std::int32_t>(sum);
            }
          }
          return out;
        } else if constexpr (std::is_same_v<M, ShiftSumWithinUnit>) {
          if (lanes != kMaxLanes) {
            throw MappingError("adder tree: shift-sum needs 8 bitplane lanes per unit");
          }
          if (m.group_size == 0 || m.group_size > config.num_units) {
            throw MappingError("adder tree: shift-sum group size out of range");
          }
          const std::size_t groups = config.num_units / m.group_size;
          std::vector<std::int32_t> out(groups, 0);
          for (std::size_t g = 0; g < groups; ++g) {
            std::int64_t sum = 0;
            for (std::size_t u = g * m.group_size; u < (g + 1) * m.group_size; ++u) {
              sum += shift_sum_within_unit(unit_outputs[u], m.bitplane);
            }
            check_width(sum, width, "adder tree");
            out[g] = static_cast<std::int32_t>(sum);
          }
          return out;
        } else {
          std::vector<std::int32_t> out;
          out.reserve(config.num_units * lanes);
          for (const auto& u : unit_outputs) {
            for (std::size_t l = 0; l < lanes; ++l) out.push_back(u[l]);
          }
          return out;
        }
      },
      mode);
}

std::int8_t requantize_to_8bit(std::int32_t acc, int shift) {
  if (shift < 0 || shift > 31) {
    throw ArgumentError("requantize_to_8bit: shift " + std::to_string(shift) +
                        " outside [0,31]");
  }
  const std::int32_t shifted = acc >> shift;  // arithmetic shift since C++20
  return static_cast<std::int8_t>(std::clamp(shifted, -128, 127));
}

}  // namespace vesta::pe
