#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vesta::memory {

// Large/small weight SRAM, large/small input SRAM, output SRAM.
enum class BankId { kLW = 0, kSW, kLI, kSI, kOut };

inline constexpr std::size_t kNumBanks = 5;
inline constexpr std::array<BankId, kNumBanks> kAllBanks{
    BankId::kLW, BankId::kSW, BankId::kLI, BankId::kSI, BankId::kOut};

std::string to_string(BankId id);
std::optional<BankId> bank_from_string(const std::string& name);

inline constexpr std::uint64_t kBitsPerKiB = 8 * 1024;
inline constexpr std::uint64_t kDefaultBudgetBits = 107 * kBitsPerKiB;

enum class AccessKind { kRead, kWrite };

struct SramBank {
  BankId id = BankId::kLW;
  std::uint64_t capacity_bits = 0;
  std::uint32_t word_width = 64;
  std::uint64_t read_count = 0;
  std::uint64_t write_count = 0;
  std::uint64_t read_bits = 0;
  std::uint64_t write_bits = 0;
  std::uint64_t occupancy_bits = 0;
  std::uint64_t high_water_bits = 0;
};

// Requested capacity per bank in bits; unset entries take the default split
// (LW 64 KiB, SW 8 KiB, LI 16 KiB, SI 8 KiB, OUT 11 KiB).
struct BankSizes {
  std::array<std::optional<std::uint64_t>, kNumBanks> bits{};

  BankSizes& set(BankId id, std::uint64_t capacity_bits) {
    bits[static_cast<std::size_t>(id)] = capacity_bits;
    return *this;
  }
};

std::uint64_t default_capacity_bits(BankId id);

/// Capacity and traffic model of the on-chip SRAM banks.
///
/// Traffic (access) and occupancy (allocate/release) are tracked separately:
/// streamed operands count as traffic only, while buffers a dataflow holds
/// across cycles are allocated and show up in the high-water marks.
class MemoryMap {
 public:
  const SramBank& bank(BankId id) const { return banks_[static_cast<std::size_t>(id)]; }
  std::span<const SramBank> banks() const { return banks_; }
  std::uint64_t budget_bits() const { return budget_bits_; }
  std::uint64_t total_capacity_bits() const;

  void access(BankId id, AccessKind kind, std::uint64_t bits);
  // Throws CapacityError naming the bank when occupancy would exceed capacity.
  void allocate(BankId id, std::uint64_t bits);
  void release(BankId id, std::uint64_t bits);

  // Zeroes counters, occupancy and high-water marks; keeps capacities.
  void reset();

 private:
  friend MemoryMap configure_banks(const BankSizes&, std::uint64_t);

  std::array<SramBank, kNumBanks> banks_{};
  std::uint64_t budget_bits_ = kDefaultBudgetBits;
};

// Throws ArgumentError for zero-sized banks and BudgetError (with the
// overage) when the capacities exceed the budget.
MemoryMap configure_banks(const BankSizes& sizes = {},
                          std::uint64_t budget_bits = kDefaultBudgetBits);

// A buffer the proposed dataflow needs versus the buffer a straightforward
// mapping of the same layer would need.
struct BufferComparison {
  std::string name;
  std::uint64_t proposed_bits = 0;
  std::uint64_t naive_bits = 0;

  double ratio() const {
    return naive_bits == 0 ? 0.0
                           : static_cast<double>(proposed_bits) /
                                 static_cast<double>(naive_bits);
  }
};

struct BankFootprint {
  BankId id = BankId::kLW;
  std::uint64_t capacity_bits = 0;
  std::uint64_t high_water_bits = 0;
  std::uint64_t read_count = 0;
  std::uint64_t write_count = 0;
  std::uint64_t read_bits = 0;
  std::uint64_t write_bits = 0;
  std::int64_t margin_bits = 0;
};

struct FootprintReport {
  std::vector<BankFootprint> banks;
  std::uint64_t total_capacity_bits = 0;
  std::uint64_t budget_bits = 0;
  std::int64_t budget_margin_bits = 0;
  std::vector<BufferComparison> buffers;

  std::string to_text() const;
};

FootprintReport footprint_report(const MemoryMap& map,
                                 std::span<const BufferComparison> buffers = {});

}  // namespace vesta::memory
