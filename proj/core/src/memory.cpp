#include "vesta/memory.hpp"

#include <iomanip>
#include <sstream>

#include "vesta/error.hpp"

namespace vesta::memory {

std::string to_string(BankId id) {
  switch (id) {
    case BankId::kLW:
      return "LW";
    case BankId::kSW:
      return "SW";
    case BankId::kLI:
      return "LI";
    case BankId::kSI:
      return "SI";
    case BankId::kOut:
      return "OUT";
  }
  return "?";
}

std::optional<BankId> bank_from_string(const std::string& name) {
  for (BankId id : kAllBanks) {
    if (to_string(id) == name) return id;
  }
  return std::nullopt;
}

std::uint64_t default_capacity_bits(BankId id) {
  switch (id) {
    case BankId::kLW:
      return 64 * kBitsPerKiB;
    case BankId::kSW:
      return 8 * kBitsPerKiB;
    case BankId::kLI:
      return 16 * kBitsPerKiB;
    case BankId::kSI:
      return 8 * kBitsPerKiB;
    case BankId::kOut:
      return 11 * kBitsPerKiB;
  }
  return 0;
}

std::uint64_t MemoryMap::total_capacity_bits() const {
  std::uint64_t total = 0;
  for (const auto& b : banks_) total += b.capacity_bits;
  return total;
}

void MemoryMap::access(BankId id, AccessKind kind, std::uint64_t bits) {
  SramBank& b = banks_[static_cast<std::size_t>(id)];
  if (kind == AccessKind::kRead) {
    ++b.read_count;
    b.read_bits += bits;
  } else {
    ++b.write_count;
    b.write_bits += bits;
  }
}

void MemoryMap::allocate(BankId id, std::uint64_t bits) {
  SramBank& b = banks_[static_cast<std::size_t>(id)];
  if (bits > b.capacity_bits - b.occupancy_bits) {
    throw CapacityError("SRAM bank " + to_string(id) + ": allocating " +
                        std::to_string(bits) + " bits with " +
                        std::to_string(b.occupancy_bits) + "/" +
                        std::to_string(b.capacity_bits) + " in use");
  }
  b.occupancy_bits += bits;
  if (b.occupancy_bits > b.high_water_bits) b.high_water_bits = b.occupancy_bits;
}

void MemoryMap::release(BankId id, std::uint64_t bits) {
  SramBank& b = banks_[static_cast<std::size_t>(id)];
  if (bits > b.occupancy_bits) {
    throw MemoryError("SRAM bank " + to_string(id) + ": releasing " +
                      std::to_string(bits) + " bits, only " +
                      std::to_string(b.occupancy_bits) + " allocated");
  }
  b.occupancy_bits -= bits;
}

void MemoryMap::reset() {
  for (auto& b : banks_) {
    b.read_count = b.write_count = 0;
    b.read_bits = b.write_bits = 0;
    b.occupancy_bits = b.high_water_bits = 0;
  }
}

MemoryMap configure_banks(const BankSizes& sizes, std::uint64_t budget_bits) {
  MemoryMap map;
  map.budget_bits_ = budget_bits;
  std::uint64_t total = 0;
  for (BankId id : kAllBanks) {
    const auto i = static_cast<std::size_t>(id);
    const std::uint64_t cap = sizes.bits[i].value_or(default_capacity_bits(id));
    if (cap == 0) {
      throw ArgumentError("SRAM bank " + to_string(id) + ": capacity must be positive");
    }
    map.banks_[i].id = id;
    map.banks_[i].capacity_bits = cap;
    total += cap;
  }
  if (total > budget_bits) {
    throw BudgetError("SRAM split totals " + std::to_string(total) + " bits, " +
                      std::to_string(total - budget_bits) + " bits over the " +
                      std::to_string(budget_bits) + "-bit budget");
  }
  return map;
}

FootprintReport footprint_report(const MemoryMap& map,
                                 std::span<const BufferComparison> buffers) {
  FootprintReport r;
  for (const auto& b : map.banks()) {
    r.banks.push_back(BankFootprint{
        b.id, b.capacity_bits, b.high_water_bits, b.read_count, b.write_count,
        b.read_bits, b.write_bits,
        static_cast<std::int64_t>(b.capacity_bits) -
            static_cast<std::int64_t>(b.high_water_bits)});
  }
  r.total_capacity_bits = map.total_capacity_bits();
  r.budget_bits = map.budget_bits();
  r.budget_margin_bits = static_cast<std::int64_t>(r.budget_bits) -
                         static_cast<std::int64_t>(r.total_capacity_bits);
  r.buffers.assign(buffers.begin(), buffers.end());
  return r;
}

std::string FootprintReport::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(6) << "bank" << std::right << std::setw(12) << "capacity"
     << std::setw(12) << "high-water" << std::setw(14) << "read bits" << std::setw(14)
     << "write bits" << std::setw(12) << "margin" << '\n';
  for (const auto& b : banks) {
    os << std::left << std::setw(6) << to_string(b.id) << std::right << std::setw(12)
       << b.capacity_bits << std::setw(12) << b.high_water_bits << std::setw(14)
       << b.read_bits << std::setw(14) << b.write_bits << std::setw(12) << b.margin_bits
       << '\n';
  }
  os << "total " << total_capacity_bits << " of " << budget_bits << " bits (margin "
     << budget_margin_bits << ")\n";
  for (const auto& c : buffers) {
    os << c.name << ": proposed " << c.proposed_bits << " bits, naive " << c.naive_bits
       << " bits, ratio " << std::fixed << std::setprecision(4) << c.ratio()
       << std::defaultfloat << '\n';
  }
  return os.str();
}

}  // namespace vesta::memory
