#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "vesta/tensor.hpp"

namespace vesta {

// On-disk tensor container.
//
//   offset  size  field
//   0       4     magic "VSTA"
//   4       4     version (u32, currently 1)
//   8       4     dtype tag (u32, see DType)
//   12      4     rank (u32)
//   16      4*r   dims (u32 each)
//   ...           payload
//
// All integers are little-endian. Bit payloads are ceil(n/8) bytes with
// element i at byte i/8, bit i%8. Integer payloads are packed element by
// element, little-endian.
enum class DType : std::uint32_t {
  kBit = 1,
  kU8 = 2,
  kI8 = 3,
  kI32 = 4,
};

inline constexpr std::uint32_t kTensorFileVersion = 1;

using AnyTensor = std::variant<SpikeTensor, ByteImage, WeightMatrix, AccumTensor>;

std::vector<std::byte> serialize_tensor(const AnyTensor& tensor);
AnyTensor deserialize_tensor(std::span<const std::byte> bytes);

void save_tensor(const std::filesystem::path& path, const AnyTensor& tensor);
AnyTensor load_tensor(const std::filesystem::path& path);

}  // namespace vesta
