#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vesta/error.hpp"

namespace vesta {

using Shape = std::vector<std::size_t>;

inline constexpr std::size_t kDefaultTimesteps = 4;

std::size_t element_count(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Row-major flat offset of a multi-index. Throws ShapeError on rank or bound
// mismatch; intended for tests and cold paths.
std::size_t flat_index(const Shape& shape, std::initializer_list<std::size_t> idx);

/// Bit-packed binary activation tensor with a leading timestep axis.
///
/// Element i (row-major) is stored in word i / 64 at bit i % 64, so the
/// little-endian byte image of the word array is identical on every platform.
/// Bits past the last element are always zero, which keeps equality and
/// popcount purely word-wise.
class SpikeTensor {
 public:
  static constexpr std::size_t kWordBits = 64;

  SpikeTensor() = default;
  explicit SpikeTensor(Shape shape);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t timesteps() const { return shape_.empty() ? 0 : shape_.front(); }
  std::size_t size() const { return size_; }

  bool get(std::size_t flat) const {
    return (words_[flat / kWordBits] >> (flat % kWordBits)) & 1u;
  }
  void set(std::size_t flat, bool value) {
    const std::uint64_t mask = std::uint64_t{1} << (flat % kWordBits);
    if (value) {
      words_[flat / kWordBits] |= mask;
    } else {
      words_[flat / kWordBits] &= ~mask;
    }
  }

  std::span<const std::uint64_t> words() const { return words_; }
  std::size_t popcount() const;

  // Same payload under a different shape with equal element count.
  SpikeTensor reshaped(Shape shape) const;

  bool operator==(const SpikeTensor&) const = default;

 private:
  friend SpikeTensor spike_tensor_from_words(Shape, std::vector<std::uint64_t>);

  Shape shape_;
  std::size_t size_ = 0;
  std::vector<std::uint64_t> words_;
};

// Builds a tensor from an already packed word array (deserialization).
SpikeTensor spike_tensor_from_words(Shape shape, std::vector<std::uint64_t> words);

/// Dense integer tensor, row-major.
template <class T>
class DenseTensor {
 public:
  using value_type = T;

  DenseTensor() = default;
  explicit DenseTensor(Shape shape)
      : shape_(std::move(shape)), data_(element_count(shape_)) {}
  DenseTensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
      throw ShapeError("dense tensor: " + std::to_string(data_.size()) +
                       " values for shape " + shape_to_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  T operator[](std::size_t i) const { return data_[i]; }
  T& operator[](std::size_t i) { return data_[i]; }

  std::span<const T> values() const { return data_; }
  std::span<T> values() { return data_; }

  bool operator==(const DenseTensor&) const = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

// [C,H,W] unsigned pixels; only the first network layer consumes these.
using ByteImage = DenseTensor<std::uint8_t>;
// Signed 8-bit weights for conv [Co,Ci,k,k] and linear [Dout,Din] roles.
using WeightMatrix = DenseTensor<std::int8_t>;
// Pre-TFLIF partial sums, leading T axis when timestep-resolved.
using AccumTensor = DenseTensor<std::int32_t>;

SpikeTensor pack_spikes(std::span<const std::uint8_t> flat_bits, Shape shape);
std::vector<std::uint8_t> unpack_spikes(const SpikeTensor& spikes);

// Binary plane (img >> bit) & 1, returned as a single-timestep tensor of
// shape [1,C,H,W].
SpikeTensor extract_bitplane(const ByteImage& img, int bit);

double spike_density(const SpikeTensor& spikes);

}  // namespace vesta
