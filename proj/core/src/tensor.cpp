#include "vesta/tensor.hpp"

#include <bit>
#include <numeric>
#include <sstream>

namespace vesta {

namespace {

std::size_t words_for(std::size_t bits) {
  return (bits + SpikeTensor::kWordBits - 1) / SpikeTensor::kWordBits;
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  if (shape.empty()) {
    return 0;
  }
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t flat_index(const Shape& shape, std::initializer_list<std::size_t> idx) {
  if (idx.size() != shape.size()) {
    throw ShapeError("flat_index: rank " + std::to_string(idx.size()) +
                     " index into shape " + shape_to_string(shape));
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : idx) {
    if (i >= shape[axis]) {
      throw ShapeError("flat_index: index out of bounds on axis " +
                       std::to_string(axis) + " of " + shape_to_string(shape));
    }
    flat = flat * shape[axis] + i;
    ++axis;
  }
  return flat;
}

SpikeTensor::SpikeTensor(Shape shape)
    : shape_(std::move(shape)),
      size_(element_count(shape_)),
      words_(words_for(size_), 0) {}

std::size_t SpikeTensor::popcount() const {
  std::size_t n = 0;
  for (std::uint64_t w : words_) {
    n += static_cast<std::size_t>(std::popcount(w));
  }
  return n;
}

SpikeTensor SpikeTensor::reshaped(Shape shape) const {
  if (element_count(shape) != size_) {
    throw ShapeError("reshape " + shape_to_string(shape_) + " -> " +
                     shape_to_string(shape) + " changes element count");
  }
  SpikeTensor out = *this;
  out.shape_ = std::move(shape);
  return out;
}

SpikeTensor spike_tensor_from_words(Shape shape, std::vector<std::uint64_t> words) {
  SpikeTensor out;
  out.size_ = element_count(shape);
  if (words.size() != words_for(out.size_)) {
    throw ShapeError("spike payload has " + std::to_string(words.size()) +
                     " words, shape " + shape_to_string(shape) + " needs " +
                     std::to_string(words_for(out.size_)));
  }
  const std::size_t tail = out.size_ % SpikeTensor::kWordBits;
  if (tail != 0 && (words.back() >> tail) != 0) {
    throw ShapeError("spike payload has bits set past the last element");
  }
  out.shape_ = std::move(shape);
  out.words_ = std::move(words);
  return out;
}

SpikeTensor pack_spikes(std::span<const std::uint8_t> flat_bits, Shape shape) {
  if (shape.empty()) {
    throw ShapeError("pack_spikes: shape needs a leading timestep axis");
  }
  if (flat_bits.size() != element_count(shape)) {
    throw ShapeError("pack_spikes: " + std::to_string(flat_bits.size()) +
                     " bits for shape " + shape_to_string(shape));
  }
  SpikeTensor out(std::move(shape));
  for (std::size_t i = 0; i < flat_bits.size(); ++i) {
    if (flat_bits[i] > 1) {
      throw ArgumentError("pack_spikes: element " + std::to_string(i) +
                          " is not 0 or 1");
    }
    if (flat_bits[i]) out.set(i, true);
  }
  return out;
}

std::vector<std::uint8_t> unpack_spikes(const SpikeTensor& spikes) {
  std::vector<std::uint8_t> out(spikes.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = spikes.get(i) ? 1 : 0;
  }
  return out;
}

SpikeTensor extract_bitplane(const ByteImage& img, int bit) {
  if (bit < 0 || bit > 7) {
    throw ArgumentError("extract_bitplane: bit index " + std::to_string(bit) +
                        " outside 0..7");
  }
  if (img.rank() != 3) {
    throw ShapeError("extract_bitplane: image must be [C,H,W], got " +
                     shape_to_string(img.shape()));
  }
  Shape shape{1};
  shape.insert(shape.end(), img.shape().begin(), img.shape().end());
  SpikeTensor plane(std::move(shape));
  for (std::size_t i = 0; i < img.size(); ++i) {
    if ((img[i] >> bit) & 1u) plane.set(i, true);
  }
  return plane;
}

double spike_density(const SpikeTensor& spikes) {
  if (spikes.size() == 0) {
    return 0.0;
  }
  return static_cast<double>(spikes.popcount()) /
         static_cast<double>(spikes.size());
}

}  // namespace vesta
