#include "vesta/tensor_io.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <iterator>

namespace vesta {

namespace {

constexpr std::array<char, 4> kMagic{'V', 'S', 'T', 'A'};

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFFu));
  }
}

class Reader {
 public:
  explicit Reader(std::span<const std::byte> bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::span<const std::byte> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw ParseError("tensor file truncated at byte " + std::to_string(pos_));
    }
  }

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
};

void put_header(std::vector<std::byte>& out, DType dtype, const Shape& shape) {
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_u32(out, kTensorFileVersion);
  put_u32(out, static_cast<std::uint32_t>(dtype));
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (std::size_t d : shape) {
    if (d > 0xFFFFFFFFu) {
      throw ShapeError("dimension does not fit u32: " + std::to_string(d));
    }
    put_u32(out, static_cast<std::uint32_t>(d));
  }
}

template <class T>
void put_dense(std::vector<std::byte>& out, const DenseTensor<T>& t) {
  for (T v : t.values()) {
    using U = std::make_unsigned_t<T>;
    const U u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out.push_back(static_cast<std::byte>((u >> (8 * i)) & 0xFFu));
    }
  }
}

template <class T>
DenseTensor<T> get_dense(Reader& in, Shape shape) {
  const std::size_t n = element_count(shape);
  auto raw = in.take(n * sizeof(T));
  std::vector<T> values(n);
  using U = std::make_unsigned_t<T>;
  for (std::size_t e = 0; e < n; ++e) {
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<U>(static_cast<U>(raw[e * sizeof(T) + i]) << (8 * i));
    }
    values[e] = static_cast<T>(u);
  }
  return DenseTensor<T>(std::move(shape), std::move(values));
}

}  // namespace

std::vector<std::byte> serialize_tensor(const AnyTensor& tensor) {
  std::vector<std::byte> out;
  std::visit(
      [&](const auto& t) {
        using V = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<V, SpikeTensor>) {
          put_header(out, DType::kBit, t.shape());
          const std::size_t nbytes = (t.size() + 7) / 8;
          for (std::size_t b = 0; b < nbytes; ++b) {
            const std::uint64_t word = t.words()[b / 8];
            out.push_back(static_cast<std::byte>((word >> (8 * (b % 8))) & 0xFFu));
          }
        } else if constexpr (std::is_same_v<V, ByteImage>) {
          put_header(out, DType::kU8, t.shape());
          put_dense(out, t);
        } else if constexpr (std::is_same_v<V, WeightMatrix>) {
          put_header(out, DType::kI8, t.shape());
          put_dense(out, t);
        } else {
          put_header(out, DType::kI32, t.shape());
          put_dense(out, t);
        }
      },
      tensor);
  return out;
}

AnyTensor deserialize_tensor(std::span<const std::byte> bytes) {
  Reader in(bytes);
  auto magic = in.take(4);
  if (std::memcmp(magic.data(), kMagic.data(), 4) != 0) {
    throw ParseError("tensor file: bad magic");
  }
  const std::uint32_t version = in.u32();
  if (version != kTensorFileVersion) {
    throw ParseError("tensor file: unsupported version " + std::to_string(version));
  }
  const std::uint32_t dtype = in.u32();
  const std::uint32_t rank = in.u32();
  Shape shape(rank);
  for (auto& d : shape) d = in.u32();

  AnyTensor result;
  switch (static_cast<DType>(dtype)) {
    case DType::kBit: {
      const std::size_t n = element_count(shape);
      auto raw = in.take((n + 7) / 8);
      std::vector<std::uint64_t> words((n + 63) / 64, 0);
      for (std::size_t b = 0; b < raw.size(); ++b) {
        words[b / 8] |= static_cast<std::uint64_t>(raw[b]) << (8 * (b % 8));
      }
      result = spike_tensor_from_words(std::move(shape), std::move(words));
      break;
    }
    case DType::kU8:
      result = get_dense<std::uint8_t>(in, std::move(shape));
      break;
    case DType::kI8:
      result = get_dense<std::int8_t>(in, std::move(shape));
      break;
    case DType::kI32:
      result = get_dense<std::int32_t>(in, std::move(shape));
      break;
    default:
      throw ParseError("tensor file: unknown dtype tag " + std::to_string(dtype));
  }
  if (!in.at_end()) {
    throw ParseError("tensor file: trailing bytes after payload");
  }
  return result;
}

void save_tensor(const std::filesystem::path& path, const AnyTensor& tensor) {
  const auto bytes = serialize_tensor(tensor);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

AnyTensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  return deserialize_tensor(std::as_bytes(std::span<const char>(raw)));
}

}  // namespace vesta
