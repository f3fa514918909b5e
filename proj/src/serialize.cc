#include "fslab/serialize.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "fslab/errors.h"

namespace fslab {
namespace {

static_assert(std::endian::native == std::endian::little,
              "serializer assumes a little-endian host");

constexpr std::uint8_t kPaddingSame = 1;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError("network file truncated");
  return value;
}

void put_shape(std::ostream& out, const Shape& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  for (std::size_t d : s) put<std::uint64_t>(out, d);
}

Shape get_shape(std::istream& in) {
  const auto rank = get<std::uint32_t>(in);
  if (rank > 8) throw FormatError("tensor rank " + std::to_string(rank) + " too large");
  Shape s(rank);
  for (auto& d : s) {
    const auto v = get<std::uint64_t>(in);
    if (v == 0 || v > (1ULL << 32)) throw FormatError("bad tensor dimension");
    d = static_cast<std::size_t>(v);
  }
  return s;
}

void put_tensor(std::ostream& out, const Tensor& t) {
  put_shape(out, t.shape());
  out.write(reinterpret_cast<const char*>(t.ptr()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor get_tensor(std::istream& in) {
  Shape s = get_shape(in);
  const std::size_t n = shape_size(s);
  if (n > (1ULL << 28)) throw FormatError("tensor too large");
  std::vector<double> data(n);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw FormatError("network file truncated");
  return Tensor(std::move(s), std::move(data));
}

}  // namespace

void write_network(std::ostream& out, const Network& net) {
  out.write(kNetworkMagic, sizeof(kNetworkMagic));
  put<std::uint8_t>(out, kNetworkFormatVersion);
  put_shape(out, net.input_shape());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers().size()));
  for (const Layer& layer : net.layers()) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(kind_of(layer)));
    if (const auto* d = std::get_if<Dense>(&layer)) {
      put_tensor(out, d->weight());
      put_tensor(out, d->bias());
    } else if (const auto* c = std::get_if<Conv2d>(&layer)) {
      put<std::uint32_t>(out, 1);  // stride
      put<std::uint8_t>(out, kPaddingSame);
      put_tensor(out, c->weight());
      put_tensor(out, c->bias());
    } else if (const auto* p = std::get_if<MaxPool2d>(&layer)) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(p->pool()));
    }
  }
  if (!out) throw FormatError("failed writing network");
}

Network read_network(std::istream& in) {
  char magic[sizeof(kNetworkMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kNetworkMagic, sizeof(magic)) != 0) {
    throw FormatError("not a network file (bad magic)");
  }
  const auto version = get<std::uint8_t>(in);
  if (version != kNetworkFormatVersion) {
    throw FormatError("unsupported network format version " + std::to_string(version));
  }
  Shape input = get_shape(in);
  const auto count = get<std::uint32_t>(in);
  std::vector<Layer> layers;
  layers.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto kind = static_cast<LayerKind>(get<std::uint8_t>(in));
    switch (kind) {
      case LayerKind::kDense: {
        Tensor w = get_tensor(in);
        Tensor b = get_tensor(in);
        layers.emplace_back(Dense(std::move(w), std::move(b)));
        break;
      }
      case LayerKind::kConv2d: {
        if (get<std::uint32_t>(in) != 1) throw FormatError("conv2d: only stride 1 supported");
        if (get<std::uint8_t>(in) != kPaddingSame) throw FormatError("conv2d: only same padding");
        Tensor w = get_tensor(in);
        Tensor b = get_tensor(in);
        layers.emplace_back(Conv2d(std::move(w), std::move(b)));
        break;
      }
      case LayerKind::kMaxPool2d:
        layers.emplace_back(MaxPool2d(get<std::uint32_t>(in)));
        break;
      case LayerKind::kRelu:
        layers.emplace_back(Relu{});
        break;
      case LayerKind::kSigmoid:
        layers.emplace_back(Sigmoid{});
        break;
      default:
        throw FormatError("unknown layer kind " +
                          std::to_string(static_cast<int>(kind)));
    }
  }
  try {
    return Network(std::move(input), std::move(layers));
  } catch (const DimensionError& e) {
    throw FormatError(std::string("inconsistent network: ") + e.what());
  }
}

void save_network(const std::filesystem::path& path, const Network& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_network(out, net);
}

Network load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_network(in);
}

}  // namespace fslab
