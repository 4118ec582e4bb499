#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "iqlphase/errors.hpp"
#include "iqlphase/neuralnet.hpp"

namespace iqlphase {

namespace {

constexpr std::array<char, 8> kMagic{'I', 'Q', 'L', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_le(std::ostream& os, T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw FormatError("checkpoint truncated");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const NetParams& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open checkpoint for writing: " + path.string());
  const NetShape& shape = params.shape();
  os.write(kMagic.data(), kMagic.size());
  write_le<std::uint32_t>(os, kVersion);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(shape.input_dim));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(shape.output_dim));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(shape.hidden.size()));
  for (int h : shape.hidden) write_le<std::uint32_t>(os, static_cast<std::uint32_t>(h));
  for (int l = 0; l < shape.layer_count(); ++l) {
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(shape.layer_outputs(l)));
    write_le<std::uint32_t>(os, static_cast<std::uint32_t>(shape.layer_inputs(l)));
  }
  for (double v : params.flat()) write_le<double>(os, v);
  if (!os) throw Error("failed writing checkpoint: " + path.string());
}

NetParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint: " + path.string());
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("not an iqlphase checkpoint: " + path.string());
  }
  if (read_le<std::uint32_t>(is) != kVersion) throw FormatError("unsupported checkpoint version");
  NetShape shape;
  shape.input_dim = static_cast<int>(read_le<std::uint32_t>(is));
  shape.output_dim = static_cast<int>(read_le<std::uint32_t>(is));
  shape.hidden.resize(read_le<std::uint32_t>(is));
  for (int& h : shape.hidden) h = static_cast<int>(read_le<std::uint32_t>(is));
  for (int l = 0; l < shape.layer_count(); ++l) {
    const auto rows = static_cast<int>(read_le<std::uint32_t>(is));
    const auto cols = static_cast<int>(read_le<std::uint32_t>(is));
    if (rows != shape.layer_outputs(l) || cols != shape.layer_inputs(l)) {
      throw FormatError("checkpoint layer table inconsistent with its shape header");
    }
  }
  NetParams params(shape);
  for (double& v : params.flat()) v = read_le<double>(is);
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in checkpoint");
  return params;
}

}  // namespace iqlphase
