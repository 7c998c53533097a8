#include "fcseg/volume_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "fcseg/keyvalue.hpp"

namespace fcseg {

const char* to_string(ElementType type) {
  switch (type) {
    case ElementType::UInt8: return "uint8";
    case ElementType::UInt16: return "uint16";
    case ElementType::Float32: return "float32";
  }
  return "?";
}

ElementType element_type_from_string(const std::string& name) {
  if (name == "uint8") return ElementType::UInt8;
  if (name == "uint16") return ElementType::UInt16;
  if (name == "float32") return ElementType::Float32;
  fail(ErrorCode::ConfigError, "unknown element_type '" + name + "'");
}

std::size_t element_size(ElementType type) {
  switch (type) {
    case ElementType::UInt8: return 1;
    case ElementType::UInt16: return 2;
    case ElementType::Float32: return 4;
  }
  return 0;
}

std::filesystem::path header_path(const std::filesystem::path& data_path) {
  auto p = data_path;
  p += ".hdr";
  return p;
}

VolumeHeader read_header(const std::filesystem::path& header_file) {
  const auto kv = KeyValueFile::load(header_file);
  VolumeHeader h;
  const auto dims = kv.get_ints("dims");
  const auto spacing = kv.get_doubles("spacing");
  if (dims.size() != 3 || spacing.size() != 3)
    fail(ErrorCode::ConfigError, header_file.string() + ": dims and spacing need 3 values");
  for (auto d : dims)
    if (d <= 0 || d > (1LL << 30))
      fail(ErrorCode::DimsNonPositive, header_file.string() + ": bad dims");
  h.dims = {static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2])};
  h.spacing = {spacing[0], spacing[1], spacing[2]};
  h.element_type = element_type_from_string(kv.get_string("element_type"));
  const auto endian = kv.get_string("endianness", "little");
  if (endian != "little" && endian != "big")
    fail(ErrorCode::ConfigError, "endianness must be little or big");
  h.little_endian = endian == "little";
  if (kv.get_string("order", "x-fastest") != "x-fastest")
    fail(ErrorCode::ConfigError, "only x-fastest order is supported");
  return h;
}

void write_header(const VolumeHeader& header, const std::filesystem::path& header_file) {
  KeyValueFile kv;
  kv.set("dims", std::vector<long long>{header.dims.nx, header.dims.ny, header.dims.nz});
  kv.set("spacing", std::vector<double>{header.spacing.sx, header.spacing.sy, header.spacing.sz});
  kv.set("element_type", to_string(header.element_type));
  kv.set("endianness", header.little_endian ? "little" : "big");
  kv.set("order", "x-fastest");
  kv.save(header_file);
}

namespace {

template <class T>
T decode(const unsigned char* bytes, bool little_endian) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, bytes, sizeof(T));
  const bool host_little = std::endian::native == std::endian::little;
  if (host_little != little_endian) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

template <class T>
void encode_le(T value, unsigned char* out) {
  std::memcpy(out, &value, sizeof(T));
  if constexpr (std::endian::native != std::endian::little) std::reverse(out, out + sizeof(T));
}

void write_raw(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

}  // namespace

Volume load_volume(const std::filesystem::path& path, const VolumeHeader& header) {
  const auto& d = header.dims;
  if (d.nx <= 0 || d.ny <= 0 || d.nz <= 0)
    fail(ErrorCode::DimsNonPositive, path.string() + ": dims must be positive");
  const Grid grid(d, header.spacing);

  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot read " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const std::size_t esize = element_size(header.element_type);
  const std::size_t expected = grid.size() * esize;
  if (bytes.size() < expected)
    fail(ErrorCode::FileTooShort, path.string() + ": " + std::to_string(bytes.size()) +
                                      " bytes, expected " + std::to_string(expected));
  if (bytes.size() > expected)
    fail(ErrorCode::FileTooLong, path.string() + ": " + std::to_string(bytes.size()) +
                                     " bytes, expected " + std::to_string(expected));

  std::vector<double> data(grid.size());
  const unsigned char* p = bytes.data();
  for (std::size_t i = 0; i < data.size(); ++i, p += esize) {
    switch (header.element_type) {
      case ElementType::UInt8: data[i] = *p; break;
      case ElementType::UInt16: data[i] = decode<std::uint16_t>(p, header.little_endian); break;
      case ElementType::Float32: {
        const float f = decode<float>(p, header.little_endian);
        if (!std::isfinite(f))
          fail(ErrorCode::NonFiniteData,
               path.string() + ": non-finite value at index " + std::to_string(i));
        data[i] = f;
        break;
      }
    }
  }
  return Volume(grid, std::move(data));
}

Volume load_volume(const std::filesystem::path& path) {
  return load_volume(path, read_header(header_path(path)));
}

void save_volume(const Volume& volume, const std::filesystem::path& path, ElementType type) {
  const std::size_t esize = element_size(type);
  std::vector<unsigned char> bytes(volume.size() * esize);
  unsigned char* out = bytes.data();
  for (double v : volume.data()) {
    switch (type) {
      case ElementType::UInt8:
        if (v < 0 || v > 255 || v != std::floor(v))
          fail(ErrorCode::InvalidArgument, "value not representable as uint8");
        *out = static_cast<unsigned char>(v);
        break;
      case ElementType::UInt16:
        if (v < 0 || v > 65535 || v != std::floor(v))
          fail(ErrorCode::InvalidArgument, "value not representable as uint16");
        encode_le(static_cast<std::uint16_t>(v), out);
        break;
      case ElementType::Float32:
        encode_le(static_cast<float>(v), out);
        break;
    }
    out += esize;
  }
  write_raw(bytes, path);
  write_header({volume.dims(), volume.spacing(), type, true}, header_path(path));
}

void save_labels(const LabelMap& labels, const std::filesystem::path& path) {
  std::vector<unsigned char> bytes(labels.labels().begin(), labels.labels().end());
  write_raw(bytes, path);
  write_header({labels.grid().dims(), labels.grid().spacing(), ElementType::UInt8, true},
               header_path(path));
}

LabelMap load_labels(const std::filesystem::path& path) {
  const auto header = read_header(header_path(path));
  if (header.element_type != ElementType::UInt8)
    fail(ErrorCode::ConfigError, path.string() + ": label maps must be uint8");
  const auto vol = load_volume(path, header);
  std::vector<std::uint8_t> labels(vol.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<std::uint8_t>(vol[i]);
  return LabelMap(vol.grid(), std::move(labels));
}

void save_fuzzy(const FuzzyMap& map, const std::filesystem::path& path) {
  save_volume(Volume(map.grid(), {map.membership().begin(), map.membership().end()}), path,
              ElementType::Float32);
}

}  // namespace fcseg
