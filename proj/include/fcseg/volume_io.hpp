#pragma once

#include <filesystem>

#include "fcseg/volume.hpp"

namespace fcseg {

enum class ElementType { UInt8, UInt16, Float32 };

const char* to_string(ElementType type);
ElementType element_type_from_string(const std::string& name);
std::size_t element_size(ElementType type);

/// Sidecar header of a raw volume file. Stored next to the data as
/// "<data path>.hdr" in key/value form:
///
///   dims = 5 4 3
///   spacing = 1 1 1
///   element_type = float32
///   endianness = little
///   order = x-fastest
struct VolumeHeader {
  Dims dims;
  Spacing spacing;
  ElementType element_type = ElementType::Float32;
  bool little_endian = true;
};

std::filesystem::path header_path(const std::filesystem::path& data_path);

VolumeHeader read_header(const std::filesystem::path& header_file);
void write_header(const VolumeHeader& header, const std::filesystem::path& header_file);

/// Decodes a raw file described by `header`. Errors: IoFailure, FileTooShort,
/// FileTooLong, DimsNonPositive, NonFiniteData.
Volume load_volume(const std::filesystem::path& path, const VolumeHeader& header);
/// Same, reading the header from header_path(path).
Volume load_volume(const std::filesystem::path& path);

/// Writes raw little-endian data plus the sidecar header. Integer element
/// types require integral values inside the type's range.
void save_volume(const Volume& volume, const std::filesystem::path& path,
                 ElementType type = ElementType::Float32);

void save_labels(const LabelMap& labels, const std::filesystem::path& path);
LabelMap load_labels(const std::filesystem::path& path);

void save_fuzzy(const FuzzyMap& map, const std::filesystem::path& path);

}  // namespace fcseg
