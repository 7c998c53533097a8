#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fcseg/error.hpp"

namespace fcseg {

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Physical voxel size in mm.
struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  double voxel_volume() const { return sx * sy * sz; }
  friend bool operator==(const Spacing&, const Spacing&) = default;
};

struct VoxelCoord {
  int x = 0;
  int y = 0;
  int z = 0;

  friend auto operator<=>(const VoxelCoord&, const VoxelCoord&) = default;
};

enum class Adjacency { Six = 6, TwentySix = 26 };

Adjacency adjacency_from_int(int value);

/// Geometry shared by every voxel container. Linear index is x-fastest:
/// x + nx * (y + ny * z).
class Grid {
 public:
  Grid() = default;
  Grid(Dims dims, Spacing spacing);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::size_t size() const { return dims_.count(); }

  bool contains(const VoxelCoord& p) const {
    return p.x >= 0 && p.y >= 0 && p.z >= 0 && p.x < dims_.nx && p.y < dims_.ny &&
           p.z < dims_.nz;
  }
  std::size_t index(const VoxelCoord& p) const {
    return static_cast<std::size_t>(p.x) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(p.y) +
                static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(p.z));
  }
  VoxelCoord coord(std::size_t index) const {
    const auto nx = static_cast<std::size_t>(dims_.nx);
    const auto ny = static_cast<std::size_t>(dims_.ny);
    return {static_cast<int>(index % nx), static_cast<int>((index / nx) % ny),
            static_cast<int>(index / (nx * ny))};
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Dims dims_;
  Spacing spacing_;
};

void require_same_grid(const Grid& a, const Grid& b, const char* what);

/// Scalar 3-D image, 64-bit intensities, immutable after construction.
class Volume {
 public:
  Volume() = default;
  /// Throws DimMismatch if data.size() != grid.size(), NonFiniteData on NaN/Inf.
  Volume(Grid grid, std::vector<double> data);

  static Volume filled(Grid grid, double value);

  const Grid& grid() const { return grid_; }
  const Dims& dims() const { return grid_.dims(); }
  const Spacing& spacing() const { return grid_.spacing(); }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double at(const VoxelCoord& p) const;

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  Grid grid_;
  std::vector<double> data_;
};

/// C aligned channels with unique names.
class MultiContrastVolume {
 public:
  MultiContrastVolume() = default;
  MultiContrastVolume(std::vector<Volume> channels, std::vector<std::string> names);

  std::size_t channel_count() const { return channels_.size(); }
  const Volume& channel(std::size_t i) const { return channels_.at(i); }
  const std::vector<Volume>& channels() const { return channels_; }
  const std::vector<std::string>& names() const { return names_; }
  const Grid& grid() const { return channels_.front().grid(); }
  /// Index of the named channel, or -1.
  int find(const std::string& name) const;

 private:
  std::vector<Volume> channels_;
  std::vector<std::string> names_;
};

/// Discrete class labels; 0 is background.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(Grid grid, std::vector<std::uint8_t> labels);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return labels_.size(); }
  std::span<const std::uint8_t> labels() const { return labels_; }
  std::uint8_t operator[](std::size_t i) const { return labels_[i]; }
  std::uint8_t at(const VoxelCoord& p) const { return labels_[grid_.index(p)]; }

  /// Binary mask of voxels carrying `label`.
  std::vector<std::uint8_t> mask_of(std::uint8_t label) const;

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  Grid grid_;
  std::vector<std::uint8_t> labels_;
};

/// Per-voxel membership in [0, 1].
class FuzzyMap {
 public:
  FuzzyMap() = default;
  FuzzyMap(Grid grid, std::vector<double> membership);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return membership_.size(); }
  std::span<const double> membership() const { return membership_; }
  double operator[](std::size_t i) const { return membership_[i]; }
  double at(const VoxelCoord& p) const { return membership_[grid_.index(p)]; }

  friend bool operator==(const FuzzyMap&, const FuzzyMap&) = default;

 private:
  Grid grid_;
  std::vector<double> membership_;
};

/// Offsets of the adjacency neighborhood (never includes the origin).
std::span<const std::array<int, 3>> neighbor_offsets(Adjacency adjacency);

/// All in-bounds neighbors of p. Throws OutOfBounds if p is outside dims.
std::vector<VoxelCoord> neighbors(const VoxelCoord& p, const Dims& dims,
                                  Adjacency adjacency = Adjacency::Six);

/// Calls fn(neighbor_index, offset) for every in-bounds neighbor of the voxel
/// at `index`. Hot loop of the graph searches, hence header-inline.
template <class Fn>
inline void for_each_neighbor(const Grid& grid, std::size_t index, Adjacency adjacency,
                              Fn&& fn) {
  const auto& d = grid.dims();
  const auto nx = static_cast<std::ptrdiff_t>(d.nx);
  const auto nxy = nx * static_cast<std::ptrdiff_t>(d.ny);
  const VoxelCoord p = grid.coord(index);
  if (adjacency == Adjacency::Six) {
    const auto i = static_cast<std::ptrdiff_t>(index);
    if (p.x > 0) fn(static_cast<std::size_t>(i - 1), std::array<int, 3>{-1, 0, 0});
    if (p.x + 1 < d.nx) fn(static_cast<std::size_t>(i + 1), std::array<int, 3>{1, 0, 0});
    if (p.y > 0) fn(static_cast<std::size_t>(i - nx), std::array<int, 3>{0, -1, 0});
    if (p.y + 1 < d.ny) fn(static_cast<std::size_t>(i + nx), std::array<int, 3>{0, 1, 0});
    if (p.z > 0) fn(static_cast<std::size_t>(i - nxy), std::array<int, 3>{0, 0, -1});
    if (p.z + 1 < d.nz) fn(static_cast<std::size_t>(i + nxy), std::array<int, 3>{0, 0, 1});
    return;
  }
  for (const auto& off : neighbor_offsets(adjacency)) {
    const VoxelCoord q{p.x + off[0], p.y + off[1], p.z + off[2]};
    if (grid.contains(q)) fn(grid.index(q), off);
  }
}

}  // namespace fcseg
