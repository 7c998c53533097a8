#include "fcseg/volume.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace fcseg {

namespace {

std::vector<std::array<int, 3>> make_offsets(bool full) {
  std::vector<std::array<int, 3>> out;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int l1 = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (l1 == 0) continue;
        if (full || l1 == 1) out.push_back({dx, dy, dz});
      }
  return out;
}

const std::vector<std::array<int, 3>> kOffsets6 = make_offsets(false);
const std::vector<std::array<int, 3>> kOffsets26 = make_offsets(true);

std::string dims_str(const Dims& d) {
  return std::to_string(d.nx) + "x" + std::to_string(d.ny) + "x" + std::to_string(d.nz);
}

}  // namespace

Adjacency adjacency_from_int(int value) {
  if (value == 6) return Adjacency::Six;
  if (value == 26) return Adjacency::TwentySix;
  fail(ErrorCode::InvalidArgument, "adjacency must be 6 or 26, got " + std::to_string(value));
}

Grid::Grid(Dims dims, Spacing spacing) : dims_(dims), spacing_(spacing) {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0)
    fail(ErrorCode::DimsNonPositive, "dims " + dims_str(dims));
  if (!(spacing.sx > 0 && spacing.sy > 0 && spacing.sz > 0) || !std::isfinite(spacing.sx) ||
      !std::isfinite(spacing.sy) || !std::isfinite(spacing.sz))
    fail(ErrorCode::InvalidArgument, "spacing components must be finite and > 0");
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a.dims() == b.dims()))
    fail(ErrorCode::DimMismatch,
         std::string(what) + ": " + dims_str(a.dims()) + " vs " + dims_str(b.dims()));
}

Volume::Volume(Grid grid, std::vector<double> data)
    : grid_(std::move(grid)), data_(std::move(data)) {
  if (data_.size() != grid_.size())
    fail(ErrorCode::DimMismatch, "volume data has " + std::to_string(data_.size()) +
                                     " values, dims " + dims_str(grid_.dims()) + " need " +
                                     std::to_string(grid_.size()));
  for (std::size_t i = 0; i < data_.size(); ++i)
    if (!std::isfinite(data_[i]))
      fail(ErrorCode::NonFiniteData, "non-finite intensity at index " + std::to_string(i));
}

Volume Volume::filled(Grid grid, double value) {
  const auto n = grid.size();
  return Volume(std::move(grid), std::vector<double>(n, value));
}

double Volume::at(const VoxelCoord& p) const {
  if (!grid_.contains(p)) fail(ErrorCode::OutOfBounds, "voxel outside volume");
  return data_[grid_.index(p)];
}

MultiContrastVolume::MultiContrastVolume(std::vector<Volume> channels,
                                         std::vector<std::string> names)
    : channels_(std::move(channels)), names_(std::move(names)) {
  if (channels_.empty()) fail(ErrorCode::InvalidArgument, "need at least one channel");
  if (names_.size() != channels_.size())
    fail(ErrorCode::InvalidArgument, "channel name count does not match channel count");
  std::set<std::string> unique(names_.begin(), names_.end());
  if (unique.size() != names_.size()) fail(ErrorCode::InvalidArgument, "duplicate channel name");
  for (const auto& ch : channels_) {
    if (!(ch.grid() == channels_.front().grid()))
      fail(ErrorCode::DimMismatch, "channels must share dims and spacing");
  }
}

int MultiContrastVolume::find(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
}

LabelMap::LabelMap(Grid grid, std::vector<std::uint8_t> labels)
    : grid_(std::move(grid)), labels_(std::move(labels)) {
  if (labels_.size() != grid_.size())
    fail(ErrorCode::DimMismatch, "label map size does not match dims " + dims_str(grid_.dims()));
}

std::vector<std::uint8_t> LabelMap::mask_of(std::uint8_t label) const {
  std::vector<std::uint8_t> mask(labels_.size());
  std::transform(labels_.begin(), labels_.end(), mask.begin(),
                 [label](std::uint8_t l) { return static_cast<std::uint8_t>(l == label); });
  return mask;
}

FuzzyMap::FuzzyMap(Grid grid, std::vector<double> membership)
    : grid_(std::move(grid)), membership_(std::move(membership)) {
  if (membership_.size() != grid_.size())
    fail(ErrorCode::DimMismatch, "fuzzy map size does not match dims " + dims_str(grid_.dims()));
  for (double m : membership_)
    if (!(m >= 0.0 && m <= 1.0)) fail(ErrorCode::InvalidArgument, "membership outside [0,1]");
}

std::span<const std::array<int, 3>> neighbor_offsets(Adjacency adjacency) {
  return adjacency == Adjacency::Six ? std::span<const std::array<int, 3>>(kOffsets6)
                                     : std::span<const std::array<int, 3>>(kOffsets26);
}

std::vector<VoxelCoord> neighbors(const VoxelCoord& p, const Dims& dims, Adjacency adjacency) {
  const Grid grid(dims, Spacing{});
  if (!grid.contains(p)) fail(ErrorCode::OutOfBounds, "voxel outside volume");
  std::vector<VoxelCoord> out;
  for (const auto& off : neighbor_offsets(adjacency)) {
    const VoxelCoord q{p.x + off[0], p.y + off[1], p.z + off[2]};
    if (grid.contains(q)) out.push_back(q);
  }
  return out;
}

}  // namespace fcseg
