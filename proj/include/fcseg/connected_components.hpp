#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fcseg/volume.hpp"

namespace fcseg {

struct Components {
  /// Component id per voxel, 0 outside the mask, ids start at 1.
  std::vector<std::uint32_t> id;
  /// sizes[k] = voxel count of component k (sizes[0] unused, kept 0).
  std::vector<std::size_t> sizes;

  std::size_t count() const { return sizes.empty() ? 0 : sizes.size() - 1; }
  /// Id of the largest component (smallest id on ties); 0 if none.
  std::uint32_t largest() const;
};

/// Labels connected non-zero voxels of `mask`. Ids follow first-voxel order.
Components label_components(std::span<const std::uint8_t> mask, const Grid& grid,
                            Adjacency adjacency = Adjacency::Six);

/// Connected regions of equal label value (every value, including 0).
Components label_regions(std::span<const std::uint8_t> labels, const Grid& grid,
                         Adjacency adjacency = Adjacency::Six);

/// Binary erosion with a discrete ball of `radius` voxels. Voxels outside
/// the grid count as 0. radius = 0 returns the mask.
std::vector<std::uint8_t> erode(std::span<const std::uint8_t> mask, const Grid& grid, int radius);

}  // namespace fcseg
