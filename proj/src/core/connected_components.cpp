#include "fcseg/connected_components.hpp"

#include <array>

namespace fcseg {

namespace {

template <class Same>
Components flood(std::size_t n, const Grid& grid, Adjacency adjacency,
                 std::span<const std::uint8_t> include, Same&& same) {
  Components c;
  c.id.assign(n, 0);
  c.sizes.push_back(0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (!include[start] || c.id[start] != 0) continue;
    const auto label = static_cast<std::uint32_t>(c.sizes.size());
    std::size_t size = 0;
    c.id[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++size;
      for_each_neighbor(grid, p, adjacency, [&](std::size_t q, const std::array<int, 3>&) {
        if (include[q] && c.id[q] == 0 && same(p, q)) {
          c.id[q] = label;
          stack.push_back(q);
        }
      });
    }
    c.sizes.push_back(size);
  }
  return c;
}

}  // namespace

std::uint32_t Components::largest() const {
  std::uint32_t best = 0;
  for (std::size_t k = 1; k < sizes.size(); ++k)
    if (best == 0 || sizes[k] > sizes[best]) best = static_cast<std::uint32_t>(k);
  return best;
}

Components label_components(std::span<const std::uint8_t> mask, const Grid& grid,
                            Adjacency adjacency) {
  if (mask.size() != grid.size()) fail(ErrorCode::DimMismatch, "mask size does not match grid");
  return flood(mask.size(), grid, adjacency, mask, [](std::size_t, std::size_t) { return true; });
}

Components label_regions(std::span<const std::uint8_t> labels, const Grid& grid,
                         Adjacency adjacency) {
  if (labels.size() != grid.size()) fail(ErrorCode::DimMismatch, "label size does not match grid");
  const std::vector<std::uint8_t> all(labels.size(), 1);
  return flood(labels.size(), grid, adjacency, all,
               [&](std::size_t p, std::size_t q) { return labels[p] == labels[q]; });
}

std::vector<std::uint8_t> erode(std::span<const std::uint8_t> mask, const Grid& grid, int radius) {
  if (mask.size() != grid.size()) fail(ErrorCode::DimMismatch, "mask size does not match grid");
  if (radius < 0) fail(ErrorCode::InvalidArgument, "erosion radius must be >= 0");
  std::vector<std::uint8_t> out(mask.begin(), mask.end());
  if (radius == 0) return out;
  std::vector<std::array<int, 3>> ball;
  for (int dz = -radius; dz <= radius; ++dz)
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx)
        if ((dx || dy || dz) && dx * dx + dy * dy + dz * dz <= radius * radius)
          ball.push_back({dx, dy, dz});
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const VoxelCoord p = grid.coord(i);
    for (const auto& o : ball) {
      const VoxelCoord q{p.x + o[0], p.y + o[1], p.z + o[2]};
      if (!grid.contains(q) || !mask[grid.index(q)]) {
        out[i] = 0;
        break;
      }
    }
  }
  return out;
}

}  // namespace fcseg
