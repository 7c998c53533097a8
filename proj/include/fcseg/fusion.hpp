#pragma once

#include <optional>

#include "fcseg/seeds.hpp"
#include "fcseg/volume.hpp"

namespace fcseg {

/// Which contrast segmentations exist: water-only (mri1), water-fat (mri2),
/// fat-only (mri3).
struct ContrastAvailability {
  bool mri1 = false;
  bool mri2 = false;
  bool mri3 = false;
  friend bool operator==(const ContrastAvailability&, const ContrastAvailability&) = default;
};

/// mri2 OR (mri1 AND mri3).
bool can_fuse(const ContrastAvailability& avail);

/// Per-contrast label maps; unset entries are unavailable.
struct ContrastLabels {
  std::optional<LabelMap> mri1;
  std::optional<LabelMap> mri2;
  std::optional<LabelMap> mri3;

  ContrastAvailability availability() const {
    return {mri1.has_value(), mri2.has_value(), mri3.has_value()};
  }
};

/// Voxelwise rule: a non-background class asserted by mri2 wins; otherwise a
/// non-background class on which mri1 and mri3 agree; otherwise background.
/// Errors: FusionPrecondition (can_fuse false), DimMismatch.
LabelMap decision_fuse(const ContrastLabels& labels,
                       std::uint8_t background = ClassRegistry::kBackground);

}  // namespace fcseg
