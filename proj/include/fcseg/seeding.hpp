#pragma once

#include <optional>
#include <string>

#include "fcseg/affinity_propagation.hpp"
#include "fcseg/seeds.hpp"
#include "fcseg/volume.hpp"

namespace fcseg {

/// Tissue role of a channel, inferred from its name: "water"/"mri1",
/// "waterfat"/"water_fat"/"water-fat"/"mri2", "fat"/"mri3". Anything else is
/// treated like the water-fat contrast.
enum class ChannelRole { Water, WaterFat, Fat };
ChannelRole channel_role(const std::string& name);

struct APSeedOptions {
  APConfig ap;
  std::size_t max_samples = 2000;
  int seeds_per_class = 5;
  int min_component_size = 100;
};

struct SeedingResult {
  SeedSet seeds;
  /// AP: class of every voxel via its nearest exemplar. Morphology: class of
  /// the kept eroded components, background elsewhere.
  LabelMap class_map;
  std::optional<APResult> ap;
  /// AP: class id given to each exemplar (parallel to ap->exemplars).
  std::vector<std::uint8_t> exemplar_classes;
};

/// Samples voxels on a stratified spatial grid, clusters their per-channel
/// intensity vectors with AP, maps exemplars to fat / muscle / background by
/// channel-role intensity templates, and picks per class the voxels nearest
/// the class anchor whose 6-neighbours share the class and whose class
/// region has >= min_component_size voxels. Registry is ClassRegistry::thigh().
/// Errors: InvalidArgument, NoValidSeed (naming the class).
SeedingResult ap_seeds(const MultiContrastVolume& mcv, const APSeedOptions& options = {});

/// Closed intensity interval [lo, hi].
struct ThresholdInterval {
  double lo = 0;
  double hi = 0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct MorphologyOptions {
  ThresholdInterval fat;
  ThresholdInterval muscle;
  /// Absent: everything strictly below both tissue intervals.
  std::optional<ThresholdInterval> background;
  int erosion_radius = 1;
  int min_component_size = 100;
  int seeds_per_class = 5;
};

/// Threshold, ball erosion and connected components per class; seeds come
/// from the largest component (plus any other of >= min_component_size)
/// and have all six neighbours inside the same component.
/// Errors: InvalidArgument (overlapping intervals), NoValidSeed.
SeedingResult morphology_seeds(const Volume& channel, const MorphologyOptions& options);

}  // namespace fcseg
