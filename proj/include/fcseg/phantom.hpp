#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fcseg/keyvalue.hpp"
#include "fcseg/volume.hpp"

namespace fcseg {

/// Two tapered legs along z over an air background. Each leg is a fat ring
/// around a muscle core with a small bone disc (labeled background) inside.
/// Intensity defaults are arbitrary declared values, chosen only to keep the
/// usual ordering: fat bright in the fat-only and water-fat contrasts, muscle
/// bright in water-only.
struct PhantomConfig {
  Dims dims{128, 128, 40};
  Spacing spacing{1.0, 1.0, 1.0};

  double leg_separation_mm = 64.0;
  double leg_radius_mm = 28.0;
  double muscle_radius_mm = 20.0;
  double bone_radius_mm = 5.0;
  /// Relative radius shrink from the first to the last slice.
  double taper = 0.15;

  std::vector<std::string> channel_names{"water", "waterfat", "fat"};
  /// means[label][channel] for labels 0 (background), 1 (fat), 2 (muscle).
  std::vector<std::vector<double>> means{{10, 10, 10}, {250, 900, 800}, {600, 450, 200}};

  /// Additive Gaussian noise sd, same for every channel.
  double noise_sigma = 0.0;
  /// Bias field spans [1 - A/2, 1 + A/2].
  double bias_amplitude = 0.0;
  double bias_fwhm_mm = 150.0;
  /// Per-channel scanner gain and offset; empty = 1 and 0.
  std::vector<double> gain;
  std::vector<double> offset;

  std::uint64_t seed = 1;

  /// Throws InvalidArgument for malformed values and geometry that does not
  /// fit inside the grid.
  void validate() const;

  /// Smallest, over class pairs, of the largest per-channel mean difference.
  double class_separation() const;

  KeyValueFile to_keyvalue() const;
  static PhantomConfig from_keyvalue(const KeyValueFile& kv);
};

struct Phantom {
  MultiContrastVolume image;
  LabelMap truth;
  PhantomConfig config;
};

/// Deterministic for a given config (seed included).
Phantom generate(const PhantomConfig& config);

/// Exact continuous volume (mm^3) of a class of the phantom geometry, slice by
/// slice. Labels 0 (background incl. bone), 1 (fat), 2 (muscle).
double analytic_class_volume(const PhantomConfig& config, std::uint8_t label);

struct CohortConfig {
  PhantomConfig base;
  int count = 10;
  std::uint64_t master_seed = 2024;
  /// Gain drawn uniformly in [1 - gain_jitter, 1 + gain_jitter] per channel.
  double gain_jitter = 0.0;
  /// Offset drawn uniformly in [-offset_jitter, offset_jitter] per channel.
  double offset_jitter = 0.0;
  /// Radius scale drawn in [1 - j, 1 + j]; muscle fraction and taper vary too.
  double geometry_jitter = 0.0;
};

/// Member configs; member seeds come from the master seed by splitmix64.
std::vector<PhantomConfig> cohort_configs(const CohortConfig& config);

/// Writes every member (channels as float32, truth as uint8, config as
/// key/value) to `dir` plus a manifest.txt listing them. Returns the manifest path.
std::filesystem::path write_cohort(const CohortConfig& config, const std::filesystem::path& dir);

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace fcseg
