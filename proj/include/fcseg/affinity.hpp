#pragma once

#include <span>
#include <string>
#include <vector>

#include "fcseg/keyvalue.hpp"
#include "fcseg/seeds.hpp"
#include "fcseg/volume.hpp"

namespace fcseg {

/// Intensity model of one class in one contrast: expected mean `m`,
/// homogeneity scale `sigma_psi` and object scale `sigma_phi`.
struct AffinityParams {
  double m = 0.0;
  double sigma_psi = 1.0;
  double sigma_phi = 1.0;

  /// Throws InvalidArgument unless both scales are > 0 and all fields finite.
  void validate() const;
  friend bool operator==(const AffinityParams&, const AffinityParams&) = default;
};

/// Per-contrast weights: non-negative, summing to 1.
struct ContrastWeights {
  std::vector<double> w;

  void validate() const;
  static ContrastWeights uniform(std::size_t count);
};

/// exp(-|f_p - f_q|^2 / (2 sigma_psi^2)).
double mu_homogeneity(double f_p, double f_q, double sigma_psi);

/// Per-voxel object response exp(-|f - m|^2 / (2 sigma_phi^2)).
double object_response(double f, double m, double sigma_phi);

/// min of the two voxels' object responses. sigma_phi is used for both
/// voxels.
double mu_object(double f_p, double f_q, const AffinityParams& params);

/// Adjacency gate scaled by physical distance: 1 for p == q,
/// (1 + d_min) / (1 + d) for adjacent voxels at distance d (d_min = smallest
/// spacing component, so nearest neighbours score 1), 0 otherwise.
double adjacency_factor(const VoxelCoord& p, const VoxelCoord& q, const Spacing& spacing,
                        Adjacency adjacency = Adjacency::Six);

/// mu_d * sqrt(mu_psi * mu_phi).
double compose_affinity(double mu_d, double mu_psi, double mu_phi);

/// Full affinity between two adjacent voxels of one channel. Throws
/// InvalidArgument when p and q are not adjacent.
double mu_combined(const VoxelCoord& p, const VoxelCoord& q, const Volume& channel,
                   const AffinityParams& params, Adjacency adjacency = Adjacency::Six);

/// Mean and standard deviation over the 3x3x3 neighbourhoods of the class's
/// seeds (sigma_psi = sigma_phi). The deviation is floored at 1e-6 of the
/// image intensity range, with a warning.
/// Errors: TooFewSeeds (< 2 seeds of the class), OutOfBounds.
AffinityParams estimate_params(const Volume& volume, const SeedSet& seeds, std::uint8_t class_id);

/// w_i = dsc_i / sum(dsc). Errors: InvalidArgument for values outside [0,1]
/// or an all-zero vector.
ContrastWeights compute_contrast_weights(std::span<const double> dsc_per_contrast);

void store_params(KeyValueFile& kv, const std::string& prefix, const AffinityParams& params);
AffinityParams load_params(const KeyValueFile& kv, const std::string& prefix);

}  // namespace fcseg
