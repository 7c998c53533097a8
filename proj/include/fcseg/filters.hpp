#pragma once

#include <span>
#include <vector>

#include "fcseg/volume.hpp"

namespace fcseg {

/// Normalized Gaussian convolution: (G * (w v)) / (G * w), evaluated on a
/// block-averaged coarse grid and trilinearly interpolated back. `sigma_mm`
/// is the isotropic physical kernel width. Voxels whose smoothed weight is
/// negligible receive `fallback`.
std::vector<double> smooth_normalized(std::span<const double> values,
                                      std::span<const double> weights, const Grid& grid,
                                      double sigma_mm, double fallback = 0.0);

/// Linear-interpolated percentile (p in [0, 100]) of an ascending sample.
double percentile_sorted(std::span<const double> sorted, double p);

double mean_of(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator); 0 for n < 2.
double stddev_of(std::span<const double> values);

double fwhm_to_sigma(double fwhm);

}  // namespace fcseg
