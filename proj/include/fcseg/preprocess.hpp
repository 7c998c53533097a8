#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "fcseg/keyvalue.hpp"
#include "fcseg/volume.hpp"

namespace fcseg {

// ---------------------------------------------------------------------------
// Bias field (low-frequency multiplicative inhomogeneity)
// ---------------------------------------------------------------------------

struct BiasOptions {
  double fwhm_mm = 60.0;
  /// 1 = plain low-pass of foreground log-intensity. >1 first removes the
  /// per-tissue log mean (1-D k-means on log intensity) so tissue contrast
  /// does not leak into the field.
  int tissue_classes = 1;
  int iterations = 1;
};

/// Smooth, strictly positive field b with mean 1 over the foreground.
/// Corrected image is vol / b. Throws DegenerateData on an all-zero volume.
Volume estimate_bias(const Volume& vol, double fwhm_mm);
Volume estimate_bias(const Volume& vol, const BiasOptions& options);
Volume correct_bias(const Volume& vol, const Volume& bias);

// ---------------------------------------------------------------------------
// Edge-preserving denoising
// ---------------------------------------------------------------------------

/// Gradient-modulated diffusion over 6-neighbours with conduction
/// exp(-(dI/conductance)^2). Mass conserving; iterations = 0 is identity.
Volume denoise(const Volume& vol, int iterations, double conductance);

/// Robust noise sd from the median absolute forward difference along x.
double estimate_noise_sigma(const Volume& vol);

// ---------------------------------------------------------------------------
// Histogram-landmark intensity standardization
// ---------------------------------------------------------------------------

class IntensityHistogram {
 public:
  static constexpr int kDefaultBins = 1024;

  static IntensityHistogram from_volume(const Volume& vol, int bins = kDefaultBins);
  IntensityHistogram(double min_value, double max_value, std::vector<double> counts);

  double min_value() const { return min_; }
  double max_value() const { return max_; }
  int bins() const { return static_cast<int>(counts_.size()); }
  const std::vector<double>& counts() const { return counts_; }
  double bin_center(int b) const;
  double total() const;

  /// Percentile (0..100) of the part of the histogram at or above `threshold`,
  /// interpolated linearly inside bins.
  double percentile(double p, double threshold) const;

  /// Lower bound of the foreground: background peak (searched in the lowest
  /// quarter of the range) plus three background standard deviations, with
  /// the deviation taken from the peak's half width at half maximum.
  double foreground_threshold() const;
  /// Highest peak of the lightly smoothed histogram above the threshold.
  double foreground_mode() const;

 private:
  double min_ = 0;
  double max_ = 0;
  std::vector<double> counts_;
};

struct StandardizationModel {
  double s_min = 1.0;
  double s_max = 4095.0;
  /// Foreground percentiles used as landmarks, strictly increasing in (0,100).
  std::vector<double> landmark_percentiles;
  /// Mean standard-scale position of each percentile landmark.
  std::vector<double> trained_landmarks;
  /// Mean standard-scale position of the foreground mode.
  double trained_mode = 0.0;
  /// Bin count used when extracting landmarks from an image to be mapped.
  int histogram_bins = IntensityHistogram::kDefaultBins;

  bool trained() const { return !trained_landmarks.empty(); }

  KeyValueFile to_keyvalue() const;
  static StandardizationModel from_keyvalue(const KeyValueFile& kv);
  void save(const std::filesystem::path& path) const;
  static StandardizationModel load(const std::filesystem::path& path);
};

std::vector<double> default_landmark_percentiles();

/// Landmarks of one image: percentile landmarks then the foreground mode.
struct ImageLandmarks {
  double min_value = 0;
  double max_value = 0;
  std::vector<double> percentiles;
  double mode = 0;
};

ImageLandmarks extract_landmarks(const IntensityHistogram& hist,
                                 std::span<const double> percentiles);

/// Needs >= 2 histograms. Throws DegenerateData if an image has a single
/// intensity or the averaged positions are not strictly increasing inside
/// (s_min, s_max).
StandardizationModel train_standardization(std::span<const IntensityHistogram> histograms,
                                           std::vector<double> percentiles =
                                               default_landmark_percentiles(),
                                           double s_min = 1.0, double s_max = 4095.0);

/// Monotone piecewise-linear map of vol onto [s_min, s_max].
/// Throws Untrained for a default-constructed model.
Volume apply_standardization(const Volume& vol, const StandardizationModel& model);

// ---------------------------------------------------------------------------
// Ordered pipeline
// ---------------------------------------------------------------------------

struct PreprocessOptions {
  bool bias_enabled = true;
  BiasOptions bias;
  bool denoise_enabled = true;
  int denoise_iterations = 10;
  /// <= 0 selects 3 x estimate_noise_sigma() per image.
  double conductance = 0.0;
  bool standardize_enabled = true;
  double s_min = 1.0;
  double s_max = 4095.0;
  int histogram_bins = IntensityHistogram::kDefaultBins;
};

/// Bias correction then denoising, the part of the chain applied per image
/// before standardization can be trained.
Volume clean_volume(const Volume& vol, const PreprocessOptions& options);

/// Runs bias -> denoise -> standardize over a cohort of one contrast. The
/// standardization model is trained on the cleaned cohort (or `model` is used
/// when already trained) and returned through `model`.
std::vector<Volume> preprocess_cohort(std::span<const Volume> cohort,
                                      const PreprocessOptions& options,
                                      StandardizationModel& model);

}  // namespace fcseg
