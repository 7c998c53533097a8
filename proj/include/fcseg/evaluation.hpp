#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcseg/keyvalue.hpp"
#include "fcseg/seeds.hpp"
#include "fcseg/volume.hpp"

namespace fcseg {

/// 2|a & b| / (|a| + |b|); 1 when both masks are empty. Errors: DimMismatch.
double dice(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

struct SensSpec {
  /// Empty when the denominator is zero (undefined).
  std::optional<double> sensitivity;
  std::optional<double> specificity;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

SensSpec sensitivity_specificity(std::span<const std::uint8_t> pred,
                                 std::span<const std::uint8_t> truth);

/// Sample sd / |mean|. Errors: InvalidArgument (n < 2), DegenerateData (mean 0).
double cov(std::span<const double> values);

/// Voxel count of `class_id` times the voxel volume, in mm^3.
/// Errors: UnknownClass when the registry does not contain the id.
double quantify_volume(const LabelMap& labels, std::uint8_t class_id,
                       const ClassRegistry& registry = ClassRegistry::thigh());

/// Errors: InvalidArgument (length mismatch or n < 3), DegenerateData (zero variance).
double pearson(std::span<const double> x, std::span<const double> y);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
};

/// Least squares y = slope * x + intercept.
/// Errors: InvalidArgument (n < 3), DegenerateData (constant x).
LinearFit linear_regression(std::span<const double> x, std::span<const double> y);

/// One subject: per-slice class areas (mm^2, index = z) and total class volume.
struct SliceVolumeSample {
  std::vector<double> slice_areas;
  double volume = 0;
};

/// Regression of total volume on the area of slice `slice`.
LinearFit slice_volume_regression(std::span<const SliceVolumeSample> cohort, int slice);

/// Area (mm^2) of `class_id` in every axial slice.
std::vector<double> slice_areas(const LabelMap& labels, std::uint8_t class_id);

/// Per-class overlap metrics of a labeling against ground truth.
struct ClassMetrics {
  std::string name;
  std::uint8_t class_id = 0;
  double dice = 0;
  SensSpec sens_spec;
  double volume_mm3 = 0;
  double truth_volume_mm3 = 0;
};

std::vector<ClassMetrics> evaluate_labels(const LabelMap& pred, const LabelMap& truth,
                                          const ClassRegistry& registry,
                                          bool include_background = false);

/// CSV rows "image,class,metric,value"; a header line is written first.
class EvaluationReport {
 public:
  void add(const std::string& image, const std::string& cls, const std::string& metric,
           double value);
  void add_metrics(const std::string& image, std::span<const ClassMetrics> metrics);

  struct Row {
    std::string image, cls, metric;
    double value;
  };
  const std::vector<Row>& rows() const { return rows_; }

  void save_csv(const std::filesystem::path& path) const;
  /// Mean/std over images of every (class, metric): "<class>.<metric>.mean",
  /// "<class>.<metric>.std", "<class>.<metric>.n".
  KeyValueFile summary() const;

 private:
  std::vector<Row> rows_;
};

}  // namespace fcseg
