#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace fcseg {

struct APConfig {
  double damping = 0.9;
  int max_iterations = 500;
  /// Iterations the exemplar set must stay unchanged to stop early.
  int convergence_window = 50;
  /// Self-similarity; empty = median of the pairwise similarities.
  std::optional<double> preference;

  /// Throws InvalidArgument unless 0.5 <= damping < 1, max_iterations >= 1
  /// and convergence_window >= 1.
  void validate() const;
};

struct APResult {
  /// Point indices of the exemplars, ascending.
  std::vector<std::size_t> exemplars;
  /// Exemplar point index chosen by every point.
  std::vector<std::size_t> assignment;
  bool converged = false;
  int iterations = 0;
  /// Self-similarity actually used.
  double preference = 0;
};

/// Responsibility/availability message passing on negative squared
/// Euclidean similarity. `points` is row-major, `dim` values per point.
/// A tiny fixed pseudo-random perturbation of the similarities breaks ties,
/// so results are deterministic. Errors: InvalidArgument (< 2 points, bad
/// shape or config).
APResult ap_cluster(std::span<const double> points, std::size_t dim, const APConfig& config = {});
APResult ap_cluster(const std::vector<std::vector<double>>& points, const APConfig& config = {});

}  // namespace fcseg
