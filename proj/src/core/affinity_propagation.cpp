#include "fcseg/affinity_propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fcseg/error.hpp"

namespace fcseg {

void APConfig::validate() const {
  if (!(damping >= 0.5 && damping < 1.0))
    fail(ErrorCode::InvalidArgument, "AP damping must lie in [0.5, 1)");
  if (max_iterations < 1) fail(ErrorCode::InvalidArgument, "AP max_iterations must be >= 1");
  if (convergence_window < 1) fail(ErrorCode::InvalidArgument, "AP convergence_window must be >= 1");
  if (preference && !std::isfinite(*preference))
    fail(ErrorCode::InvalidArgument, "AP preference must be finite");
}

namespace {

std::vector<std::size_t> nearest_exemplar(const std::vector<double>& s, std::size_t n,
                                          const std::vector<std::size_t>& exemplars) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = exemplars.front();
    for (std::size_t k : exemplars) {
      if (k == i) {
        best = i;
        break;
      }
      if (s[i * n + k] > s[i * n + best]) best = k;
    }
    out[i] = best;
  }
  return out;
}

}  // namespace

APResult ap_cluster(std::span<const double> points, std::size_t dim, const APConfig& config) {
  config.validate();
  if (dim == 0 || points.size() % dim != 0)
    fail(ErrorCode::InvalidArgument, "point buffer is not a multiple of the dimension");
  const std::size_t n = points.size() / dim;
  if (n < 2) fail(ErrorCode::InvalidArgument, "AP needs at least 2 points");
  for (double v : points)
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteData, "AP input contains non-finite values");

  std::vector<double> s(n * n);
  double scale = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      double d2 = 0;
      for (std::size_t c = 0; c < dim; ++c) {
        const double d = points[i * dim + c] - points[k * dim + c];
        d2 += d * d;
      }
      s[i * n + k] = -d2;
      scale = std::max(scale, d2);
    }

  APResult result;
  if (scale == 0) {
    result.exemplars = {0};
    result.assignment.assign(n, 0);
    result.converged = true;
    return result;
  }

  double preference;
  if (config.preference) {
    preference = *config.preference;
  } else {
    std::vector<double> off;
    off.reserve(n * (n - 1));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        if (i != k) off.push_back(s[i * n + k]);
    const std::size_t mid = off.size() / 2;
    std::nth_element(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(mid), off.end());
    preference = off[mid];
    if (off.size() % 2 == 0) {
      const double lower = *std::max_element(off.begin(), off.begin() + static_cast<std::ptrdiff_t>(mid));
      preference = 0.5 * (preference + lower);
    }
  }
  for (std::size_t i = 0; i < n; ++i) s[i * n + i] = preference;
  result.preference = preference;

  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double jitter = 1e-12 * std::max(scale, std::abs(preference));
  for (double& v : s) v += jitter * unit(rng);

  const double lambda = config.damping;
  std::vector<double> r(n * n, 0.0), a(n * n, 0.0), colsum(n);
  std::vector<std::size_t> current, previous;
  int stable = 0;
  int it = 0;
  for (; it < config.max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      const double* si = &s[i * n];
      const double* ai = &a[i * n];
      double* ri = &r[i * n];
      double max1 = -std::numeric_limits<double>::infinity(), max2 = max1;
      std::size_t arg = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double v = ai[k] + si[k];
        if (v > max1) {
          max2 = max1;
          max1 = v;
          arg = k;
        } else if (v > max2) {
          max2 = v;
        }
      }
      for (std::size_t k = 0; k < n; ++k) {
        const double fresh = si[k] - (k == arg ? max2 : max1);
        ri[k] = lambda * ri[k] + (1 - lambda) * fresh;
      }
    }
    std::fill(colsum.begin(), colsum.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* ri = &r[i * n];
      for (std::size_t k = 0; k < n; ++k)
        if (k != i) colsum[k] += std::max(0.0, ri[k]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double* ri = &r[i * n];
      double* ai = &a[i * n];
      for (std::size_t k = 0; k < n; ++k) {
        const double fresh = k == i ? colsum[k]
                                    : std::min(0.0, r[k * n + k] + colsum[k] - std::max(0.0, ri[k]));
        ai[k] = lambda * ai[k] + (1 - lambda) * fresh;
      }
    }
    current.clear();
    for (std::size_t k = 0; k < n; ++k)
      if (a[k * n + k] + r[k * n + k] > 0) current.push_back(k);
    if (!current.empty() && current == previous) {
      if (++stable >= config.convergence_window) {
        result.converged = true;
        ++it;
        break;
      }
    } else {
      stable = 0;
    }
    previous = current;
  }
  result.iterations = it;

  if (current.empty()) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (a[k * n + k] + r[k * n + k] > a[best * n + best] + r[best * n + best]) best = k;
    current = {best};
    result.converged = false;
  }
  result.exemplars = current;
  result.assignment = nearest_exemplar(s, n, current);
  return result;
}

APResult ap_cluster(const std::vector<std::vector<double>>& points, const APConfig& config) {
  if (points.empty()) fail(ErrorCode::InvalidArgument, "AP needs at least 2 points");
  const std::size_t dim = points.front().size();
  std::vector<double> flat;
  flat.reserve(points.size() * dim);
  for (const auto& p : points) {
    if (p.size() != dim) fail(ErrorCode::InvalidArgument, "AP points differ in dimension");
    flat.insert(flat.end(), p.begin(), p.end());
  }
  return ap_cluster(flat, dim, config);
}

}  // namespace fcseg
