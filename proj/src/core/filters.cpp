#include "fcseg/filters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fcseg {

namespace {

struct AxisPlan {
  int fine = 1;     // voxels along the axis
  int factor = 1;   // block size of the coarse grid
  int coarse = 1;   // coarse cells
  double sigma = 0; // kernel sigma in coarse cells
};

AxisPlan plan_axis(int n, double spacing, double sigma_mm) {
  AxisPlan a;
  a.fine = n;
  const double sigma_vox = sigma_mm / spacing;
  a.factor = std::max(1, static_cast<int>(std::floor(sigma_vox / 2.0)));
  a.factor = std::min(a.factor, n);
  a.coarse = (n + a.factor - 1) / a.factor;
  a.sigma = sigma_vox / a.factor;
  return a;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (sigma < 1e-3) return {1.0};
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  const double s = std::accumulate(k.begin(), k.end(), 0.0);
  for (auto& v : k) v /= s;
  return k;
}

// In-place separable convolution along one axis with zero padding.
void convolve_axis(std::vector<double>& data, const int n[3], int axis,
                   const std::vector<double>& kernel) {
  if (kernel.size() == 1) return;
  const int radius = static_cast<int>(kernel.size() / 2);
  const std::size_t stride = axis == 0 ? 1 : axis == 1 ? n[0] : static_cast<std::size_t>(n[0]) * n[1];
  const int len = n[axis];
  const int o1 = axis == 0 ? 1 : 0, o2 = axis == 2 ? 1 : 2;
  const int m1 = n[o1], m2 = n[o2];
  const std::size_t s1 = o1 == 0 ? 1 : static_cast<std::size_t>(n[0]);
  const std::size_t s2 = o2 == 1 ? static_cast<std::size_t>(n[0]) : static_cast<std::size_t>(n[0]) * n[1];
  std::vector<double> line(len), out(len);
  for (int j = 0; j < m2; ++j)
    for (int i = 0; i < m1; ++i) {
      const std::size_t base = i * s1 + j * s2;
      for (int t = 0; t < len; ++t) line[t] = data[base + t * stride];
      for (int t = 0; t < len; ++t) {
        double acc = 0;
        const int lo = std::max(0, t - radius), hi = std::min(len - 1, t + radius);
        for (int u = lo; u <= hi; ++u) acc += kernel[u - t + radius] * line[u];
        out[t] = acc;
      }
      for (int t = 0; t < len; ++t) data[base + t * stride] = out[t];
    }
}

// Coarse cell centre in fine index units is (c + 0.5) * f - 0.5.
inline void interp_coord(double fine_index, const AxisPlan& a, int& c0, int& c1, double& t) {
  double c = (fine_index + 0.5) / a.factor - 0.5;
  c = std::clamp(c, 0.0, static_cast<double>(a.coarse - 1));
  c0 = static_cast<int>(std::floor(c));
  c1 = std::min(c0 + 1, a.coarse - 1);
  t = c - c0;
}

}  // namespace

std::vector<double> smooth_normalized(std::span<const double> values,
                                      std::span<const double> weights, const Grid& grid,
                                      double sigma_mm, double fallback) {
  const auto& d = grid.dims();
  const auto& s = grid.spacing();
  const AxisPlan ax[3] = {plan_axis(d.nx, s.sx, sigma_mm), plan_axis(d.ny, s.sy, sigma_mm),
                          plan_axis(d.nz, s.sz, sigma_mm)};
  const int cn[3] = {ax[0].coarse, ax[1].coarse, ax[2].coarse};
  const std::size_t ncoarse = static_cast<std::size_t>(cn[0]) * cn[1] * cn[2];
  std::vector<double> num(ncoarse, 0.0), den(ncoarse, 0.0);

  for (int z = 0; z < d.nz; ++z)
    for (int y = 0; y < d.ny; ++y)
      for (int x = 0; x < d.nx; ++x) {
        const std::size_t i = grid.index({x, y, z});
        const double w = weights[i];
        if (w == 0) continue;
        const std::size_t c = static_cast<std::size_t>(x / ax[0].factor) +
                              cn[0] * (static_cast<std::size_t>(y / ax[1].factor) +
                                       cn[1] * static_cast<std::size_t>(z / ax[2].factor));
        num[c] += w * values[i];
        den[c] += w;
      }

  for (int a = 0; a < 3; ++a) {
    const auto k = gaussian_kernel(ax[a].sigma);
    convolve_axis(num, cn, a, k);
    convolve_axis(den, cn, a, k);
  }

  double max_den = 0;
  for (double v : den) max_den = std::max(max_den, v);
  const double tiny = 1e-9 * std::max(max_den, 1e-300);

  std::vector<double> out(grid.size());
  for (int z = 0; z < d.nz; ++z) {
    int z0, z1;
    double tz;
    interp_coord(z, ax[2], z0, z1, tz);
    for (int y = 0; y < d.ny; ++y) {
      int y0, y1;
      double ty;
      interp_coord(y, ax[1], y0, y1, ty);
      for (int x = 0; x < d.nx; ++x) {
        int x0, x1;
        double tx;
        interp_coord(x, ax[0], x0, x1, tx);
        double n_acc = 0, d_acc = 0;
        for (int c = 0; c < 8; ++c) {
          const int cx = (c & 1) ? x1 : x0, cy = (c & 2) ? y1 : y0, cz = (c & 4) ? z1 : z0;
          const double w = ((c & 1) ? tx : 1 - tx) * ((c & 2) ? ty : 1 - ty) * ((c & 4) ? tz : 1 - tz);
          const std::size_t ci = cx + cn[0] * (static_cast<std::size_t>(cy) + cn[1] * static_cast<std::size_t>(cz));
          n_acc += w * num[ci];
          d_acc += w * den[ci];
        }
        out[grid.index({x, y, z})] = d_acc > tiny ? n_acc / d_acc : fallback;
      }
    }
  }
  return out;
}

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return sorted[lo] + t * (sorted[hi] - sorted[lo]);
}

double mean_of(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double stddev_of(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean_of(values);
  double ss = 0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double fwhm_to_sigma(double fwhm) { return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

}  // namespace fcseg
