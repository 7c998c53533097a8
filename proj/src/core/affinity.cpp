#include "fcseg/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fcseg/filters.hpp"

namespace fcseg {

void AffinityParams::validate() const {
  if (!std::isfinite(m) || !std::isfinite(sigma_psi) || !std::isfinite(sigma_phi))
    fail(ErrorCode::InvalidArgument, "affinity params must be finite");
  if (!(sigma_psi > 0) || !(sigma_phi > 0))
    fail(ErrorCode::InvalidArgument, "affinity sigmas must be > 0");
}

void ContrastWeights::validate() const {
  if (w.empty()) fail(ErrorCode::InvalidArgument, "contrast weights are empty");
  double sum = 0;
  for (double v : w) {
    if (!(v >= 0) || !std::isfinite(v))
      fail(ErrorCode::InvalidArgument, "contrast weights must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12) fail(ErrorCode::InvalidArgument, "contrast weights must sum to 1");
}

ContrastWeights ContrastWeights::uniform(std::size_t count) {
  return {std::vector<double>(count, 1.0 / static_cast<double>(count))};
}

double mu_homogeneity(double f_p, double f_q, double sigma_psi) {
  if (!(sigma_psi > 0)) fail(ErrorCode::InvalidArgument, "sigma_psi must be > 0");
  const double d = f_p - f_q;
  return std::exp(-(d * d) / (2.0 * sigma_psi * sigma_psi));
}

double object_response(double f, double m, double sigma_phi) {
  const double d = f - m;
  return std::exp(-(d * d) / (2.0 * sigma_phi * sigma_phi));
}

double mu_object(double f_p, double f_q, const AffinityParams& params) {
  params.validate();
  return std::min(object_response(f_p, params.m, params.sigma_phi),
                  object_response(f_q, params.m, params.sigma_phi));
}

double adjacency_factor(const VoxelCoord& p, const VoxelCoord& q, const Spacing& spacing,
                        Adjacency adjacency) {
  if (p == q) return 1.0;
  const int dx = std::abs(p.x - q.x), dy = std::abs(p.y - q.y), dz = std::abs(p.z - q.z);
  if (std::max({dx, dy, dz}) > 1) return 0.0;
  if (adjacency == Adjacency::Six && dx + dy + dz != 1) return 0.0;
  const double d = std::sqrt(dx * dx * spacing.sx * spacing.sx + dy * dy * spacing.sy * spacing.sy +
                             dz * dz * spacing.sz * spacing.sz);
  const double d_min = std::min({spacing.sx, spacing.sy, spacing.sz});
  return (1.0 + d_min) / (1.0 + d);
}

double compose_affinity(double mu_d, double mu_psi, double mu_phi) {
  return mu_d * std::sqrt(mu_psi * mu_phi);
}

double mu_combined(const VoxelCoord& p, const VoxelCoord& q, const Volume& channel,
                   const AffinityParams& params, Adjacency adjacency) {
  params.validate();
  const double mu_d = adjacency_factor(p, q, channel.spacing(), adjacency);
  if (p == q || mu_d == 0.0) fail(ErrorCode::InvalidArgument, "voxels are not adjacent");
  const double fp = channel.at(p), fq = channel.at(q);
  return compose_affinity(mu_d, mu_homogeneity(fp, fq, params.sigma_psi),
                          mu_object(fp, fq, params));
}

AffinityParams estimate_params(const Volume& volume, const SeedSet& seeds, std::uint8_t class_id) {
  const auto coords = seeds.coords_of(class_id);
  if (coords.size() < 2)
    fail(ErrorCode::TooFewSeeds, "class " + std::to_string(class_id) + " has " +
                                     std::to_string(coords.size()) + " seed(s), need >= 2");
  std::vector<char> taken(volume.size(), 0);
  std::vector<double> sample;
  const Grid& grid = volume.grid();
  for (const auto& c : coords) {
    if (!grid.contains(c)) fail(ErrorCode::OutOfBounds, "seed outside volume");
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const VoxelCoord q{c.x + dx, c.y + dy, c.z + dz};
          if (!grid.contains(q)) continue;
          const auto i = grid.index(q);
          if (taken[i]) continue;
          taken[i] = 1;
          sample.push_back(volume[i]);
        }
  }
  AffinityParams p;
  p.m = mean_of(sample);
  const auto [lo, hi] = std::minmax_element(volume.data().begin(), volume.data().end());
  const double floor = 1e-6 * std::max(*hi - *lo, 1.0);
  const double sd = stddev_of(sample);
  if (sd < floor) {
    warn("class " + std::to_string(class_id) + ": seed sample variance is ~0, sigma floored to " +
         format_double(floor));
  }
  p.sigma_psi = p.sigma_phi = std::max(sd, floor);
  return p;
}

ContrastWeights compute_contrast_weights(std::span<const double> dsc_per_contrast) {
  if (dsc_per_contrast.empty()) fail(ErrorCode::InvalidArgument, "no DSC values");
  double sum = 0;
  for (double d : dsc_per_contrast) {
    if (!(d >= 0 && d <= 1)) fail(ErrorCode::InvalidArgument, "DSC values must lie in [0,1]");
    sum += d;
  }
  if (!(sum > 0)) fail(ErrorCode::InvalidArgument, "DSC vector is all zero");
  ContrastWeights out;
  out.w.reserve(dsc_per_contrast.size());
  for (double d : dsc_per_contrast) out.w.push_back(d / sum);
  // Put any rounding residue on the largest weight so the sum is exact to 1 ulp.
  const double total = std::accumulate(out.w.begin(), out.w.end(), 0.0);
  auto largest = std::max_element(out.w.begin(), out.w.end());
  *largest += 1.0 - total;
  return out;
}

void store_params(KeyValueFile& kv, const std::string& prefix, const AffinityParams& params) {
  kv.set(prefix + ".m", params.m);
  kv.set(prefix + ".sigma_psi", params.sigma_psi);
  kv.set(prefix + ".sigma_phi", params.sigma_phi);
}

AffinityParams load_params(const KeyValueFile& kv, const std::string& prefix) {
  AffinityParams p{kv.get_double(prefix + ".m"), kv.get_double(prefix + ".sigma_psi"),
                   kv.get_double(prefix + ".sigma_phi")};
  p.validate();
  return p;
}

}  // namespace fcseg
