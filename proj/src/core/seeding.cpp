#include "fcseg/seeding.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

#include "fcseg/connected_components.hpp"
#include "fcseg/filters.hpp"

namespace fcseg {

namespace {

constexpr std::array<std::uint8_t, 3> kThighClasses = {ClassRegistry::kFat, ClassRegistry::kMuscle,
                                                       ClassRegistry::kBackground};

// Expected relative brightness of each class in each channel role, in class
// order fat, muscle, background.
double template_value(ChannelRole role, std::size_t cls) {
  static constexpr double table[3][3] = {
      {0.25, 1.0, 0.0},   // water
      {1.0, 0.5, 0.0},    // water-fat
      {1.0, 0.15, 0.0}};  // fat
  return table[static_cast<int>(role)][cls];
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// One voxel per spatial block, blocks sized so their count stays within the
// budget. Position inside each block is a fixed hash of the block index.
std::vector<std::size_t> stratified_sample(const Grid& grid, std::size_t budget) {
  const Dims& d = grid.dims();
  int step = 1;
  auto blocks = [&](int s) {
    return static_cast<std::size_t>((d.nx + s - 1) / s) * static_cast<std::size_t>((d.ny + s - 1) / s) *
           static_cast<std::size_t>((d.nz + s - 1) / s);
  };
  while (blocks(step) > budget) ++step;
  std::vector<std::size_t> out;
  std::uint64_t block = 0;
  for (int bz = 0; bz < d.nz; bz += step)
    for (int by = 0; by < d.ny; by += step)
      for (int bx = 0; bx < d.nx; bx += step, ++block) {
        const std::uint64_t h = mix(block);
        const int ex = std::min(step, d.nx - bx), ey = std::min(step, d.ny - by),
                  ez = std::min(step, d.nz - bz);
        const VoxelCoord p{bx + static_cast<int>(h % static_cast<std::uint64_t>(ex)),
                           by + static_cast<int>((h >> 20) % static_cast<std::uint64_t>(ey)),
                           bz + static_cast<int>((h >> 40) % static_cast<std::uint64_t>(ez))};
        out.push_back(grid.index(p));
      }
  return out;
}

bool interior_same(const Grid& grid, std::size_t i, const auto& same) {
  const VoxelCoord p = grid.coord(i);
  const Dims& d = grid.dims();
  if (p.x < 1 || p.y < 1 || p.z < 1 || p.x + 1 >= d.nx || p.y + 1 >= d.ny || p.z + 1 >= d.nz)
    return false;
  bool ok = true;
  for_each_neighbor(grid, i, Adjacency::Six,
                    [&](std::size_t q, const std::array<int, 3>&) { ok = ok && same(q); });
  return ok;
}

// First pass: best candidate of every component. Second pass: fill to k.
std::vector<std::size_t> pick(const std::vector<std::size_t>& ordered,
                              const std::vector<std::uint32_t>& component, int k) {
  std::vector<std::size_t> chosen;
  std::set<std::uint32_t> covered;
  std::set<std::size_t> taken;
  for (std::size_t v : ordered)
    if (covered.insert(component[v]).second) {
      chosen.push_back(v);
      taken.insert(v);
    }
  for (std::size_t v : ordered) {
    if (static_cast<int>(chosen.size()) >= k) break;
    if (taken.insert(v).second) chosen.push_back(v);
  }
  return chosen;
}

}  // namespace

ChannelRole channel_role(const std::string& name) {
  std::string n;
  for (char c : name)
    if (std::isalnum(static_cast<unsigned char>(c)))
      n.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (n == "water" || n == "wateronly" || n == "mri1") return ChannelRole::Water;
  if (n == "fat" || n == "fatonly" || n == "mri3") return ChannelRole::Fat;
  return ChannelRole::WaterFat;
}

SeedingResult ap_seeds(const MultiContrastVolume& mcv, const APSeedOptions& options) {
  options.ap.validate();
  if (options.min_component_size < 1)
    fail(ErrorCode::InvalidArgument, "min_component_size must be >= 1");
  if (options.seeds_per_class < 1) fail(ErrorCode::InvalidArgument, "seeds_per_class must be >= 1");
  if (options.max_samples < 2) fail(ErrorCode::InvalidArgument, "max_samples must be >= 2");
  const Grid& grid = mcv.grid();
  const std::size_t C = mcv.channel_count();
  const std::size_t V = grid.size();
  if (V < 2) fail(ErrorCode::InvalidArgument, "volume too small for seeding");

  // Per-channel robust scale from the sample.
  auto sample = stratified_sample(grid, options.max_samples);
  // Repeated intensity vectors add nothing but ties to AP; keep the first.
  {
    std::set<std::vector<double>> seen;
    std::vector<std::size_t> unique;
    for (std::size_t i : sample) {
      std::vector<double> key(C);
      for (std::size_t c = 0; c < C; ++c) key[c] = mcv.channel(c)[i];
      if (seen.insert(std::move(key)).second) unique.push_back(i);
    }
    sample = std::move(unique);
  }
  if (sample.size() < 2) fail(ErrorCode::NoValidSeed, "image has fewer than 2 distinct intensities");
  std::vector<double> scale(C);
  for (std::size_t c = 0; c < C; ++c) {
    std::vector<double> vals;
    for (std::size_t i : sample) vals.push_back(mcv.channel(c)[i]);
    std::sort(vals.begin(), vals.end());
    double range = percentile_sorted(vals, 99) - percentile_sorted(vals, 1);
    if (!(range > 0)) range = vals.back() - vals.front();
    scale[c] = range > 0 ? 1.0 / range : 1.0;
  }
  auto feature = [&](std::size_t i, std::size_t c) { return mcv.channel(c)[i] * scale[c]; };

  std::vector<double> points;
  points.reserve(sample.size() * C);
  for (std::size_t i : sample)
    for (std::size_t c = 0; c < C; ++c) points.push_back(feature(i, c));
  // Fewer exemplars than classes: raise the preference toward 0 (more
  // exemplars) a bounded number of times.
  APConfig ap_config = options.ap;
  APResult ap = ap_cluster(points, C, ap_config);
  for (int retry = 0; ap.exemplars.size() < kThighClasses.size() && retry < 10; ++retry) {
    if (ap.exemplars.size() >= sample.size() || ap.preference == 0.0) break;
    warn("AP found " + std::to_string(ap.exemplars.size()) +
         " exemplar(s); retrying with a higher preference");
    ap_config.preference = ap.preference / 2.0;
    ap = ap_cluster(points, C, ap_config);
  }
  if (!ap.converged) warn("affinity propagation did not converge; using the last exemplar set");

  const std::size_t E = ap.exemplars.size();
  // Exemplar intensities normalized to [0,1] per channel across exemplars.
  std::vector<std::vector<double>> ex_feat(E, std::vector<double>(C));
  std::vector<std::vector<double>> ex_norm(E, std::vector<double>(C));
  for (std::size_t c = 0; c < C; ++c) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t e = 0; e < E; ++e) {
      ex_feat[e][c] = points[ap.exemplars[e] * C + c];
      lo = std::min(lo, ex_feat[e][c]);
      hi = std::max(hi, ex_feat[e][c]);
    }
    for (std::size_t e = 0; e < E; ++e)
      ex_norm[e][c] = hi > lo ? (ex_feat[e][c] - lo) / (hi - lo) : 0.0;
  }
  std::vector<ChannelRole> roles;
  for (const auto& name : mcv.names()) roles.push_back(channel_role(name));
  auto template_cost = [&](std::size_t e, std::size_t cls) {
    double cost = 0;
    for (std::size_t c = 0; c < C; ++c) {
      const double d = ex_norm[e][c] - template_value(roles[c], cls);
      cost += d * d;
    }
    return cost;
  };

  // Anchors: the injective exemplar choice for (fat, muscle, background) of
  // least total template distance.
  constexpr std::size_t K = kThighClasses.size();
  std::array<std::ptrdiff_t, K> anchor;
  anchor.fill(-1);
  if (E >= K) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < E; ++f)
      for (std::size_t m = 0; m < E; ++m) {
        if (m == f) continue;
        for (std::size_t b = 0; b < E; ++b) {
          if (b == f || b == m) continue;
          const double cost = template_cost(f, 0) + template_cost(m, 1) + template_cost(b, 2);
          if (cost < best) {
            best = cost;
            anchor = {static_cast<std::ptrdiff_t>(f), static_cast<std::ptrdiff_t>(m),
                      static_cast<std::ptrdiff_t>(b)};
          }
        }
      }
  } else {
    for (std::size_t e = 0; e < E; ++e) {
      std::size_t cls = 0;
      for (std::size_t k = 1; k < K; ++k)
        if (template_cost(e, k) < template_cost(e, cls)) cls = k;
      if (anchor[cls] < 0) anchor[cls] = static_cast<std::ptrdiff_t>(e);
    }
  }
  const ClassRegistry registry = ClassRegistry::thigh();
  for (std::size_t k = 0; k < K; ++k)
    if (anchor[k] < 0)
      fail(ErrorCode::NoValidSeed, "AP seeding found no exemplar for class '" +
                                       registry.name_of(kThighClasses[k]) + "'");

  // Remaining exemplars join the anchor closest in normalized intensity.
  std::vector<std::size_t> ex_class(E);
  for (std::size_t e = 0; e < E; ++e) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      if (anchor[k] == static_cast<std::ptrdiff_t>(e)) {
        best = k;
        break;
      }
      double d = 0;
      for (std::size_t c = 0; c < C; ++c) {
        const double t = ex_norm[e][c] - ex_norm[static_cast<std::size_t>(anchor[k])][c];
        d += t * t;
      }
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    ex_class[e] = best;
  }

  // Class of every voxel via its nearest exemplar.
  std::vector<std::uint8_t> cls_map(V);
  std::vector<double> anchor_dist(V);
  std::vector<double> f(C);
  for (std::size_t i = 0; i < V; ++i) {
    for (std::size_t c = 0; c < C; ++c) f[c] = feature(i, c);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < E; ++e) {
      double d = 0;
      for (std::size_t c = 0; c < C; ++c) {
        const double t = f[c] - ex_feat[e][c];
        d += t * t;
      }
      if (d < best_d) {
        best_d = d;
        best = e;
      }
    }
    const std::size_t k = ex_class[best];
    cls_map[i] = kThighClasses[k];
    const auto& a = ex_feat[static_cast<std::size_t>(anchor[k])];
    double d = 0;
    for (std::size_t c = 0; c < C; ++c) d += (f[c] - a[c]) * (f[c] - a[c]);
    anchor_dist[i] = d;
  }

  const Components regions = label_regions(cls_map, grid, Adjacency::Six);
  std::vector<Seed> seeds;
  for (std::size_t k = 0; k < K; ++k) {
    const std::uint8_t id = kThighClasses[k];
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < V; ++i) {
      if (cls_map[i] != id) continue;
      if (regions.sizes[regions.id[i]] < static_cast<std::size_t>(options.min_component_size))
        continue;
      if (!interior_same(grid, i, [&](std::size_t q) { return cls_map[q] == id; })) continue;
      candidates.push_back(i);
    }
    if (candidates.empty())
      fail(ErrorCode::NoValidSeed, "AP seeding found no valid seed for class '" +
                                       registry.name_of(id) + "'");
    // Parameters are later estimated on each seed's 3x3x3 block, so blocks
    // that stay inside the class rank first, then closeness to the anchor.
    std::vector<std::uint8_t> impurity(V, 0);
    for (std::size_t v : candidates) {
      int off = 0;
      for_each_neighbor(grid, v, Adjacency::TwentySix,
                        [&](std::size_t q, const std::array<int, 3>&) { off += cls_map[q] != id; });
      impurity[v] = static_cast<std::uint8_t>(off);
    }
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
      if (impurity[a] != impurity[b]) return impurity[a] < impurity[b];
      return anchor_dist[a] < anchor_dist[b] || (anchor_dist[a] == anchor_dist[b] && a < b);
    });
    for (std::size_t v : pick(candidates, regions.id, options.seeds_per_class))
      seeds.push_back({id, grid.coord(v)});
  }

  SeedingResult r;
  r.seeds = SeedSet(registry, std::move(seeds));
  r.class_map = LabelMap(grid, std::move(cls_map));
  r.ap = std::move(ap);
  for (std::size_t e = 0; e < E; ++e) r.exemplar_classes.push_back(kThighClasses[ex_class[e]]);
  return r;
}

SeedingResult morphology_seeds(const Volume& channel, const MorphologyOptions& options) {
  if (options.erosion_radius < 0) fail(ErrorCode::InvalidArgument, "erosion_radius must be >= 0");
  if (options.min_component_size < 1)
    fail(ErrorCode::InvalidArgument, "min_component_size must be >= 1");
  if (options.seeds_per_class < 1) fail(ErrorCode::InvalidArgument, "seeds_per_class must be >= 1");
  ThresholdInterval background;
  if (options.background) {
    background = *options.background;
  } else {
    background = {-std::numeric_limits<double>::infinity(),
                  std::nextafter(std::min(options.fat.lo, options.muscle.lo),
                                 -std::numeric_limits<double>::infinity())};
  }
  const std::array<ThresholdInterval, 3> intervals = {options.fat, options.muscle, background};
  for (const auto& iv : intervals)
    if (!(iv.lo <= iv.hi)) fail(ErrorCode::InvalidArgument, "threshold interval with lo > hi");
  for (std::size_t a = 0; a < intervals.size(); ++a)
    for (std::size_t b = a + 1; b < intervals.size(); ++b)
      if (intervals[a].lo <= intervals[b].hi && intervals[b].lo <= intervals[a].hi)
        fail(ErrorCode::InvalidArgument, "threshold intervals must be disjoint");

  const ClassRegistry registry = ClassRegistry::thigh();
  const Grid& grid = channel.grid();
  const std::size_t V = grid.size();
  std::vector<std::uint8_t> cls_map(V, ClassRegistry::kBackground);
  std::vector<Seed> seeds;
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    const std::uint8_t id = kThighClasses[k];
    const std::string& name = registry.name_of(id);
    std::vector<std::uint8_t> mask(V);
    for (std::size_t i = 0; i < V; ++i) mask[i] = intervals[k].contains(channel[i]) ? 1 : 0;
    mask = erode(mask, grid, options.erosion_radius);
    const Components comps = label_components(mask, grid, Adjacency::Six);
    if (comps.count() == 0)
      fail(ErrorCode::NoValidSeed, "morphology seeding: mask of class '" + name +
                                       "' is empty after erosion");
    const std::uint32_t largest = comps.largest();
    std::vector<char> kept(comps.sizes.size(), 0);
    for (std::size_t c = 1; c < comps.sizes.size(); ++c)
      kept[c] = c == largest ||
                comps.sizes[c] >= static_cast<std::size_t>(options.min_component_size);
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < V; ++i) {
      const std::uint32_t c = comps.id[i];
      if (c == 0 || !kept[c]) continue;
      if (id != ClassRegistry::kBackground) cls_map[i] = id;
      if (interior_same(grid, i, [&](std::size_t q) { return comps.id[q] == c; }))
        candidates.push_back(i);
    }
    if (candidates.empty())
      fail(ErrorCode::NoValidSeed, "morphology seeding found no interior voxel for class '" +
                                       name + "'");
    // Evenly strided picks, plus the middle candidate of any kept component
    // the stride missed.
    std::vector<std::size_t> chosen;
    std::set<std::uint32_t> covered;
    const std::size_t n = candidates.size();
    const std::size_t want = std::min<std::size_t>(n, static_cast<std::size_t>(options.seeds_per_class));
    for (std::size_t j = 0; j < want; ++j) {
      const std::size_t v = candidates[(2 * j + 1) * n / (2 * want)];
      chosen.push_back(v);
      covered.insert(comps.id[v]);
    }
    std::vector<std::vector<std::size_t>> by_comp(comps.sizes.size());
    for (std::size_t v : candidates) by_comp[comps.id[v]].push_back(v);
    for (std::size_t c = 1; c < by_comp.size(); ++c)
      if (!by_comp[c].empty() && !covered.count(static_cast<std::uint32_t>(c)))
        chosen.push_back(by_comp[c][by_comp[c].size() / 2]);
    std::sort(chosen.begin(), chosen.end());
    chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
    for (std::size_t v : chosen) seeds.push_back({id, grid.coord(v)});
  }

  SeedingResult r;
  r.seeds = SeedSet(registry, std::move(seeds));
  r.class_map = LabelMap(grid, std::move(cls_map));
  return r;
}

}  // namespace fcseg
