#include "fcseg/fuzzy_connectedness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "parallel.hpp"

namespace fcseg {

namespace {

constexpr std::uint32_t kNotQueued = std::numeric_limits<std::uint32_t>::max();
constexpr std::uint32_t kDone = kNotQueued - 1;

// Indexed binary max-heap over voxel indices keyed by membership. Larger key
// first, smaller index first on equal keys.
class BottleneckQueue {
 public:
  BottleneckQueue(const std::vector<double>& key, std::size_t n) : key_(key), pos_(n, kNotQueued) {
    if (n >= kDone) fail(ErrorCode::InvalidArgument, "volume too large for the queue");
  }

  bool empty() const { return heap_.empty(); }
  bool done(std::size_t v) const { return pos_[v] == kDone; }

  void push_or_raise(std::uint32_t v) {
    if (pos_[v] == kNotQueued) {
      pos_[v] = static_cast<std::uint32_t>(heap_.size());
      heap_.push_back(v);
    }
    sift_up(pos_[v]);
  }

  std::uint32_t pop() {
    const std::uint32_t top = heap_.front();
    const std::uint32_t last = heap_.back();
    heap_.pop_back();
    pos_[top] = kDone;
    if (!heap_.empty()) {
      heap_[0] = last;
      pos_[last] = 0;
      sift_down(0);
    }
    return top;
  }

 private:
  bool before(std::uint32_t a, std::uint32_t b) const {
    return key_[a] > key_[b] || (key_[a] == key_[b] && a < b);
  }

  void sift_up(std::uint32_t i) {
    const std::uint32_t v = heap_[i];
    while (i > 0) {
      const std::uint32_t parent = (i - 1) / 2;
      if (!before(v, heap_[parent])) break;
      heap_[i] = heap_[parent];
      pos_[heap_[i]] = i;
      i = parent;
    }
    heap_[i] = v;
    pos_[v] = i;
  }

  void sift_down(std::uint32_t i) {
    const auto n = static_cast<std::uint32_t>(heap_.size());
    const std::uint32_t v = heap_[i];
    for (;;) {
      std::uint32_t child = 2 * i + 1;
      if (child >= n) break;
      if (child + 1 < n && before(heap_[child + 1], heap_[child])) ++child;
      if (!before(heap_[child], v)) break;
      heap_[i] = heap_[child];
      pos_[heap_[i]] = i;
      i = child;
    }
    heap_[i] = v;
    pos_[v] = i;
  }

  const std::vector<double>& key_;
  std::vector<std::uint32_t> pos_;
  std::vector<std::uint32_t> heap_;
};

template <class Affinity>
std::vector<double> propagate(const Grid& grid, std::span<const std::size_t> seeds,
                              Adjacency adjacency, Affinity&& affinity) {
  if (seeds.empty()) fail(ErrorCode::EmptySeedSet, "connectedness needs at least one seed");
  const std::size_t n = grid.size();
  std::vector<double> mem(n, 0.0);
  BottleneckQueue queue(mem, n);
  for (std::size_t s : seeds) {
    if (s >= n) fail(ErrorCode::OutOfBounds, "seed index outside volume");
    mem[s] = 1.0;
    queue.push_or_raise(static_cast<std::uint32_t>(s));
  }
  while (!queue.empty()) {
    const std::uint32_t p = queue.pop();
    const double mp = mem[p];
    for_each_neighbor(grid, p, adjacency, [&](std::size_t q, const std::array<int, 3>& off) {
      if (mem[q] >= mp || queue.done(q)) return;
      const double candidate = std::min(mp, affinity(p, q, off));
      if (candidate > mem[q]) {
        mem[q] = candidate;
        queue.push_or_raise(static_cast<std::uint32_t>(q));
      }
    });
  }
  return mem;
}

std::vector<std::size_t> seed_indices(const Grid& grid, std::span<const VoxelCoord> seeds) {
  std::vector<std::size_t> out;
  out.reserve(seeds.size());
  for (const auto& s : seeds) {
    if (!grid.contains(s)) fail(ErrorCode::OutOfBounds, "seed outside volume");
    out.push_back(grid.index(s));
  }
  return out;
}

}  // namespace

FuzzyMap compute_fc_with(const Grid& grid, std::span<const std::size_t> seeds,
                         Adjacency adjacency, const EdgeAffinity& affinity) {
  auto mem = propagate(grid, seeds, adjacency,
                       [&](std::size_t p, std::size_t q, const std::array<int, 3>&) {
                         return std::clamp(affinity(p, q), 0.0, 1.0);
                       });
  return FuzzyMap(grid, std::move(mem));
}

FuzzyMap compute_fc(const Volume& channel, const AffinityParams& params,
                    std::span<const VoxelCoord> seeds, Adjacency adjacency) {
  params.validate();
  const Grid& grid = channel.grid();
  const auto idx = seed_indices(grid, seeds);
  // sqrt of the per-voxel object response; min commutes with sqrt.
  const auto f = channel.data();
  std::vector<double> root_obj(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    root_obj[i] = std::sqrt(object_response(f[i], params.m, params.sigma_phi));
  const double inv_4s2 = 1.0 / (4.0 * params.sigma_psi * params.sigma_psi);
  const Spacing& sp = grid.spacing();
  const VoxelCoord origin{0, 0, 0};
  auto mu_d = [&](const std::array<int, 3>& off) {
    return adjacency_factor(origin, {off[0], off[1], off[2]}, sp, adjacency);
  };
  // Six neighbours only differ by axis; cache the factor per axis.
  const double d_axis[3] = {mu_d({1, 0, 0}), mu_d({0, 1, 0}), mu_d({0, 0, 1})};
  auto mem = propagate(grid, idx, adjacency,
                       [&](std::size_t p, std::size_t q, const std::array<int, 3>& off) {
                         double d;
                         if (adjacency == Adjacency::Six)
                           d = d_axis[off[0] != 0 ? 0 : (off[1] != 0 ? 1 : 2)];
                         else
                           d = mu_d(off);
                         const double diff = f[p] - f[q];
                         return d * std::exp(-diff * diff * inv_4s2) *
                                std::min(root_obj[p], root_obj[q]);
                       });
  return FuzzyMap(grid, std::move(mem));
}

void ParamTable::set(std::uint8_t class_id, std::size_t channel, const AffinityParams& params) {
  if (channel >= channels_) fail(ErrorCode::InvalidArgument, "channel index out of range");
  params.validate();
  auto& row = table_[class_id];
  row.resize(channels_);
  row[channel] = params;
}

bool ParamTable::has(std::uint8_t class_id, std::size_t channel) const {
  auto it = table_.find(class_id);
  return it != table_.end() && channel < it->second.size() && it->second[channel].has_value();
}

const AffinityParams& ParamTable::get(std::uint8_t class_id, std::size_t channel) const {
  if (!has(class_id, channel))
    fail(ErrorCode::MissingParams, "no affinity params for class " + std::to_string(class_id) +
                                       ", channel " + std::to_string(channel));
  return *table_.at(class_id)[channel];
}

void ParamTable::store(KeyValueFile& kv, const ClassRegistry& registry,
                       std::span<const std::string> channel_names) const {
  for (const auto& c : registry.classes())
    for (std::size_t ch = 0; ch < channel_names.size(); ++ch)
      if (has(c.id, ch)) store_params(kv, c.name + "." + channel_names[ch], get(c.id, ch));
}

ParamTable ParamTable::load(const KeyValueFile& kv, const ClassRegistry& registry,
                            std::span<const std::string> channel_names) {
  ParamTable t(channel_names.size());
  for (const auto& c : registry.classes())
    for (std::size_t ch = 0; ch < channel_names.size(); ++ch) {
      const std::string prefix = c.name + "." + channel_names[ch];
      if (!kv.has(prefix + ".m"))
        fail(ErrorCode::MissingParams, "trained params lack '" + prefix + "'");
      t.set(c.id, ch, load_params(kv, prefix));
    }
  return t;
}

ParamTable estimate_param_table(const MultiContrastVolume& mcv, const SeedSet& seeds) {
  ParamTable t(mcv.channel_count());
  for (const auto& c : seeds.registry().classes())
    for (std::size_t ch = 0; ch < mcv.channel_count(); ++ch)
      t.set(c.id, ch, estimate_params(mcv.channel(ch), seeds, c.id));
  return t;
}

LabelMap argmax_labels(std::span<const FuzzyMap> memberships, const SeedSet& seeds) {
  const auto& classes = seeds.registry().classes();
  if (memberships.size() != classes.size() || memberships.empty())
    fail(ErrorCode::InvalidArgument, "one membership map per registered class required");
  const Grid& grid = memberships.front().grid();
  for (const auto& m : memberships) require_same_grid(grid, m.grid(), "membership maps");
  std::vector<std::uint8_t> labels(grid.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < memberships.size(); ++k)
      if (memberships[k][i] > memberships[best][i]) best = k;
    labels[i] = classes[best].id;
  }
  for (const auto& s : seeds.entries()) {
    if (!grid.contains(s.coord)) fail(ErrorCode::OutOfBounds, "seed outside volume");
    labels[grid.index(s.coord)] = s.class_id;
  }
  return LabelMap(grid, std::move(labels));
}

FCResult multi_object_segment(const MultiContrastVolume& mcv, const ParamTable& params,
                              const ContrastWeights& weights, const SeedSet& seeds,
                              const FCOptions& options) {
  const std::size_t channels = mcv.channel_count();
  weights.validate();
  if (weights.w.size() != channels)
    fail(ErrorCode::InvalidArgument, std::to_string(weights.w.size()) + " weights for " +
                                         std::to_string(channels) + " contrasts");
  const Grid& grid = mcv.grid();
  seeds.require_in_bounds(grid.dims());
  seeds.require_every_class();
  const auto& classes = seeds.registry().classes();
  for (const auto& c : classes)
    for (std::size_t ch = 0; ch < channels; ++ch) params.get(c.id, ch);

  const std::size_t tasks = classes.size() * channels;
  std::vector<std::vector<double>> maps(tasks);
  detail::parallel_for(tasks, options.workers, [&](std::size_t t) {
    const std::size_t k = t / channels, ch = t % channels;
    const auto coords = seeds.coords_of(classes[k].id);
    auto fm = compute_fc(mcv.channel(ch), params.get(classes[k].id, ch), coords,
                         options.adjacency);
    maps[t].assign(fm.membership().begin(), fm.membership().end());
  });

  FCResult r;
  r.registry = seeds.registry();
  r.seeds = seeds;
  r.params = params;
  r.weights = weights;
  for (std::size_t ch = 0; ch < channels; ++ch) {
    std::vector<FuzzyMap> single;
    for (std::size_t k = 0; k < classes.size(); ++k)
      single.emplace_back(grid, maps[k * channels + ch]);
    r.contrast_labels.push_back(argmax_labels(single, seeds));
  }
  for (std::size_t k = 0; k < classes.size(); ++k) {
    std::vector<double> fused(grid.size(), 0.0);
    for (std::size_t ch = 0; ch < channels; ++ch) {
      const double w = weights.w[ch];
      const auto& m = maps[k * channels + ch];
      for (std::size_t i = 0; i < fused.size(); ++i) fused[i] += w * m[i];
    }
    for (double& v : fused) v = std::min(v, 1.0);
    r.memberships.emplace_back(grid, std::move(fused));
  }
  r.labels = argmax_labels(r.memberships, seeds);
  return r;
}

LabelMap threshold_fuzzy(const FuzzyMap& map, double theta) {
  if (!(theta >= 0.0 && theta <= 1.0)) fail(ErrorCode::InvalidArgument, "theta must lie in [0,1]");
  std::vector<std::uint8_t> out(map.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = map[i] >= theta ? 1 : 0;
  return LabelMap(map.grid(), std::move(out));
}

}  // namespace fcseg
