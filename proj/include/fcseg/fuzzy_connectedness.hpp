#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fcseg/affinity.hpp"
#include "fcseg/keyvalue.hpp"
#include "fcseg/seeds.hpp"
#include "fcseg/volume.hpp"

namespace fcseg {

/// Affinity of the edge between two adjacent voxels given by linear index.
using EdgeAffinity = std::function<double(std::size_t p, std::size_t q)>;

/// Max-min connectedness from `seeds` over an arbitrary edge affinity.
/// Seeds get membership 1; ties in the queue are broken by smaller linear
/// index. Errors: EmptySeedSet, OutOfBounds.
FuzzyMap compute_fc_with(const Grid& grid, std::span<const std::size_t> seeds,
                         Adjacency adjacency, const EdgeAffinity& affinity);

/// Connectedness map of one channel under the combined affinity.
FuzzyMap compute_fc(const Volume& channel, const AffinityParams& params,
                    std::span<const VoxelCoord> seeds, Adjacency adjacency = Adjacency::Six);

/// Affinity parameters indexed by (class id, channel).
class ParamTable {
 public:
  ParamTable() = default;
  explicit ParamTable(std::size_t channels) : channels_(channels) {}

  std::size_t channels() const { return channels_; }
  void set(std::uint8_t class_id, std::size_t channel, const AffinityParams& params);
  bool has(std::uint8_t class_id, std::size_t channel) const;
  /// Throws MissingParams.
  const AffinityParams& get(std::uint8_t class_id, std::size_t channel) const;

  /// Keys "<class name>.<channel name>.{m,sigma_psi,sigma_phi}".
  void store(KeyValueFile& kv, const ClassRegistry& registry,
             std::span<const std::string> channel_names) const;
  static ParamTable load(const KeyValueFile& kv, const ClassRegistry& registry,
                         std::span<const std::string> channel_names);

 private:
  std::size_t channels_ = 0;
  std::map<std::uint8_t, std::vector<std::optional<AffinityParams>>> table_;
};

/// estimate_params for every registered class on every channel.
ParamTable estimate_param_table(const MultiContrastVolume& mcv, const SeedSet& seeds);

struct FCOptions {
  Adjacency adjacency = Adjacency::Six;
  /// Concurrent searches; 0 = hardware concurrency.
  int workers = 0;
};

struct FCResult {
  ClassRegistry registry;
  /// Fused membership per class, registry order.
  std::vector<FuzzyMap> memberships;
  LabelMap labels;
  /// Argmax labeling of each channel alone, used for decision fusion.
  std::vector<LabelMap> contrast_labels;
  SeedSet seeds;
  ParamTable params;
  ContrastWeights weights;
};

/// Per-class, per-channel connectedness, fused as sum_i w_i mu_i, then
/// labeled by argmax over classes (registry order breaks ties; seeds keep
/// their class). Errors: InvalidArgument (weight count), EmptySeedSet,
/// MissingParams, OutOfBounds.
FCResult multi_object_segment(const MultiContrastVolume& mcv, const ParamTable& params,
                              const ContrastWeights& weights, const SeedSet& seeds,
                              const FCOptions& options = {});

/// Argmax over per-class memberships (registry order) with seed override.
LabelMap argmax_labels(std::span<const FuzzyMap> memberships, const SeedSet& seeds);

/// 1 where membership >= theta. Errors: InvalidArgument for theta outside [0,1].
LabelMap threshold_fuzzy(const FuzzyMap& map, double theta = 0.5);

}  // namespace fcseg
