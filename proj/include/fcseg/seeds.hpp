#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fcseg/volume.hpp"

namespace fcseg {

struct ClassInfo {
  std::uint8_t id = 0;
  std::string name;
  friend bool operator==(const ClassInfo&, const ClassInfo&) = default;
};

/// Ordered set of tissue classes. Order doubles as the argmax tie-break
/// priority, so background is conventionally listed last.
class ClassRegistry {
 public:
  static constexpr std::uint8_t kBackground = 0;
  static constexpr std::uint8_t kFat = 1;
  static constexpr std::uint8_t kMuscle = 2;

  ClassRegistry() = default;
  explicit ClassRegistry(std::vector<ClassInfo> classes);

  /// fat (1), muscle (2), background (0).
  static ClassRegistry thigh();

  const std::vector<ClassInfo>& classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }
  bool contains(std::uint8_t id) const;
  /// Position in registry order; throws UnknownClass.
  std::size_t index_of(std::uint8_t id) const;
  const std::string& name_of(std::uint8_t id) const;
  /// Id of the class with the given name; throws UnknownClass.
  std::uint8_t id_of(const std::string& name) const;

  friend bool operator==(const ClassRegistry&, const ClassRegistry&) = default;

 private:
  std::vector<ClassInfo> classes_;
};

struct Seed {
  std::uint8_t class_id = 0;
  VoxelCoord coord;
  friend auto operator<=>(const Seed&, const Seed&) = default;
};

/// Labeled seed voxels. Entries are unique, reference registered classes, and
/// a coordinate never carries two different classes.
class SeedSet {
 public:
  SeedSet() = default;
  SeedSet(ClassRegistry registry, std::vector<Seed> entries);

  const ClassRegistry& registry() const { return registry_; }
  const std::vector<Seed>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::vector<VoxelCoord> coords_of(std::uint8_t class_id) const;
  /// Throws OutOfBounds naming the first offending seed.
  void require_in_bounds(const Dims& dims) const;
  /// Throws EmptySeedSet naming the first class without a seed.
  void require_every_class() const;

  /// Plain-text "class_id x y z" lines, '#' comments.
  void save(const std::filesystem::path& path) const;

 private:
  ClassRegistry registry_;
  std::vector<Seed> entries_;
};

/// Parses a manual seed file. Duplicate lines are dropped with a warning.
/// Errors: IoFailure, ConfigError (syntax), UnknownClass, OutOfBounds.
SeedSet load_manual_seeds(const std::filesystem::path& path, const ClassRegistry& registry,
                          const Dims& dims);

}  // namespace fcseg
