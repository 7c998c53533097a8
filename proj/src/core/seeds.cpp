#include "fcseg/seeds.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fcseg {

namespace {

std::string coord_str(const VoxelCoord& c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + "," + std::to_string(c.z) + ")";
}

}  // namespace

ClassRegistry::ClassRegistry(std::vector<ClassInfo> classes) : classes_(std::move(classes)) {
  std::set<std::uint8_t> ids;
  std::set<std::string> names;
  for (const auto& c : classes_) {
    if (!ids.insert(c.id).second) fail(ErrorCode::InvalidArgument, "duplicate class id");
    if (!names.insert(c.name).second) fail(ErrorCode::InvalidArgument, "duplicate class name");
  }
}

ClassRegistry ClassRegistry::thigh() {
  return ClassRegistry({{kFat, "fat"}, {kMuscle, "muscle"}, {kBackground, "background"}});
}

bool ClassRegistry::contains(std::uint8_t id) const {
  return std::any_of(classes_.begin(), classes_.end(), [id](const auto& c) { return c.id == id; });
}

std::size_t ClassRegistry::index_of(std::uint8_t id) const {
  for (std::size_t i = 0; i < classes_.size(); ++i)
    if (classes_[i].id == id) return i;
  fail(ErrorCode::UnknownClass, "class id " + std::to_string(id) + " is not registered");
}

const std::string& ClassRegistry::name_of(std::uint8_t id) const {
  return classes_[index_of(id)].name;
}

std::uint8_t ClassRegistry::id_of(const std::string& name) const {
  for (const auto& c : classes_)
    if (c.name == name) return c.id;
  fail(ErrorCode::UnknownClass, "class '" + name + "' is not registered");
}

SeedSet::SeedSet(ClassRegistry registry, std::vector<Seed> entries)
    : registry_(std::move(registry)), entries_(std::move(entries)) {
  std::map<VoxelCoord, std::uint8_t> owner;
  for (const auto& s : entries_) {
    if (!registry_.contains(s.class_id))
      fail(ErrorCode::UnknownClass, "seed class " + std::to_string(s.class_id));
    auto [it, inserted] = owner.emplace(s.coord, s.class_id);
    if (!inserted) {
      if (it->second == s.class_id)
        fail(ErrorCode::InvalidArgument, "duplicate seed at " + coord_str(s.coord));
      fail(ErrorCode::InvalidArgument, "voxel " + coord_str(s.coord) + " seeded with two classes");
    }
  }
}

std::vector<VoxelCoord> SeedSet::coords_of(std::uint8_t class_id) const {
  std::vector<VoxelCoord> out;
  for (const auto& s : entries_)
    if (s.class_id == class_id) out.push_back(s.coord);
  return out;
}

void SeedSet::require_in_bounds(const Dims& dims) const {
  const Grid grid(dims, Spacing{});
  for (const auto& s : entries_)
    if (!grid.contains(s.coord))
      fail(ErrorCode::OutOfBounds, "seed " + coord_str(s.coord) + " outside volume");
}

void SeedSet::require_every_class() const {
  for (const auto& c : registry_.classes())
    if (std::none_of(entries_.begin(), entries_.end(),
                     [&](const Seed& s) { return s.class_id == c.id; }))
      fail(ErrorCode::EmptySeedSet, "class '" + c.name + "' has no seed");
}

void SeedSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "# class_id x y z\n";
  for (const auto& c : registry_.classes())
    out << "# class " << static_cast<int>(c.id) << " = " << c.name << '\n';
  for (const auto& s : entries_)
    out << static_cast<int>(s.class_id) << ' ' << s.coord.x << ' ' << s.coord.y << ' '
        << s.coord.z << '\n';
  if (!out) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

SeedSet load_manual_seeds(const std::filesystem::path& path, const ClassRegistry& registry,
                          const Dims& dims) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot read seed file " + path.string());
  const Grid grid(dims, Spacing{});
  std::vector<Seed> entries;
  std::set<Seed> seen;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long cls, x, y, z;
    if (!(ls >> cls)) continue;
    std::string extra;
    if (!(ls >> x >> y >> z) || (ls >> extra))
      fail(ErrorCode::ConfigError,
           path.string() + ":" + std::to_string(line_no) + ": expected 'class_id x y z'");
    if (cls < 0 || cls > 255 || !registry.contains(static_cast<std::uint8_t>(cls)))
      fail(ErrorCode::UnknownClass,
           path.string() + ":" + std::to_string(line_no) + ": class " + std::to_string(cls));
    const VoxelCoord c{static_cast<int>(x), static_cast<int>(y), static_cast<int>(z)};
    if (x < 0 || y < 0 || z < 0 || x >= dims.nx || y >= dims.ny || z >= dims.nz)
      fail(ErrorCode::OutOfBounds,
           path.string() + ":" + std::to_string(line_no) + ": seed " + coord_str(c));
    const Seed s{static_cast<std::uint8_t>(cls), c};
    if (!seen.insert(s).second) {
      warn("duplicate seed " + coord_str(c) + " in " + path.string() + " ignored");
      continue;
    }
    entries.push_back(s);
  }
  return SeedSet(registry, std::move(entries));
}

}  // namespace fcseg
