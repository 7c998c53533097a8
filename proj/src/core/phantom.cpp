#include "fcseg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "fcseg/filters.hpp"
#include "fcseg/volume_io.hpp"

namespace fcseg {

namespace {

double slice_scale(const PhantomConfig& c, int z) {
  if (c.dims.nz <= 1) return 1.0;
  return 1.0 - c.taper * static_cast<double>(z) / static_cast<double>(c.dims.nz - 1);
}

std::uint8_t label_at(const PhantomConfig& c, double x_mm, double y_mm, double scale) {
  const double cx = c.dims.nx * c.spacing.sx / 2.0, cy = c.dims.ny * c.spacing.sy / 2.0;
  for (double side : {-1.0, 1.0}) {
    const double dx = x_mm - (cx + side * c.leg_separation_mm / 2.0), dy = y_mm - cy;
    const double r = std::sqrt(dx * dx + dy * dy);
    if (r <= c.bone_radius_mm * scale) return 0;
    if (r <= c.muscle_radius_mm * scale) return 2;
    if (r <= c.leg_radius_mm * scale) return 1;
  }
  return 0;
}

double channel_or(const std::vector<double>& v, std::size_t c, double fallback) {
  return v.empty() ? fallback : v[c];
}


}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void PhantomConfig::validate() const {
  Grid(dims, spacing);
  const std::size_t C = channel_names.size();
  if (C == 0) fail(ErrorCode::InvalidArgument, "phantom needs at least one channel");
  if (std::set<std::string>(channel_names.begin(), channel_names.end()).size() != C)
    fail(ErrorCode::InvalidArgument, "phantom channel names must be unique");
  if (means.size() != 3) fail(ErrorCode::InvalidArgument, "phantom needs means for 3 labels");
  for (const auto& row : means)
    if (row.size() != C) fail(ErrorCode::InvalidArgument, "one mean per channel per label");
  if ((!gain.empty() && gain.size() != C) || (!offset.empty() && offset.size() != C))
    fail(ErrorCode::InvalidArgument, "gain/offset need one value per channel");
  for (double g : gain)
    if (!(g > 0)) fail(ErrorCode::InvalidArgument, "gain must be > 0");
  if (!(noise_sigma >= 0)) fail(ErrorCode::InvalidArgument, "noise_sigma must be >= 0");
  if (!(bias_amplitude >= 0 && bias_amplitude < 2))
    fail(ErrorCode::InvalidArgument, "bias_amplitude must lie in [0, 2)");
  if (!(bias_fwhm_mm > 0)) fail(ErrorCode::InvalidArgument, "bias_fwhm_mm must be > 0");
  if (!(taper >= 0 && taper < 1)) fail(ErrorCode::InvalidArgument, "taper must lie in [0, 1)");
  if (!(bone_radius_mm >= 0 && bone_radius_mm < muscle_radius_mm &&
        muscle_radius_mm < leg_radius_mm))
    fail(ErrorCode::InvalidArgument, "radii must satisfy 0 <= bone < muscle < leg");
  if (!(leg_separation_mm / 2.0 > leg_radius_mm))
    fail(ErrorCode::InvalidArgument, "legs overlap: separation must exceed two leg radii");
  const double wx = dims.nx * spacing.sx, wy = dims.ny * spacing.sy;
  if (wx / 2.0 - leg_separation_mm / 2.0 - leg_radius_mm < 0 || wy / 2.0 - leg_radius_mm < 0)
    fail(ErrorCode::InvalidArgument, "phantom geometry exceeds the grid");
  if (noise_sigma > 0 && class_separation() < 2.0 * noise_sigma)
    fail(ErrorCode::InvalidArgument, "class means are closer than 2 noise sd in every channel");
}

double PhantomConfig::class_separation() const {
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < means.size(); ++a)
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      double best = 0;
      for (std::size_t c = 0; c < means[a].size(); ++c)
        best = std::max(best, std::abs(means[a][c] - means[b][c]));
      sep = std::min(sep, best);
    }
  return sep;
}

KeyValueFile PhantomConfig::to_keyvalue() const {
  KeyValueFile kv;
  kv.set("phantom.dims", std::vector<long long>{dims.nx, dims.ny, dims.nz});
  kv.set("phantom.spacing", std::vector<double>{spacing.sx, spacing.sy, spacing.sz});
  kv.set("phantom.leg_separation_mm", leg_separation_mm);
  kv.set("phantom.leg_radius_mm", leg_radius_mm);
  kv.set("phantom.muscle_radius_mm", muscle_radius_mm);
  kv.set("phantom.bone_radius_mm", bone_radius_mm);
  kv.set("phantom.taper", taper);
  kv.set("phantom.channels", channel_names);
  kv.set("phantom.mean_background", means[0]);
  kv.set("phantom.mean_fat", means[1]);
  kv.set("phantom.mean_muscle", means[2]);
  kv.set("phantom.noise_sigma", noise_sigma);
  kv.set("phantom.bias_amplitude", bias_amplitude);
  kv.set("phantom.bias_fwhm_mm", bias_fwhm_mm);
  if (!gain.empty()) kv.set("phantom.gain", gain);
  if (!offset.empty()) kv.set("phantom.offset", offset);
  kv.set("phantom.seed", std::to_string(seed));
  return kv;
}

PhantomConfig PhantomConfig::from_keyvalue(const KeyValueFile& kv) {
  PhantomConfig c;
  if (kv.has("phantom.dims")) {
    const auto d = kv.get_ints("phantom.dims");
    if (d.size() != 3) fail(ErrorCode::ConfigError, "phantom.dims needs 3 integers");
    c.dims = {static_cast<int>(d[0]), static_cast<int>(d[1]), static_cast<int>(d[2])};
  }
  if (kv.has("phantom.spacing")) {
    const auto s = kv.get_doubles("phantom.spacing");
    if (s.size() != 3) fail(ErrorCode::ConfigError, "phantom.spacing needs 3 values");
    c.spacing = {s[0], s[1], s[2]};
  }
  c.leg_separation_mm = kv.get_double("phantom.leg_separation_mm", c.leg_separation_mm);
  c.leg_radius_mm = kv.get_double("phantom.leg_radius_mm", c.leg_radius_mm);
  c.muscle_radius_mm = kv.get_double("phantom.muscle_radius_mm", c.muscle_radius_mm);
  c.bone_radius_mm = kv.get_double("phantom.bone_radius_mm", c.bone_radius_mm);
  c.taper = kv.get_double("phantom.taper", c.taper);
  if (kv.has("phantom.channels")) c.channel_names = kv.get_words("phantom.channels");
  const char* mean_keys[3] = {"phantom.mean_background", "phantom.mean_fat", "phantom.mean_muscle"};
  for (int l = 0; l < 3; ++l)
    if (kv.has(mean_keys[l])) c.means[static_cast<std::size_t>(l)] = kv.get_doubles(mean_keys[l]);
  c.noise_sigma = kv.get_double("phantom.noise_sigma", c.noise_sigma);
  c.bias_amplitude = kv.get_double("phantom.bias_amplitude", c.bias_amplitude);
  c.bias_fwhm_mm = kv.get_double("phantom.bias_fwhm_mm", c.bias_fwhm_mm);
  if (kv.has("phantom.gain")) c.gain = kv.get_doubles("phantom.gain");
  if (kv.has("phantom.offset")) c.offset = kv.get_doubles("phantom.offset");
  if (kv.has("phantom.seed")) {
    const std::string s = kv.get_string("phantom.seed");
    try {
      std::size_t used = 0;
      c.seed = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      fail(ErrorCode::ConfigError, "phantom.seed: cannot parse '" + s + "'");
    }
  }
  c.validate();
  return c;
}

Phantom generate(const PhantomConfig& config) {
  config.validate();
  const Grid grid(config.dims, config.spacing);
  const std::size_t V = grid.size();
  const std::size_t C = config.channel_names.size();
  std::mt19937_64 rng(config.seed);

  std::vector<std::uint8_t> truth(V);
  for (std::size_t i = 0; i < V; ++i) {
    const VoxelCoord p = grid.coord(i);
    truth[i] = label_at(config, (p.x + 0.5) * config.spacing.sx, (p.y + 0.5) * config.spacing.sy,
                        slice_scale(config, p.z));
  }

  const double wx = config.dims.nx * config.spacing.sx, wy = config.dims.ny * config.spacing.sy,
               wz = config.dims.nz * config.spacing.sz;
  std::uniform_real_distribution<double> shift(-0.25, 0.25);
  const double bx = wx * (0.5 + shift(rng)), by = wy * (0.5 + shift(rng)),
               bz = wz * (0.5 + shift(rng));
  const double bsig = fwhm_to_sigma(config.bias_fwhm_mm);
  const double A = config.bias_amplitude;
  std::vector<double> bias(V, 1.0);
  if (A > 0) {
    for (std::size_t i = 0; i < V; ++i) {
      const VoxelCoord p = grid.coord(i);
      const double dx = (p.x + 0.5) * config.spacing.sx - bx,
                   dy = (p.y + 0.5) * config.spacing.sy - by,
                   dz = (p.z + 0.5) * config.spacing.sz - bz;
      bias[i] = 1.0 - A / 2.0 + A * std::exp(-(dx * dx + dy * dy + dz * dz) / (2 * bsig * bsig));
    }
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Volume> channels;
  for (std::size_t c = 0; c < C; ++c) {
    const double g = channel_or(config.gain, c, 1.0), o = channel_or(config.offset, c, 0.0);
    std::vector<double> data(V);
    for (std::size_t i = 0; i < V; ++i) {
      double v = config.means[truth[i]][c];
      if (config.noise_sigma > 0) v += config.noise_sigma * noise(rng);
      data[i] = v * bias[i] * g + o;
    }
    channels.emplace_back(grid, std::move(data));
  }
  return {MultiContrastVolume(std::move(channels), config.channel_names),
          LabelMap(grid, std::move(truth)), config};
}

double analytic_class_volume(const PhantomConfig& config, std::uint8_t label) {
  config.validate();
  const double pi = std::numbers::pi;
  double total = 0;
  for (int z = 0; z < config.dims.nz; ++z) {
    const double s = slice_scale(config, z);
    const double rl = config.leg_radius_mm * s, rm = config.muscle_radius_mm * s,
                 rb = config.bone_radius_mm * s;
    double area;
    if (label == 1) {
      area = 2 * pi * (rl * rl - rm * rm);
    } else if (label == 2) {
      area = 2 * pi * (rm * rm - rb * rb);
    } else if (label == 0) {
      area = config.dims.nx * config.spacing.sx * config.dims.ny * config.spacing.sy -
             2 * pi * (rl * rl - rb * rb);
    } else {
      fail(ErrorCode::UnknownClass, "phantom has no label " + std::to_string(label));
    }
    total += area * config.spacing.sz;
  }
  return total;
}

std::vector<PhantomConfig> cohort_configs(const CohortConfig& config) {
  if (config.count < 1) fail(ErrorCode::InvalidArgument, "cohort count must be >= 1");
  if (!(config.gain_jitter >= 0 && config.gain_jitter < 1) || !(config.offset_jitter >= 0) ||
      !(config.geometry_jitter >= 0 && config.geometry_jitter < 0.5))
    fail(ErrorCode::InvalidArgument, "cohort jitter out of range");
  config.base.validate();
  std::uint64_t state = config.master_seed;
  std::vector<PhantomConfig> out;
  const std::size_t C = config.base.channel_names.size();
  for (int k = 0; k < config.count; ++k) {
    PhantomConfig m = config.base;
    m.seed = splitmix64(state);
    std::mt19937_64 rng(splitmix64(state));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    if (config.gain_jitter > 0 || config.offset_jitter > 0) {
      m.gain.resize(C);
      m.offset.resize(C);
      for (std::size_t c = 0; c < C; ++c) {
        m.gain[c] = channel_or(config.base.gain, c, 1.0) * (1.0 + config.gain_jitter * u(rng));
        m.offset[c] = channel_or(config.base.offset, c, 0.0) + config.offset_jitter * u(rng);
      }
    }
    if (config.geometry_jitter > 0) {
      const double j = config.geometry_jitter;
      const double wx = m.dims.nx * m.spacing.sx, wy = m.dims.ny * m.spacing.sy;
      const double max_leg = std::min({m.leg_separation_mm / 2.0 - 2.0,
                                       wx / 2.0 - m.leg_separation_mm / 2.0 - 1.0, wy / 2.0 - 1.0});
      const double scale = 1.0 + j * u(rng);
      const double frac = (m.muscle_radius_mm / m.leg_radius_mm) * (1.0 + 0.5 * j * u(rng));
      m.leg_radius_mm = std::min(m.leg_radius_mm * scale, max_leg);
      m.muscle_radius_mm = std::min(m.leg_radius_mm * frac, m.leg_radius_mm - 3.0);
      m.bone_radius_mm = std::min(m.bone_radius_mm * scale, m.muscle_radius_mm / 2.0);
      m.taper = std::clamp(m.taper * (1.0 + j * u(rng)), 0.0, 0.9);
    }
    m.validate();
    out.push_back(std::move(m));
  }
  return out;
}

std::filesystem::path write_cohort(const CohortConfig& config, const std::filesystem::path& dir) {
  const auto members = cohort_configs(config);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string());
  KeyValueFile manifest;
  manifest.set("cohort.count", config.count);
  manifest.set("cohort.master_seed", std::to_string(config.master_seed));
  manifest.set("cohort.gain_jitter", config.gain_jitter);
  manifest.set("cohort.offset_jitter", config.offset_jitter);
  manifest.set("cohort.geometry_jitter", config.geometry_jitter);
  for (std::size_t k = 0; k < members.size(); ++k) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "member_%03zu", k);
    const Phantom ph = generate(members[k]);
    std::vector<std::string> files;
    for (std::size_t c = 0; c < ph.image.channel_count(); ++c) {
      const std::string name = std::string(tag) + "_" + ph.image.names()[c] + ".raw";
      save_volume(ph.image.channel(c), dir / name);
      files.push_back(name);
    }
    const std::string truth = std::string(tag) + "_truth.raw";
    save_labels(ph.truth, dir / truth);
    const std::string cfg = std::string(tag) + ".cfg";
    members[k].to_keyvalue().save(dir / cfg);
    manifest.set(std::string(tag) + ".seed", std::to_string(members[k].seed));
    manifest.set(std::string(tag) + ".channels", files);
    manifest.set(std::string(tag) + ".truth", truth);
    manifest.set(std::string(tag) + ".config", cfg);
  }
  const auto path = dir / "manifest.txt";
  manifest.save(path);
  return path;
}

}  // namespace fcseg
