#include "fcseg/fcseg.h"

#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "fcseg/affinity.hpp"
#include "fcseg/evaluation.hpp"
#include "fcseg/fusion.hpp"
#include "fcseg/fuzzy_connectedness.hpp"
#include "fcseg/keyvalue.hpp"
#include "fcseg/phantom.hpp"
#include "fcseg/pipeline.hpp"
#include "fcseg/seeding.hpp"
#include "fcseg/volume_io.hpp"

struct fcseg_image {
  fcseg::MultiContrastVolume mcv;
};
struct fcseg_labels {
  fcseg::LabelMap map;
};
struct fcseg_seeds {
  fcseg::SeedSet set;
};
struct fcseg_result {
  fcseg::FCResult fc;
  std::vector<std::string> channel_names;
};
struct fcseg_config {
  fcseg::KeyValueFile kv;
  std::filesystem::path base_dir;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_kind;

fcseg_status record(fcseg_status status, std::string kind, std::string message) {
  g_kind = std::move(kind);
  g_error = std::move(message);
  return status;
}

fcseg_status from_category(fcseg::ErrorCategory c) {
  switch (c) {
    case fcseg::ErrorCategory::Config: return FCSEG_ERR_CONFIG;
    case fcseg::ErrorCategory::Data: return FCSEG_ERR_DATA;
    case fcseg::ErrorCategory::Algorithm: return FCSEG_ERR_ALGORITHM;
  }
  return FCSEG_ERR_INTERNAL;
}

// Every entry point funnels through here so no exception crosses the C boundary.
template <class Fn>
fcseg_status guard(Fn&& fn) noexcept {
  try {
    fn();
    return FCSEG_OK;
  } catch (const fcseg::Error& e) {
    return record(from_category(e.category()), fcseg::to_string(e.code()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return record(FCSEG_ERR_DATA, "io-failure", e.what());
  } catch (const std::bad_alloc&) {
    return record(FCSEG_ERR_INTERNAL, "out-of-memory", "out of memory");
  } catch (const std::exception& e) {
    return record(FCSEG_ERR_INTERNAL, "internal", e.what());
  } catch (...) {
    return record(FCSEG_ERR_INTERNAL, "internal", "unknown failure");
  }
}

void need(const void* p, const char* what) {
  if (!p) fcseg::fail(fcseg::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

fcseg::Grid grid_from(const int dims[3], const double spacing[3]) {
  need(dims, "dims");
  const fcseg::Spacing sp = spacing ? fcseg::Spacing{spacing[0], spacing[1], spacing[2]}
                                    : fcseg::Spacing{};
  return fcseg::Grid({dims[0], dims[1], dims[2]}, sp);
}

void put_dims(const fcseg::Grid& grid, int dims[3]) {
  need(dims, "dims");
  dims[0] = grid.dims().nx;
  dims[1] = grid.dims().ny;
  dims[2] = grid.dims().nz;
}

void need_capacity(size_t have, size_t want) {
  if (have < want)
    fcseg::fail(fcseg::ErrorCode::InvalidArgument,
                "output buffer holds " + std::to_string(have) + " values, " +
                    std::to_string(want) + " needed");
}

fcseg::PipelineConfig parse_config(const fcseg_config* config) {
  need(config, "config");
  return fcseg::PipelineConfig::from_keyvalue(config->kv, config->base_dir);
}

struct WarningSink {
  fcseg_warning_fn fn;
  void* user;
};

}  // namespace

extern "C" {

const char* fcseg_version(void) { return "1.0.0"; }
const char* fcseg_last_error(void) { return g_error.c_str(); }
const char* fcseg_last_error_kind(void) { return g_kind.c_str(); }

void fcseg_set_warning_handler(fcseg_warning_fn fn, void* user) {
  if (!fn) {
    fcseg::set_warning_handler({});
    return;
  }
  const WarningSink sink{fn, user};
  fcseg::set_warning_handler([sink](std::string_view msg) {
    const std::string text(msg);
    sink.fn(text.c_str(), sink.user);
  });
}

fcseg_status fcseg_image_create(const int dims[3], const double spacing[3], int channels,
                                const char* const* names, const double* data, fcseg_image** out) {
  return guard([&] {
    need(out, "out");
    need(data, "data");
    if (channels < 1) fcseg::fail(fcseg::ErrorCode::InvalidArgument, "channels must be >= 1");
    const auto grid = grid_from(dims, spacing);
    std::vector<fcseg::Volume> vols;
    std::vector<std::string> labels;
    for (int c = 0; c < channels; ++c) {
      const double* begin = data + static_cast<size_t>(c) * grid.size();
      vols.emplace_back(grid, std::vector<double>(begin, begin + grid.size()));
      labels.push_back(names && names[c] ? names[c] : "channel" + std::to_string(c));
    }
    *out = new fcseg_image{fcseg::MultiContrastVolume(std::move(vols), std::move(labels))};
  });
}

fcseg_status fcseg_image_load(int channels, const char* const* files, const char* const* names,
                              fcseg_image** out) {
  return guard([&] {
    need(out, "out");
    need(files, "files");
    if (channels < 1) fcseg::fail(fcseg::ErrorCode::InvalidArgument, "channels must be >= 1");
    std::vector<fcseg::Volume> vols;
    std::vector<std::string> labels;
    for (int c = 0; c < channels; ++c) {
      need(files[c], "file name");
      vols.push_back(fcseg::load_volume(files[c]));
      labels.push_back(names && names[c] ? names[c]
                                         : std::filesystem::path(files[c]).stem().string());
    }
    *out = new fcseg_image{fcseg::MultiContrastVolume(std::move(vols), std::move(labels))};
  });
}

void fcseg_image_free(fcseg_image* image) { delete image; }

fcseg_status fcseg_image_dims(const fcseg_image* image, int dims[3]) {
  return guard([&] {
    need(image, "image");
    put_dims(image->mcv.grid(), dims);
  });
}

int fcseg_image_channels(const fcseg_image* image) {
  return image ? static_cast<int>(image->mcv.channel_count()) : 0;
}

fcseg_status fcseg_image_channel(const fcseg_image* image, int c, double* out, size_t n) {
  return guard([&] {
    need(image, "image");
    need(out, "out");
    if (c < 0 || static_cast<size_t>(c) >= image->mcv.channel_count())
      fcseg::fail(fcseg::ErrorCode::InvalidArgument, "channel index out of range");
    const auto d = image->mcv.channel(static_cast<size_t>(c)).data();
    need_capacity(n, d.size());
    std::copy(d.begin(), d.end(), out);
  });
}

fcseg_status fcseg_labels_create(const int dims[3], const double spacing[3], const uint8_t* data,
                                 fcseg_labels** out) {
  return guard([&] {
    need(out, "out");
    need(data, "data");
    const auto grid = grid_from(dims, spacing);
    *out = new fcseg_labels{fcseg::LabelMap(grid, std::vector<uint8_t>(data, data + grid.size()))};
  });
}

fcseg_status fcseg_labels_load(const char* path, fcseg_labels** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new fcseg_labels{fcseg::load_labels(path)};
  });
}

fcseg_status fcseg_labels_save(const fcseg_labels* labels, const char* path) {
  return guard([&] {
    need(labels, "labels");
    need(path, "path");
    fcseg::save_labels(labels->map, path);
  });
}

void fcseg_labels_free(fcseg_labels* labels) { delete labels; }

fcseg_status fcseg_labels_dims(const fcseg_labels* labels, int dims[3]) {
  return guard([&] {
    need(labels, "labels");
    put_dims(labels->map.grid(), dims);
  });
}

fcseg_status fcseg_labels_copy(const fcseg_labels* labels, uint8_t* out, size_t n) {
  return guard([&] {
    need(labels, "labels");
    need(out, "out");
    const auto l = labels->map.labels();
    need_capacity(n, l.size());
    std::copy(l.begin(), l.end(), out);
  });
}

fcseg_status fcseg_phantom_generate(const char* config_text, uint64_t seed, fcseg_image** image,
                                    fcseg_labels** truth) {
  return guard([&] {
    need(image, "image");
    fcseg::PhantomConfig cfg;
    if (config_text) cfg = fcseg::PhantomConfig::from_keyvalue(fcseg::KeyValueFile::parse(config_text));
    cfg.seed = seed;
    auto ph = fcseg::generate(cfg);
    auto img = std::make_unique<fcseg_image>(fcseg_image{std::move(ph.image)});
    if (truth) *truth = new fcseg_labels{std::move(ph.truth)};
    *image = img.release();
  });
}

fcseg_status fcseg_seeds_ap(const fcseg_image* image, int seeds_per_class, int min_component_size,
                            fcseg_seeds** out) {
  return guard([&] {
    need(image, "image");
    need(out, "out");
    fcseg::APSeedOptions opts;
    opts.seeds_per_class = seeds_per_class;
    opts.min_component_size = min_component_size;
    *out = new fcseg_seeds{fcseg::ap_seeds(image->mcv, opts).seeds};
  });
}

fcseg_status fcseg_seeds_morphology(const fcseg_image* image, int channel, const double fat[2],
                                    const double muscle[2], const double* background,
                                    int erosion_radius, int min_component_size,
                                    int seeds_per_class, fcseg_seeds** out) {
  return guard([&] {
    need(image, "image");
    need(out, "out");
    need(fat, "fat");
    need(muscle, "muscle");
    if (channel < 0 || static_cast<size_t>(channel) >= image->mcv.channel_count())
      fcseg::fail(fcseg::ErrorCode::InvalidArgument, "channel index out of range");
    fcseg::MorphologyOptions opts;
    opts.fat = {fat[0], fat[1]};
    opts.muscle = {muscle[0], muscle[1]};
    if (background) opts.background = fcseg::ThresholdInterval{background[0], background[1]};
    opts.erosion_radius = erosion_radius;
    opts.min_component_size = min_component_size;
    opts.seeds_per_class = seeds_per_class;
    *out = new fcseg_seeds{
        fcseg::morphology_seeds(image->mcv.channel(static_cast<size_t>(channel)), opts).seeds};
  });
}

fcseg_status fcseg_seeds_load(const char* path, const int dims[3], fcseg_seeds** out) {
  return guard([&] {
    need(path, "path");
    need(dims, "dims");
    need(out, "out");
    *out = new fcseg_seeds{fcseg::load_manual_seeds(path, fcseg::ClassRegistry::thigh(),
                                                    {dims[0], dims[1], dims[2]})};
  });
}

fcseg_status fcseg_seeds_save(const fcseg_seeds* seeds, const char* path) {
  return guard([&] {
    need(seeds, "seeds");
    need(path, "path");
    seeds->set.save(path);
  });
}

void fcseg_seeds_free(fcseg_seeds* seeds) { delete seeds; }

size_t fcseg_seeds_count(const fcseg_seeds* seeds) { return seeds ? seeds->set.size() : 0; }

fcseg_status fcseg_seeds_get(const fcseg_seeds* seeds, size_t i, uint8_t* class_id, int xyz[3]) {
  return guard([&] {
    need(seeds, "seeds");
    if (i >= seeds->set.size()) fcseg::fail(fcseg::ErrorCode::InvalidArgument, "seed index out of range");
    const auto& s = seeds->set.entries()[i];
    if (class_id) *class_id = s.class_id;
    if (xyz) {
      xyz[0] = s.coord.x;
      xyz[1] = s.coord.y;
      xyz[2] = s.coord.z;
    }
  });
}

fcseg_status fcseg_compute_fc(const double* data, const int dims[3], const double spacing[3],
                              double m, double sigma_psi, double sigma_phi, const int* seeds_xyz,
                              size_t n_seeds, int adjacency, double* out) {
  return guard([&] {
    need(data, "data");
    need(out, "out");
    if (n_seeds > 0) need(seeds_xyz, "seeds");
    const auto grid = grid_from(dims, spacing);
    const fcseg::Volume vol(grid, std::vector<double>(data, data + grid.size()));
    std::vector<fcseg::VoxelCoord> seeds;
    for (size_t i = 0; i < n_seeds; ++i)
      seeds.push_back({seeds_xyz[3 * i], seeds_xyz[3 * i + 1], seeds_xyz[3 * i + 2]});
    const auto fm = fcseg::compute_fc(vol, {m, sigma_psi, sigma_phi}, seeds,
                                      fcseg::adjacency_from_int(adjacency));
    std::copy(fm.membership().begin(), fm.membership().end(), out);
  });
}

fcseg_status fcseg_segment(const fcseg_image* image, const fcseg_seeds* seeds,
                           const double* weights, int adjacency, int workers,
                           fcseg_result** out) {
  return guard([&] {
    need(image, "image");
    need(seeds, "seeds");
    need(out, "out");
    const size_t channels = image->mcv.channel_count();
    fcseg::ContrastWeights w = fcseg::ContrastWeights::uniform(channels);
    if (weights) w.w.assign(weights, weights + channels);
    fcseg::FCOptions opts;
    opts.adjacency = fcseg::adjacency_from_int(adjacency);
    opts.workers = workers;
    const auto params = fcseg::estimate_param_table(image->mcv, seeds->set);
    *out = new fcseg_result{fcseg::multi_object_segment(image->mcv, params, w, seeds->set, opts),
                            image->mcv.names()};
  });
}

void fcseg_result_free(fcseg_result* result) { delete result; }

fcseg_status fcseg_result_labels(const fcseg_result* result, fcseg_labels** out) {
  return guard([&] {
    need(result, "result");
    need(out, "out");
    *out = new fcseg_labels{result->fc.labels};
  });
}

fcseg_status fcseg_result_contrast_labels(const fcseg_result* result, int channel,
                                          fcseg_labels** out) {
  return guard([&] {
    need(result, "result");
    need(out, "out");
    if (channel < 0 || static_cast<size_t>(channel) >= result->fc.contrast_labels.size())
      fcseg::fail(fcseg::ErrorCode::InvalidArgument, "channel index out of range");
    *out = new fcseg_labels{result->fc.contrast_labels[static_cast<size_t>(channel)]};
  });
}

fcseg_status fcseg_result_membership(const fcseg_result* result, uint8_t class_id, double* out,
                                     size_t n) {
  return guard([&] {
    need(result, "result");
    need(out, "out");
    const auto& m = result->fc.memberships[result->fc.registry.index_of(class_id)].membership();
    need_capacity(n, m.size());
    std::copy(m.begin(), m.end(), out);
  });
}

fcseg_status fcseg_result_decision(const fcseg_result* result, fcseg_labels** out) {
  return guard([&] {
    need(result, "result");
    need(out, "out");
    fcseg::ContrastLabels roles;
    for (size_t c = 0; c < result->fc.contrast_labels.size(); ++c) {
      auto& slot = [&]() -> std::optional<fcseg::LabelMap>& {
        switch (fcseg::channel_role(result->channel_names[c])) {
          case fcseg::ChannelRole::Water: return roles.mri1;
          case fcseg::ChannelRole::Fat: return roles.mri3;
          case fcseg::ChannelRole::WaterFat: break;
        }
        return roles.mri2;
      }();
      if (!slot) slot = result->fc.contrast_labels[c];
    }
    *out = new fcseg_labels{fcseg::decision_fuse(roles)};
  });
}

int fcseg_can_fuse(int mri1, int mri2, int mri3) {
  return fcseg::can_fuse({mri1 != 0, mri2 != 0, mri3 != 0}) ? 1 : 0;
}

fcseg_status fcseg_contrast_weights(const double* dsc, size_t n, double* out) {
  return guard([&] {
    need(dsc, "dsc");
    need(out, "out");
    const auto w = fcseg::compute_contrast_weights(std::vector<double>(dsc, dsc + n));
    std::copy(w.w.begin(), w.w.end(), out);
  });
}

fcseg_status fcseg_dice(const fcseg_labels* pred, const fcseg_labels* truth, uint8_t class_id,
                        double* out) {
  return guard([&] {
    need(pred, "pred");
    need(truth, "truth");
    need(out, "out");
    fcseg::require_same_grid(pred->map.grid(), truth->map.grid(), "label maps");
    *out = fcseg::dice(pred->map.mask_of(class_id), truth->map.mask_of(class_id));
  });
}

fcseg_status fcseg_evaluate(const fcseg_labels* pred, const fcseg_labels* truth,
                            const char* image_name, const char* csv_path,
                            const char* summary_path) {
  return guard([&] {
    need(pred, "pred");
    need(truth, "truth");
    need(csv_path, "csv_path");
    const auto metrics =
        fcseg::evaluate_labels(pred->map, truth->map, fcseg::ClassRegistry::thigh());
    fcseg::EvaluationReport report;
    report.add_metrics(image_name ? image_name : "image", metrics);
    report.save_csv(csv_path);
    if (summary_path) report.summary().save(summary_path);
  });
}

fcseg_status fcseg_config_default(fcseg_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new fcseg_config{fcseg::KeyValueFile::parse(fcseg::reference_config()),
                            std::filesystem::current_path()};
  });
}

fcseg_status fcseg_config_load(const char* path, fcseg_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    const std::filesystem::path p(path);
    auto kv = fcseg::KeyValueFile::load(p);
    // Parse once so that a malformed file fails here, not at run time.
    fcseg::PipelineConfig::from_keyvalue(kv, p.parent_path());
    *out = new fcseg_config{std::move(kv), p.parent_path()};
  });
}

fcseg_status fcseg_config_set(fcseg_config* config, const char* key, const char* value) {
  return guard([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    if (!std::strchr(key, '.'))
      fcseg::fail(fcseg::ErrorCode::ConfigError, std::string("key '") + key + "' lacks a section");
    config->kv.set(key, std::string(value));
  });
}

fcseg_status fcseg_config_save(const fcseg_config* config, const char* path) {
  return guard([&] {
    need(path, "path");
    parse_config(config).to_keyvalue().save(path);
  });
}

void fcseg_config_free(fcseg_config* config) { delete config; }

const char* fcseg_reference_config(void) {
  static const std::string text = fcseg::reference_config();
  return text.c_str();
}

fcseg_status fcseg_run(const fcseg_config* config, fcseg_stage last) {
  return guard([&] {
    const auto cfg = parse_config(config);
    fcseg::PipelineStage stage = fcseg::PipelineStage::Segment;
    switch (last) {
      case FCSEG_STAGE_PREPROCESS: stage = fcseg::PipelineStage::Preprocess; break;
      case FCSEG_STAGE_SEEDING: stage = fcseg::PipelineStage::Seeding; break;
      case FCSEG_STAGE_SEGMENT: stage = fcseg::PipelineStage::Segment; break;
      default: fcseg::fail(fcseg::ErrorCode::InvalidArgument, "unknown stage");
    }
    fcseg::run_pipeline(cfg, stage);
  });
}

fcseg_status fcseg_run_benchmark(const fcseg_config* config) {
  return guard([&] { fcseg::run_benchmark(parse_config(config)); });
}

fcseg_status fcseg_write_cohort(const fcseg_config* config, const char* dir) {
  return guard([&] {
    need(dir, "dir");
    const auto cfg = parse_config(config);
    fcseg::CohortConfig cohort = cfg.cohort;
    cohort.master_seed = cfg.seed;
    fcseg::write_cohort(cohort, dir);
  });
}

}  // extern "C"
