#include "fcseg/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include "fcseg/fusion.hpp"
#include "fcseg/volume_io.hpp"
#include "parallel.hpp"

namespace fcseg {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class Fn>
auto in_stage(const std::string& stage, const std::string& subject, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    fail(e.code(), "stage '" + stage + "'" + (subject.empty() ? "" : " [" + subject + "]") + ": " +
                       e.detail());
  }
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

SeedingMethod seeding_from(const std::string& s) {
  const auto v = lower(s);
  if (v == "ap") return SeedingMethod::AP;
  if (v == "morphology") return SeedingMethod::Morphology;
  if (v == "manual") return SeedingMethod::Manual;
  fail(ErrorCode::ConfigError, "seeding.method must be ap, morphology or manual, not '" + s + "'");
}

const char* to_string(SeedingMethod m) {
  switch (m) {
    case SeedingMethod::AP: return "ap";
    case SeedingMethod::Morphology: return "morphology";
    case SeedingMethod::Manual: return "manual";
  }
  return "?";
}

InputSource source_from(const std::string& s) {
  const auto v = lower(s);
  if (v == "phantom") return InputSource::Phantom;
  if (v == "files") return InputSource::Files;
  if (v == "manifest") return InputSource::Manifest;
  fail(ErrorCode::ConfigError, "input.source must be phantom, files or manifest, not '" + s + "'");
}

const char* to_string(InputSource s) {
  switch (s) {
    case InputSource::Phantom: return "phantom";
    case InputSource::Files: return "files";
    case InputSource::Manifest: return "manifest";
  }
  return "?";
}

ThresholdInterval interval_from(const KeyValueFile& kv, const std::string& key,
                                ThresholdInterval fallback) {
  if (!kv.has(key)) return fallback;
  const auto v = kv.get_doubles(key);
  if (v.size() != 2) fail(ErrorCode::ConfigError, "'" + key + "' needs two values: lo hi");
  return {v[0], v[1]};
}

std::vector<std::filesystem::path> paths_from(const std::vector<std::string>& words) {
  return {words.begin(), words.end()};
}

std::vector<std::string> path_words(const std::vector<std::filesystem::path>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(p.string());
  return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCode::ConfigError, "key '" + key + "': cannot parse '" + text + "'");
}

ContrastWeights resolve_weights(const PipelineConfig& config, std::size_t channels) {
  ContrastWeights w;
  if (!config.weights.empty()) {
    w.w = config.weights;
  } else if (!config.contrast_dsc.empty()) {
    w = compute_contrast_weights(config.contrast_dsc);
  } else {
    w = ContrastWeights::uniform(channels);
  }
  w.validate();
  if (w.w.size() != channels)
    fail(ErrorCode::ConfigError, std::to_string(w.w.size()) + " contrast weights for " +
                                     std::to_string(channels) + " channels");
  return w;
}

ContrastLabels by_role(const MultiContrastVolume& image, const std::vector<LabelMap>& labels) {
  ContrastLabels out;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto& slot = [&]() -> std::optional<LabelMap>& {
      switch (channel_role(image.names()[c])) {
        case ChannelRole::Water: return out.mri1;
        case ChannelRole::WaterFat: return out.mri2;
        case ChannelRole::Fat: return out.mri3;
      }
      return out.mri2;
    }();
    if (!slot) slot = labels[c];
  }
  return out;
}

SeedingResult run_seeding(const PipelineConfig& config, const MultiContrastVolume& image) {
  switch (config.seeding) {
    case SeedingMethod::AP:
      return ap_seeds(image, config.ap);
    case SeedingMethod::Morphology: {
      const int ch = image.find(config.morphology_channel);
      if (ch < 0)
        fail(ErrorCode::ConfigError,
             "morphology channel '" + config.morphology_channel + "' is not among the inputs");
      return morphology_seeds(image.channel(static_cast<std::size_t>(ch)), config.morphology);
    }
    case SeedingMethod::Manual: {
      if (config.manual_seeds.empty())
        fail(ErrorCode::ConfigError, "seeding.manual_file is required for manual seeding");
      SeedingResult r;
      r.seeds = load_manual_seeds(config.manual_seeds, ClassRegistry::thigh(), image.grid().dims());
      r.class_map = LabelMap(image.grid(), std::vector<std::uint8_t>(image.grid().size(), 0));
      return r;
    }
  }
  fail(ErrorCode::ConfigError, "unknown seeding method");
}

ParamTable resolve_params(const PipelineConfig& config, const MultiContrastVolume& image,
                          const SeedSet& seeds) {
  if (config.params_file.empty()) return estimate_param_table(image, seeds);
  return ParamTable::load(KeyValueFile::load(config.params_file), seeds.registry(), image.names());
}

void add_metrics(EvaluationReport& report, const std::string& image, const std::string& prefix,
                 const std::vector<ClassMetrics>& metrics) {
  for (const auto& m : metrics) {
    report.add(image, m.name, prefix + "dice", m.dice);
    if (m.sens_spec.sensitivity)
      report.add(image, m.name, prefix + "sensitivity", *m.sens_spec.sensitivity);
    if (m.sens_spec.specificity)
      report.add(image, m.name, prefix + "specificity", *m.sens_spec.specificity);
    if (prefix.empty()) {
      report.add(image, m.name, "volume_mm3", m.volume_mm3);
      report.add(image, m.name, "truth_volume_mm3", m.truth_volume_mm3);
    }
  }
}

// Standardization is trained per channel over the cohort unless a model
// directory is configured. A one-subject run without models skips it.
std::vector<MultiContrastVolume> preprocess_subjects(const PipelineConfig& config,
                                                     const std::vector<Subject>& subjects,
                                                     std::vector<StandardizationModel>& models) {
  std::vector<MultiContrastVolume> out;
  if (!config.preprocess_enabled) {
    for (const auto& s : subjects) out.push_back(s.image);
    return out;
  }
  const auto& names = subjects.front().image.names();
  const std::size_t C = names.size();
  std::vector<std::vector<Volume>> cleaned(subjects.size());
  detail::parallel_for(subjects.size(), config.workers, [&](std::size_t k) {
    cleaned[k] = in_stage("preprocess", subjects[k].name, [&] {
      std::vector<Volume> vols;
      for (std::size_t c = 0; c < C; ++c)
        vols.push_back(clean_volume(subjects[k].image.channel(c), config.preprocess));
      return vols;
    });
  });
  models.assign(C, StandardizationModel{});
  bool standardize = config.preprocess.standardize_enabled;
  if (standardize && config.standardization_dir.empty() && subjects.size() < 2) {
    warn("standardization skipped: a single subject and no trained model (preprocess.model_dir)");
    standardize = false;
  }
  if (standardize) {
    in_stage("preprocess", "", [&] {
      for (std::size_t c = 0; c < C; ++c) {
        if (!config.standardization_dir.empty()) {
          models[c] = StandardizationModel::load(config.standardization_dir / (names[c] + ".model"));
          continue;
        }
        std::vector<IntensityHistogram> hists;
        for (const auto& vols : cleaned)
          hists.push_back(IntensityHistogram::from_volume(vols[c], config.preprocess.histogram_bins));
        models[c] = train_standardization(hists, default_landmark_percentiles(),
                                          config.preprocess.s_min, config.preprocess.s_max);
      }
    });
  } else {
    models.clear();
  }
  for (std::size_t k = 0; k < subjects.size(); ++k) {
    if (standardize)
      for (std::size_t c = 0; c < C; ++c)
        cleaned[k][c] = in_stage("preprocess", subjects[k].name,
                                 [&] { return apply_standardization(cleaned[k][c], models[c]); });
    out.emplace_back(std::move(cleaned[k]), names);
  }
  return out;
}

void write_subject(const SubjectResult& r, const std::filesystem::path& dir, PipelineStage last,
                   const PipelineConfig& config, std::vector<std::filesystem::path>& written) {
  std::filesystem::create_directories(dir);
  auto record = [&](const std::filesystem::path& p) {
    written.push_back(p);
    if (p.extension() == ".raw") written.push_back(header_path(p));
  };
  const auto& names = r.preprocessed.names();
  if (last == PipelineStage::Preprocess) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      const auto p = dir / (names[c] + ".raw");
      save_volume(r.preprocessed.channel(c), p);
      record(p);
    }
    return;
  }

  KeyValueFile meta;
  meta.set("subject.name", r.name);
  meta.set("subject.channels", names);
  meta.set("subject.dims", std::vector<long long>{r.preprocessed.grid().dims().nx,
                                                  r.preprocessed.grid().dims().ny,
                                                  r.preprocessed.grid().dims().nz});
  meta.set("run.seed", std::to_string(config.seed));
  meta.set("seeding.method", std::string(to_string(config.seeding)));
  for (const auto& c : r.seeding.seeds.registry().classes())
    meta.set("seeding.count_" + c.name,
             static_cast<long long>(r.seeding.seeds.coords_of(c.id).size()));
  if (r.seeding.ap) {
    meta.set("seeding.ap_exemplars", static_cast<long long>(r.seeding.ap->exemplars.size()));
    meta.set("seeding.ap_iterations", r.seeding.ap->iterations);
    meta.set("seeding.ap_converged", r.seeding.ap->converged);
    meta.set("seeding.ap_preference", r.seeding.ap->preference);
  }
  r.seeding.seeds.save(dir / "seeds.txt");
  record(dir / "seeds.txt");

  if (last == PipelineStage::Segment) {
    save_labels(r.fc.labels, dir / "labels.raw");
    record(dir / "labels.raw");
    if (r.decision) {
      save_labels(*r.decision, dir / "labels_decision.raw");
      record(dir / "labels_decision.raw");
    }
    for (std::size_t c = 0; c < r.fc.contrast_labels.size(); ++c) {
      const auto p = dir / ("labels_" + names[c] + ".raw");
      save_labels(r.fc.contrast_labels[c], p);
      record(p);
    }
    if (config.save_fuzzy)
      for (std::size_t k = 0; k < r.fc.memberships.size(); ++k) {
        const auto p = dir / ("fuzzy_" + r.fc.registry.classes()[k].name + ".raw");
        save_fuzzy(r.fc.memberships[k], p);
        record(p);
      }
    KeyValueFile params;
    r.fc.params.store(params, r.fc.registry, names);
    params.save(dir / "params.txt");
    record(dir / "params.txt");
    meta.set("segment.weights", r.fc.weights.w);
    meta.set("segment.adjacency", static_cast<int>(config.fc.adjacency));
    meta.set("fusion.decision", r.decision.has_value());
  } else if (config.seeding != SeedingMethod::Manual) {
    save_labels(r.seeding.class_map, dir / "seed_classes.raw");
    record(dir / "seed_classes.raw");
  }
  meta.save(dir / "metadata.txt");
  record(dir / "metadata.txt");
}

}  // namespace

PipelineConfig PipelineConfig::from_keyvalue(const KeyValueFile& kv) {
  PipelineConfig c;
  c.source = source_from(kv.get_string("input.source", "phantom"));
  if (kv.has("input.channels")) c.channel_names = kv.get_words("input.channels");
  if (kv.has("input.files")) c.channel_files = paths_from(kv.get_words("input.files"));
  c.truth_file = kv.get_string("input.truth", "");
  c.manifest_file = kv.get_string("input.manifest", "");

  c.seed = kv.has("run.seed") ? parse_u64("run.seed", kv.get_string("run.seed")) : c.seed;
  c.workers = static_cast<int>(kv.get_int("run.workers", c.workers));
  if (c.workers < 0) fail(ErrorCode::ConfigError, "run.workers must be >= 0");

  c.cohort.base = PhantomConfig::from_keyvalue(kv);
  c.cohort.count = static_cast<int>(kv.get_int("cohort.count", c.cohort.count));
  c.cohort.gain_jitter = kv.get_double("cohort.gain_jitter", c.cohort.gain_jitter);
  c.cohort.offset_jitter = kv.get_double("cohort.offset_jitter", c.cohort.offset_jitter);
  c.cohort.geometry_jitter = kv.get_double("cohort.geometry_jitter", c.cohort.geometry_jitter);
  c.cohort.master_seed = c.seed;

  auto& p = c.preprocess;
  c.preprocess_enabled = kv.get_bool("preprocess.enabled", c.preprocess_enabled);
  p.bias_enabled = kv.get_bool("preprocess.bias", p.bias_enabled);
  p.bias.fwhm_mm = kv.get_double("preprocess.bias_fwhm_mm", p.bias.fwhm_mm);
  p.bias.tissue_classes =
      static_cast<int>(kv.get_int("preprocess.bias_tissue_classes", p.bias.tissue_classes));
  p.bias.iterations = static_cast<int>(kv.get_int("preprocess.bias_iterations", p.bias.iterations));
  p.denoise_enabled = kv.get_bool("preprocess.denoise", p.denoise_enabled);
  p.denoise_iterations =
      static_cast<int>(kv.get_int("preprocess.denoise_iterations", p.denoise_iterations));
  p.conductance = kv.get_double("preprocess.conductance", p.conductance);
  p.standardize_enabled = kv.get_bool("preprocess.standardize", p.standardize_enabled);
  p.s_min = kv.get_double("preprocess.s_min", p.s_min);
  p.s_max = kv.get_double("preprocess.s_max", p.s_max);
  p.histogram_bins = static_cast<int>(kv.get_int("preprocess.histogram_bins", p.histogram_bins));
  c.standardization_dir = kv.get_string("preprocess.model_dir", "");

  c.seeding = seeding_from(kv.get_string("seeding.method", "ap"));
  const int per_class = static_cast<int>(kv.get_int("seeding.seeds_per_class", 5));
  const int min_comp = static_cast<int>(kv.get_int("seeding.min_component_size", 100));
  c.ap.seeds_per_class = c.morphology.seeds_per_class = per_class;
  c.ap.min_component_size = c.morphology.min_component_size = min_comp;
  c.ap.ap.damping = kv.get_double("seeding.ap_damping", c.ap.ap.damping);
  c.ap.ap.max_iterations = static_cast<int>(kv.get_int("seeding.ap_max_iterations", c.ap.ap.max_iterations));
  c.ap.ap.convergence_window =
      static_cast<int>(kv.get_int("seeding.ap_convergence_window", c.ap.ap.convergence_window));
  const std::string pref = kv.get_string("seeding.ap_preference", "median");
  if (lower(pref) != "median") c.ap.ap.preference = kv.get_double("seeding.ap_preference");
  const long long samples = kv.get_int("seeding.ap_max_samples", static_cast<long long>(c.ap.max_samples));
  if (samples < 2) fail(ErrorCode::ConfigError, "seeding.ap_max_samples must be >= 2");
  c.ap.max_samples = static_cast<std::size_t>(samples);
  c.ap.ap.validate();
  c.morphology_channel = kv.get_string("seeding.morphology_channel", c.morphology_channel);
  c.morphology.fat = interval_from(kv, "seeding.morphology_fat", c.morphology.fat);
  c.morphology.muscle = interval_from(kv, "seeding.morphology_muscle", c.morphology.muscle);
  if (kv.has("seeding.morphology_background") &&
      lower(kv.get_string("seeding.morphology_background")) != "auto")
    c.morphology.background = interval_from(kv, "seeding.morphology_background", {});
  c.morphology.erosion_radius =
      static_cast<int>(kv.get_int("seeding.erosion_radius", c.morphology.erosion_radius));
  c.manual_seeds = kv.get_string("seeding.manual_file", "");

  try {
    c.fc.adjacency = adjacency_from_int(static_cast<int>(kv.get_int("segment.adjacency", 6)));
  } catch (const Error& e) {
    fail(ErrorCode::ConfigError, "segment.adjacency: " + e.detail());
  }
  c.fc.workers = static_cast<int>(kv.get_int("segment.workers", c.fc.workers));
  if (kv.has("segment.weights") && lower(kv.get_string("segment.weights")) != "uniform")
    c.weights = kv.get_doubles("segment.weights");
  if (kv.has("segment.contrast_dsc")) c.contrast_dsc = kv.get_doubles("segment.contrast_dsc");
  c.params_file = kv.get_string("segment.params", "");

  c.decision_fusion = kv.get_bool("fusion.decision", c.decision_fusion);
  c.evaluate = kv.get_bool("eval.enabled", c.evaluate);
  c.out_dir = kv.get_string("output.dir", c.out_dir.string());
  c.save_fuzzy = kv.get_bool("output.save_fuzzy", c.save_fuzzy);
  return c;
}

PipelineConfig PipelineConfig::from_keyvalue(const KeyValueFile& kv,
                                             const std::filesystem::path& base_dir) {
  auto c = from_keyvalue(kv);
  auto rebase = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base_dir / p;
  };
  for (auto& f : c.channel_files) rebase(f);
  rebase(c.truth_file);
  rebase(c.manifest_file);
  rebase(c.standardization_dir);
  rebase(c.manual_seeds);
  rebase(c.params_file);
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  return from_keyvalue(KeyValueFile::load(path), path.parent_path());
}

KeyValueFile PipelineConfig::to_keyvalue() const {
  KeyValueFile kv = cohort.base.to_keyvalue();
  kv.set("input.source", std::string(to_string(source)));
  if (!channel_names.empty()) kv.set("input.channels", channel_names);
  if (!channel_files.empty()) kv.set("input.files", path_words(channel_files));
  if (!truth_file.empty()) kv.set("input.truth", truth_file.string());
  if (!manifest_file.empty()) kv.set("input.manifest", manifest_file.string());
  kv.set("cohort.count", cohort.count);
  kv.set("cohort.gain_jitter", cohort.gain_jitter);
  kv.set("cohort.offset_jitter", cohort.offset_jitter);
  kv.set("cohort.geometry_jitter", cohort.geometry_jitter);
  kv.set("preprocess.enabled", preprocess_enabled);
  kv.set("preprocess.bias", preprocess.bias_enabled);
  kv.set("preprocess.bias_fwhm_mm", preprocess.bias.fwhm_mm);
  kv.set("preprocess.bias_tissue_classes", preprocess.bias.tissue_classes);
  kv.set("preprocess.bias_iterations", preprocess.bias.iterations);
  kv.set("preprocess.denoise", preprocess.denoise_enabled);
  kv.set("preprocess.denoise_iterations", preprocess.denoise_iterations);
  kv.set("preprocess.conductance", preprocess.conductance);
  kv.set("preprocess.standardize", preprocess.standardize_enabled);
  kv.set("preprocess.s_min", preprocess.s_min);
  kv.set("preprocess.s_max", preprocess.s_max);
  kv.set("preprocess.histogram_bins", preprocess.histogram_bins);
  if (!standardization_dir.empty()) kv.set("preprocess.model_dir", standardization_dir.string());
  kv.set("seeding.method", std::string(to_string(seeding)));
  kv.set("seeding.seeds_per_class", ap.seeds_per_class);
  kv.set("seeding.min_component_size", ap.min_component_size);
  kv.set("seeding.ap_damping", ap.ap.damping);
  kv.set("seeding.ap_max_iterations", ap.ap.max_iterations);
  kv.set("seeding.ap_convergence_window", ap.ap.convergence_window);
  if (ap.ap.preference)
    kv.set("seeding.ap_preference", *ap.ap.preference);
  else
    kv.set("seeding.ap_preference", "median");
  kv.set("seeding.ap_max_samples", static_cast<long long>(ap.max_samples));
  kv.set("seeding.morphology_channel", morphology_channel);
  kv.set("seeding.morphology_fat", std::vector<double>{morphology.fat.lo, morphology.fat.hi});
  kv.set("seeding.morphology_muscle", std::vector<double>{morphology.muscle.lo, morphology.muscle.hi});
  if (morphology.background)
    kv.set("seeding.morphology_background",
           std::vector<double>{morphology.background->lo, morphology.background->hi});
  else
    kv.set("seeding.morphology_background", "auto");
  kv.set("seeding.erosion_radius", morphology.erosion_radius);
  if (!manual_seeds.empty()) kv.set("seeding.manual_file", manual_seeds.string());
  kv.set("segment.adjacency", static_cast<int>(fc.adjacency));
  kv.set("segment.workers", fc.workers);
  if (weights.empty())
    kv.set("segment.weights", "uniform");
  else
    kv.set("segment.weights", weights);
  if (!contrast_dsc.empty()) kv.set("segment.contrast_dsc", contrast_dsc);
  if (!params_file.empty()) kv.set("segment.params", params_file.string());
  kv.set("fusion.decision", decision_fusion);
  kv.set("eval.enabled", evaluate);
  kv.set("output.dir", out_dir.string());
  kv.set("output.save_fuzzy", save_fuzzy);
  kv.set("run.workers", workers);
  kv.set("run.seed", std::to_string(seed));
  return kv;
}

std::string reference_config() {
  const PipelineConfig d;
  const PhantomConfig& ph = d.cohort.base;
  auto nums = [](const std::vector<double>& v) {
    std::string s;
    for (double x : v) s += (s.empty() ? "" : " ") + format_double(x);
    return s;
  };
  std::ostringstream o;
  o << "# fcseg pipeline configuration. Every key is listed with its default.\n"
    << "# Relative paths are resolved against this file's directory.\n\n"
    << "[input]\n"
    << "# phantom | files | manifest\n"
    << "source = phantom\n"
    << "# files: one raw volume per channel (each with a .hdr sidecar)\n"
    << "# channels = water waterfat fat\n"
    << "# files = water.raw waterfat.raw fat.raw\n"
    << "# truth = truth.raw\n"
    << "# manifest: cohort manifest written by 'fcseg phantom'\n"
    << "# manifest = cohort/manifest.txt\n\n"
    << "[phantom]\n"
    << "dims = " << ph.dims.nx << ' ' << ph.dims.ny << ' ' << ph.dims.nz << '\n'
    << "spacing = " << nums({ph.spacing.sx, ph.spacing.sy, ph.spacing.sz}) << '\n'
    << "leg_separation_mm = " << format_double(ph.leg_separation_mm) << '\n'
    << "leg_radius_mm = " << format_double(ph.leg_radius_mm) << '\n'
    << "muscle_radius_mm = " << format_double(ph.muscle_radius_mm) << '\n'
    << "bone_radius_mm = " << format_double(ph.bone_radius_mm) << '\n'
    << "taper = " << format_double(ph.taper) << '\n'
    << "channels = water waterfat fat\n"
    << "# per-channel means; declared values, not measurements\n"
    << "mean_background = " << nums(ph.means[0]) << '\n'
    << "mean_fat = " << nums(ph.means[1]) << '\n'
    << "mean_muscle = " << nums(ph.means[2]) << '\n'
    << "noise_sigma = " << format_double(ph.noise_sigma) << '\n'
    << "bias_amplitude = " << format_double(ph.bias_amplitude) << '\n'
    << "bias_fwhm_mm = " << format_double(ph.bias_fwhm_mm) << '\n'
    << "# gain = 1 1 1\n"
    << "# offset = 0 0 0\n\n"
    << "[cohort]\n"
    << "count = " << d.cohort.count << '\n'
    << "gain_jitter = " << format_double(d.cohort.gain_jitter) << '\n'
    << "offset_jitter = " << format_double(d.cohort.offset_jitter) << '\n'
    << "geometry_jitter = " << format_double(d.cohort.geometry_jitter) << "\n\n"
    << "[preprocess]\n"
    << "enabled = true\n"
    << "bias = true\n"
    << "bias_fwhm_mm = " << format_double(d.preprocess.bias.fwhm_mm) << '\n'
    << "bias_tissue_classes = " << d.preprocess.bias.tissue_classes << '\n'
    << "bias_iterations = " << d.preprocess.bias.iterations << '\n'
    << "denoise = true\n"
    << "denoise_iterations = " << d.preprocess.denoise_iterations << '\n'
    << "# 0 = 3 x estimated noise sd per image\n"
    << "conductance = " << format_double(d.preprocess.conductance) << '\n'
    << "standardize = true\n"
    << "s_min = " << format_double(d.preprocess.s_min) << '\n'
    << "s_max = " << format_double(d.preprocess.s_max) << '\n'
    << "histogram_bins = " << d.preprocess.histogram_bins << '\n'
    << "# directory of <channel>.model files; unset = train on the cohort\n"
    << "# model_dir = models\n\n"
    << "[seeding]\n"
    << "# ap | morphology | manual\n"
    << "method = ap\n"
    << "seeds_per_class = " << d.ap.seeds_per_class << '\n'
    << "min_component_size = " << d.ap.min_component_size << '\n'
    << "ap_damping = " << format_double(d.ap.ap.damping) << '\n'
    << "ap_max_iterations = " << d.ap.ap.max_iterations << '\n'
    << "ap_convergence_window = " << d.ap.ap.convergence_window << '\n'
    << "# median | number\n"
    << "ap_preference = median\n"
    << "ap_max_samples = " << d.ap.max_samples << '\n'
    << "morphology_channel = " << d.morphology_channel << '\n'
    << "morphology_fat = " << nums({d.morphology.fat.lo, d.morphology.fat.hi}) << '\n'
    << "morphology_muscle = " << nums({d.morphology.muscle.lo, d.morphology.muscle.hi}) << '\n'
    << "# auto = everything below both tissue intervals\n"
    << "morphology_background = auto\n"
    << "erosion_radius = " << d.morphology.erosion_radius << '\n'
    << "# manual_file = seeds.txt\n\n"
    << "[segment]\n"
    << "# 6 | 26\n"
    << "adjacency = 6\n"
    << "# 0 = hardware concurrency\n"
    << "workers = " << d.fc.workers << '\n'
    << "# uniform | one weight per channel (sum 1)\n"
    << "weights = uniform\n"
    << "# per-channel DSC from a held-out run; overrides uniform weights\n"
    << "# contrast_dsc = 0.6 0.8 0.6\n"
    << "# params = params.txt\n\n"
    << "[fusion]\n"
    << "decision = true\n\n"
    << "[eval]\n"
    << "enabled = true\n\n"
    << "[output]\n"
    << "dir = " << d.out_dir.string() << '\n'
    << "save_fuzzy = true\n\n"
    << "[run]\n"
    << "workers = " << d.workers << '\n'
    << "seed = " << d.seed << '\n';
  return o.str();
}

std::vector<Subject> load_subjects(const PipelineConfig& config) {
  std::vector<Subject> out;
  switch (config.source) {
    case InputSource::Phantom: {
      CohortConfig cc = config.cohort;
      cc.master_seed = config.seed;
      const auto members = cohort_configs(cc);
      for (std::size_t k = 0; k < members.size(); ++k) {
        Phantom ph = generate(members[k]);
        char tag[32];
        std::snprintf(tag, sizeof tag, "member_%03zu", k);
        out.push_back({tag, std::move(ph.image), std::move(ph.truth)});
      }
      break;
    }
    case InputSource::Files: {
      if (config.channel_files.empty()) fail(ErrorCode::ConfigError, "input.files is empty");
      std::vector<std::string> names = config.channel_names;
      if (names.empty())
        for (const auto& f : config.channel_files) names.push_back(f.stem().string());
      if (names.size() != config.channel_files.size())
        fail(ErrorCode::ConfigError, "input.channels and input.files differ in length");
      std::vector<Volume> vols;
      for (const auto& f : config.channel_files) vols.push_back(load_volume(f));
      Subject s{"subject", MultiContrastVolume(std::move(vols), names), std::nullopt};
      if (!config.truth_file.empty()) {
        s.truth = load_labels(config.truth_file);
        if (s.truth->grid().dims() != s.image.grid().dims())
          fail(ErrorCode::DimMismatch, "ground truth dims differ from the image");
      }
      out.push_back(std::move(s));
      break;
    }
    case InputSource::Manifest: {
      if (config.manifest_file.empty()) fail(ErrorCode::ConfigError, "input.manifest is empty");
      const auto kv = KeyValueFile::load(config.manifest_file);
      const auto dir = config.manifest_file.parent_path();
      const auto count = kv.get_int("cohort.count");
      for (long long k = 0; k < count; ++k) {
        char tag[32];
        std::snprintf(tag, sizeof tag, "member_%03lld", k);
        const std::string t(tag);
        const auto cfg = PhantomConfig::from_keyvalue(KeyValueFile::load(dir / kv.get_string(t + ".config")));
        std::vector<Volume> vols;
        for (const auto& f : kv.get_words(t + ".channels")) vols.push_back(load_volume(dir / f));
        if (vols.size() != cfg.channel_names.size())
          fail(ErrorCode::ConfigError, t + ": channel list does not match its config");
        Subject s{t, MultiContrastVolume(std::move(vols), cfg.channel_names), std::nullopt};
        if (kv.has(t + ".truth")) s.truth = load_labels(dir / kv.get_string(t + ".truth"));
        out.push_back(std::move(s));
      }
      break;
    }
  }
  if (out.empty()) fail(ErrorCode::ConfigError, "no subjects to process");
  for (const auto& s : out)
    if (s.image.names() != out.front().image.names())
      fail(ErrorCode::DimMismatch, "subjects differ in their channel lists");
  return out;
}

std::vector<double> contrast_dsc(const FCResult& result, const LabelMap& truth) {
  std::vector<double> out;
  for (const auto& labels : result.contrast_labels) {
    const auto m = evaluate_labels(labels, truth, result.registry);
    double sum = 0;
    for (const auto& x : m) sum += x.dice;
    out.push_back(m.empty() ? 0.0 : sum / static_cast<double>(m.size()));
  }
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& config, PipelineStage last) {
  const auto subjects = in_stage("input", "", [&] { return load_subjects(config); });
  std::vector<StandardizationModel> models;
  const auto images = preprocess_subjects(config, subjects, models);
  const std::size_t C = images.front().channel_count();
  const ContrastWeights weights = last == PipelineStage::Segment
                                      ? in_stage("segment", "", [&] { return resolve_weights(config, C); })
                                      : ContrastWeights::uniform(C);

  PipelineResult result;
  result.subjects.resize(subjects.size());
  detail::parallel_for(subjects.size(), config.workers, [&](std::size_t k) {
    const Subject& subj = subjects[k];
    SubjectResult& r = result.subjects[k];
    r.name = subj.name;
    r.preprocessed = images[k];
    if (last == PipelineStage::Preprocess) return;
    r.seeding = in_stage("seeding", subj.name, [&] { return run_seeding(config, r.preprocessed); });
    if (last == PipelineStage::Seeding) return;
    r.fc = in_stage("segment", subj.name, [&] {
      const ParamTable params = resolve_params(config, r.preprocessed, r.seeding.seeds);
      return multi_object_segment(r.preprocessed, params, weights, r.seeding.seeds, config.fc);
    });
    if (config.decision_fusion)
      r.decision = in_stage("fusion", subj.name,
                            [&] { return decision_fuse(by_role(r.preprocessed, r.fc.contrast_labels)); });
    if (config.evaluate && subj.truth)
      r.metrics = in_stage("eval", subj.name, [&] {
        return evaluate_labels(r.fc.labels, *subj.truth, r.fc.registry);
      });
  });

  // Report rows in subject order, independent of scheduling.
  for (std::size_t k = 0; k < subjects.size(); ++k) {
    const auto& subj = subjects[k];
    const auto& r = result.subjects[k];
    if (!config.evaluate || !subj.truth || last != PipelineStage::Segment) continue;
    in_stage("eval", subj.name, [&] {
      add_metrics(result.report, r.name, "", r.metrics);
      if (r.decision)
        add_metrics(result.report, r.name, "decision_",
                    evaluate_labels(*r.decision, *subj.truth, r.fc.registry));
      for (std::size_t c = 0; c < r.fc.contrast_labels.size(); ++c)
        add_metrics(result.report, r.name, r.preprocessed.names()[c] + "_",
                    evaluate_labels(r.fc.contrast_labels[c], *subj.truth, r.fc.registry));
      if (config.seeding != SeedingMethod::Manual)
        for (const auto& m : evaluate_labels(r.seeding.class_map, *subj.truth, r.fc.registry)) {
          if (m.sens_spec.sensitivity)
            result.report.add(r.name, m.name, "seeding_sensitivity", *m.sens_spec.sensitivity);
          if (m.sens_spec.specificity)
            result.report.add(r.name, m.name, "seeding_specificity", *m.sens_spec.specificity);
        }
      for (const auto& c : r.fc.registry.classes()) {
        const auto coords = r.seeding.seeds.coords_of(c.id);
        std::size_t inside = 0;
        for (const auto& p : coords) inside += subj.truth->at(p) == c.id;
        if (!coords.empty())
          result.report.add(r.name, c.name, "seed_precision",
                            static_cast<double>(inside) / static_cast<double>(coords.size()));
      }
    });
  }

  in_stage("output", "", [&] {
    std::filesystem::create_directories(config.out_dir);
    auto& written = result.outputs;
    for (const auto& r : result.subjects)
      write_subject(r, config.out_dir / r.name, last, config, written);
    for (std::size_t c = 0; c < models.size(); ++c) {
      const auto p = config.out_dir / (images.front().names()[c] + ".model");
      models[c].save(p);
      written.push_back(p);
    }
    if (config.evaluate && !result.report.rows().empty()) {
      result.report.save_csv(config.out_dir / "report.csv");
      written.push_back(config.out_dir / "report.csv");
      result.report.summary().save(config.out_dir / "summary.txt");
      written.push_back(config.out_dir / "summary.txt");
    }
    config.to_keyvalue().save(config.out_dir / "config_used.txt");
    written.push_back(config.out_dir / "config_used.txt");
    KeyValueFile manifest;
    manifest.set("run.config", std::string("config_used.txt"));
    manifest.set("run.seed", std::to_string(config.seed));
    std::vector<std::string> names;
    for (const auto& s : subjects) names.push_back(s.name);
    manifest.set("run.subjects", names);
    std::vector<std::string> rel;
    for (const auto& p : written) rel.push_back(std::filesystem::relative(p, config.out_dir).generic_string());
    manifest.set("run.outputs", rel);
    manifest.save(config.out_dir / "manifest.txt");
    written.push_back(config.out_dir / "manifest.txt");
  });
  return result;
}

std::vector<StageTiming> run_benchmark(const PipelineConfig& config) {
  std::vector<StageTiming> rows;
  const auto subjects = in_stage("input", "", [&] { return load_subjects(config); });
  auto t0 = Clock::now();
  std::vector<StandardizationModel> models;
  const auto images = preprocess_subjects(config, subjects, models);
  rows.push_back({"cohort", "preprocess", seconds_since(t0)});
  const std::size_t C = images.front().channel_count();
  const ContrastWeights weights = in_stage("segment", "", [&] { return resolve_weights(config, C); });

  for (std::size_t k = 0; k < subjects.size(); ++k) {
    const auto& name = subjects[k].name;
    const auto& image = images[k];
    const auto subject_start = Clock::now();
    t0 = Clock::now();
    const auto seeding = in_stage("seeding", name, [&] { return run_seeding(config, image); });
    rows.push_back({name, "seeding", seconds_since(t0)});

    t0 = Clock::now();
    const auto params = in_stage("segment", name, [&] { return resolve_params(config, image, seeding.seeds); });
    rows.push_back({name, "params", seconds_since(t0)});

    const auto& classes = seeding.seeds.registry().classes();
    std::vector<FuzzyMap> fused;
    std::vector<std::vector<FuzzyMap>> per(classes.size());
    for (std::size_t ci = 0; ci < classes.size(); ++ci)
      for (std::size_t ch = 0; ch < C; ++ch) {
        t0 = Clock::now();
        const auto coords = seeding.seeds.coords_of(classes[ci].id);
        per[ci].push_back(in_stage("segment", name, [&] {
          return compute_fc(image.channel(ch), params.get(classes[ci].id, ch), coords,
                            config.fc.adjacency);
        }));
        rows.push_back({name, "fc_" + classes[ci].name + "_" + image.names()[ch], seconds_since(t0)});
      }

    t0 = Clock::now();
    in_stage("fusion", name, [&] {
      for (std::size_t ci = 0; ci < classes.size(); ++ci) {
        std::vector<double> acc(image.grid().size(), 0.0);
        for (std::size_t ch = 0; ch < C; ++ch)
          for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weights.w[ch] * per[ci][ch][i];
        for (double& v : acc) v = std::min(v, 1.0);
        fused.emplace_back(image.grid(), std::move(acc));
      }
      const LabelMap labels = argmax_labels(fused, seeding.seeds);
      if (config.decision_fusion) {
        std::vector<LabelMap> contrast;
        for (std::size_t ch = 0; ch < C; ++ch) {
          std::vector<FuzzyMap> single;
          for (std::size_t ci = 0; ci < classes.size(); ++ci) single.push_back(per[ci][ch]);
          contrast.push_back(argmax_labels(single, seeding.seeds));
        }
        const auto roles = by_role(image, contrast);
        if (can_fuse(roles.availability())) decision_fuse(roles);
      }
      return labels.size();
    });
    rows.push_back({name, "fusion", seconds_since(t0)});
    rows.push_back({name, "total", seconds_since(subject_start)});
  }

  in_stage("output", "", [&] {
    std::filesystem::create_directories(config.out_dir);
    std::ofstream out(config.out_dir / "timing.csv");
    if (!out) fail(ErrorCode::IoFailure, "cannot write timing.csv");
    out << "subject,stage,seconds\n";
    for (const auto& r : rows) out << r.subject << ',' << r.stage << ',' << format_double(r.seconds) << '\n';
    return 0;
  });
  return rows;
}

}  // namespace fcseg
