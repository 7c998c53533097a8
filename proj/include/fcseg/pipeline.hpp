#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fcseg/evaluation.hpp"
#include "fcseg/fuzzy_connectedness.hpp"
#include "fcseg/keyvalue.hpp"
#include "fcseg/phantom.hpp"
#include "fcseg/preprocess.hpp"
#include "fcseg/seeding.hpp"

namespace fcseg {

enum class SeedingMethod { AP, Morphology, Manual };
enum class InputSource { Phantom, Files, Manifest };

/// Sectioned key/value run description. Every key has a default; the full
/// list is what reference_config() prints.
struct PipelineConfig {
  // [input]
  InputSource source = InputSource::Phantom;
  std::vector<std::string> channel_names;
  std::vector<std::filesystem::path> channel_files;
  std::filesystem::path truth_file;
  std::filesystem::path manifest_file;

  // [phantom] / [cohort]
  CohortConfig cohort{PhantomConfig{}, 1};

  // [preprocess]
  bool preprocess_enabled = true;
  PreprocessOptions preprocess;
  /// Directory holding "<channel>.model" standardization models; empty =
  /// train on the cohort (needs >= 2 subjects).
  std::filesystem::path standardization_dir;

  // [seeding]
  SeedingMethod seeding = SeedingMethod::AP;
  APSeedOptions ap;
  MorphologyOptions morphology{{700, 1100}, {300, 600}, std::nullopt, 1, 100, 5};
  std::string morphology_channel = "waterfat";
  std::filesystem::path manual_seeds;

  // [segment]
  FCOptions fc;
  /// Explicit contrast weights; empty = derived from contrast_dsc or uniform.
  std::vector<double> weights;
  /// Per-contrast DSC measured offline; turned into weights when set.
  std::vector<double> contrast_dsc;
  /// Trained affinity parameters; empty = estimate from the seeds.
  std::filesystem::path params_file;

  // [fusion]
  bool decision_fusion = true;

  // [eval]
  bool evaluate = true;

  // [output]
  std::filesystem::path out_dir = "fcseg_out";
  bool save_fuzzy = true;

  // [run]
  /// Subjects processed concurrently.
  int workers = 1;
  std::uint64_t seed = 1;

  static PipelineConfig from_keyvalue(const KeyValueFile& kv);
  /// Relative input paths are resolved against `base_dir`.
  static PipelineConfig from_keyvalue(const KeyValueFile& kv, const std::filesystem::path& base_dir);
  /// Throws IoFailure / ConfigError.
  static PipelineConfig load(const std::filesystem::path& path);
  KeyValueFile to_keyvalue() const;
};

/// Default configuration with every key spelled out, with comments.
std::string reference_config();

/// One subject after loading: channels plus optional ground truth.
struct Subject {
  std::string name;
  MultiContrastVolume image;
  std::optional<LabelMap> truth;
};

std::vector<Subject> load_subjects(const PipelineConfig& config);

/// Per-subject outcome kept in memory for callers (tests, tooling).
struct SubjectResult {
  std::string name;
  MultiContrastVolume preprocessed;
  SeedingResult seeding;
  FCResult fc;
  std::optional<LabelMap> decision;
  std::vector<ClassMetrics> metrics;
};

struct PipelineResult {
  std::vector<SubjectResult> subjects;
  EvaluationReport report;
  std::vector<std::filesystem::path> outputs;
};

/// Last stage to run. Earlier stops write that stage's outputs only.
enum class PipelineStage { Preprocess, Seeding, Segment };

/// preprocess -> seed -> segment -> fuse -> evaluate for every subject, then
/// writes outputs under config.out_dir. A failing stage throws fcseg::Error
/// with the original code and a message naming the stage and subject.
PipelineResult run_pipeline(const PipelineConfig& config,
                            PipelineStage last = PipelineStage::Segment);

struct StageTiming {
  std::string subject;
  std::string stage;
  double seconds = 0;
};

/// Times every stage (preprocess, seeding, params, one row per class-channel
/// connectedness search, fusion) plus a "total" row per subject, and writes
/// them as CSV to out_dir/timing.csv.
std::vector<StageTiming> run_benchmark(const PipelineConfig& config);

/// Mean of the fat and muscle DSC of each channel's own segmentation.
/// Intended for offline weight training on a held-out subject.
std::vector<double> contrast_dsc(const FCResult& result, const LabelMap& truth);

}  // namespace fcseg
