// Command-line front end. Talks to the library only through the C API.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fcseg/fcseg.h"

namespace {

struct Common {
  std::string config;
  std::string out_dir;
  std::string seed;
  std::vector<std::string> overrides;
};

int report(fcseg_status status, const char* what) {
  if (status == FCSEG_OK) return 0;
  std::fprintf(stderr, "fcseg %s: %s\n", what, fcseg_last_error());
  // Internal failures have no dedicated exit code; they abort the run like
  // an algorithm failure.
  return status == FCSEG_ERR_INTERNAL ? 3 : static_cast<int>(status);
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config,-c", c.config, "Pipeline configuration file");
  cmd->add_option("--out-dir,-o", c.out_dir, "Output directory (overrides output.dir)");
  cmd->add_option("--seed", c.seed, "RNG seed (overrides run.seed)");
  cmd->add_option("--set", c.overrides, "Override one key: section.key=value")->take_all();
}

// Loads the configuration and applies command-line overrides. Returns a
// nonzero exit code on failure.
int open_config(const Common& c, fcseg_config** out) {
  fcseg_status st = c.config.empty() ? fcseg_config_default(out) : fcseg_config_load(c.config.c_str(), out);
  if (st != FCSEG_OK) return report(st, "config");
  auto set = [&](const std::string& key, const std::string& value) {
    return fcseg_config_set(*out, key.c_str(), value.c_str());
  };
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "fcseg config: --set expects section.key=value, got '%s'\n", kv.c_str());
      return 1;
    }
    if ((st = set(kv.substr(0, eq), kv.substr(eq + 1))) != FCSEG_OK) return report(st, "config");
  }
  if (!c.out_dir.empty() && (st = set("output.dir", c.out_dir)) != FCSEG_OK) return report(st, "config");
  if (!c.seed.empty() && (st = set("run.seed", c.seed)) != FCSEG_OK) return report(st, "config");
  return 0;
}

int run_stage(const Common& c, fcseg_stage stage, const char* name) {
  fcseg_config* cfg = nullptr;
  if (int rc = open_config(c, &cfg)) return rc;
  const int rc = report(fcseg_run(cfg, stage), name);
  fcseg_config_free(cfg);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-contrast fuzzy-connectedness tissue segmentation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fcseg_version());

  Common segment, seed, preprocess, phantom, bench;
  auto* seg_cmd = app.add_subcommand("segment", "Preprocess, seed, segment, fuse and evaluate");
  add_common(seg_cmd, segment);
  auto* seed_cmd = app.add_subcommand("seed", "Preprocess and write seeds only");
  add_common(seed_cmd, seed);
  auto* pre_cmd = app.add_subcommand("preprocess", "Write preprocessed channels and models");
  add_common(pre_cmd, preprocess);
  auto* bench_cmd = app.add_subcommand("bench", "Time every stage into timing.csv");
  add_common(bench_cmd, bench);

  auto* ph_cmd = app.add_subcommand("phantom", "Write a synthetic phantom cohort");
  add_common(ph_cmd, phantom);
  int count = 0;
  ph_cmd->add_option("--count,-n", count, "Cohort size (overrides cohort.count)")->check(CLI::PositiveNumber);

  auto* eval_cmd = app.add_subcommand("eval", "Compare a label map with ground truth");
  std::string pred, truth, csv = "report.csv", summary, name = "image";
  eval_cmd->add_option("--pred", pred, "Predicted label volume (.raw)")->required();
  eval_cmd->add_option("--truth", truth, "Ground-truth label volume (.raw)")->required();
  eval_cmd->add_option("--out", csv, "CSV report path")->capture_default_str();
  eval_cmd->add_option("--summary", summary, "Key/value summary path");
  eval_cmd->add_option("--name", name, "Image name in the report")->capture_default_str();

  auto* cfg_cmd = app.add_subcommand("config", "Print the reference configuration");
  std::string cfg_out;
  cfg_cmd->add_option("--out,-o", cfg_out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (*seg_cmd) return run_stage(segment, FCSEG_STAGE_SEGMENT, "segment");
  if (*seed_cmd) return run_stage(seed, FCSEG_STAGE_SEEDING, "seed");
  if (*pre_cmd) return run_stage(preprocess, FCSEG_STAGE_PREPROCESS, "preprocess");
  if (*bench_cmd) {
    fcseg_config* cfg = nullptr;
    if (int rc = open_config(bench, &cfg)) return rc;
    const int rc = report(fcseg_run_benchmark(cfg), "bench");
    fcseg_config_free(cfg);
    return rc;
  }
  if (*ph_cmd) {
    if (count > 0) phantom.overrides.push_back("cohort.count=" + std::to_string(count));
    const std::string dir = phantom.out_dir.empty() ? "phantom" : phantom.out_dir;
    fcseg_config* cfg = nullptr;
    if (int rc = open_config(phantom, &cfg)) return rc;
    const int rc = report(fcseg_write_cohort(cfg, dir.c_str()), "phantom");
    fcseg_config_free(cfg);
    return rc;
  }
  if (*eval_cmd) {
    fcseg_labels* p = nullptr;
    fcseg_labels* t = nullptr;
    int rc = report(fcseg_labels_load(pred.c_str(), &p), "eval");
    if (rc == 0) rc = report(fcseg_labels_load(truth.c_str(), &t), "eval");
    if (rc == 0)
      rc = report(fcseg_evaluate(p, t, name.c_str(), csv.c_str(),
                                 summary.empty() ? nullptr : summary.c_str()),
                  "eval");
    fcseg_labels_free(p);
    fcseg_labels_free(t);
    return rc;
  }
  if (*cfg_cmd) {
    if (cfg_out.empty()) {
      std::fputs(fcseg_reference_config(), stdout);
      return 0;
    }
    std::FILE* f = std::fopen(cfg_out.c_str(), "w");
    if (!f) {
      std::fprintf(stderr, "fcseg config: cannot write '%s'\n", cfg_out.c_str());
      return 2;
    }
    std::fputs(fcseg_reference_config(), f);
    std::fclose(f);
    return 0;
  }
  return 1;
}
