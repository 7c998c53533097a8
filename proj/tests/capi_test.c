/* Exercises the shared library through its C header only. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "fcseg/fcseg.h"

static int failures = 0;

#define EXPECT(cond)                                                       \
  do {                                                                     \
    if (!(cond)) {                                                         \
      fprintf(stderr, "%s:%d: expected %s (%s)\n", __FILE__, __LINE__, #cond, \
              fcseg_last_error());                                         \
      ++failures;                                                          \
    }                                                                      \
  } while (0)

static const char* kPhantom =
    "[phantom]\n"
    "dims = 64 64 12\n"
    "leg_separation_mm = 32\n"
    "leg_radius_mm = 14\n"
    "muscle_radius_mm = 10\n"
    "bone_radius_mm = 2.5\n"
    "noise_sigma = 10\n";

static int warnings_seen = 0;
static void count_warning(const char* message, void* user) {
  (void)message;
  ++*(int*)user;
}

static void test_segment(const char* dir) {
  fcseg_image* image = NULL;
  fcseg_labels* truth = NULL;
  EXPECT(fcseg_phantom_generate(kPhantom, 7, &image, &truth) == FCSEG_OK);
  if (!image) return;

  int dims[3];
  EXPECT(fcseg_image_dims(image, dims) == FCSEG_OK);
  EXPECT(dims[0] == 64 && dims[1] == 64 && dims[2] == 12);
  EXPECT(fcseg_image_channels(image) == 3);
  const size_t n = (size_t)dims[0] * dims[1] * dims[2];

  fcseg_seeds* seeds = NULL;
  EXPECT(fcseg_seeds_ap(image, 5, 50, &seeds) == FCSEG_OK);
  EXPECT(fcseg_seeds_count(seeds) >= 3);
  uint8_t* truth_buf = malloc(n);
  EXPECT(fcseg_labels_copy(truth, truth_buf, n) == FCSEG_OK);
  for (size_t i = 0; i < fcseg_seeds_count(seeds); ++i) {
    uint8_t cls;
    int xyz[3];
    EXPECT(fcseg_seeds_get(seeds, i, &cls, xyz) == FCSEG_OK);
    EXPECT(truth_buf[xyz[0] + dims[0] * (xyz[1] + dims[1] * xyz[2])] == cls);
  }

  fcseg_result* result = NULL;
  EXPECT(fcseg_segment(image, seeds, NULL, 6, 1, &result) == FCSEG_OK);
  fcseg_labels* labels = NULL;
  fcseg_labels* decision = NULL;
  EXPECT(fcseg_result_labels(result, &labels) == FCSEG_OK);
  EXPECT(fcseg_result_decision(result, &decision) == FCSEG_OK);
  double fat = 0, muscle = 0, fused_fat = 0;
  EXPECT(fcseg_dice(labels, truth, FCSEG_FAT, &fat) == FCSEG_OK);
  EXPECT(fcseg_dice(labels, truth, FCSEG_MUSCLE, &muscle) == FCSEG_OK);
  EXPECT(fcseg_dice(decision, truth, FCSEG_FAT, &fused_fat) == FCSEG_OK);
  EXPECT(fat >= 0.95 && muscle >= 0.95 && fused_fat >= 0.95);

  double* member = malloc(n * sizeof *member);
  EXPECT(fcseg_result_membership(result, FCSEG_FAT, member, n) == FCSEG_OK);
  int in_range = 1;
  for (size_t i = 0; i < n; ++i) in_range &= member[i] >= 0.0 && member[i] <= 1.0;
  EXPECT(in_range);
  EXPECT(fcseg_result_membership(result, FCSEG_FAT, member, n - 1) == FCSEG_ERR_CONFIG);

  char path[512];
  snprintf(path, sizeof path, "%s/labels.raw", dir);
  EXPECT(fcseg_labels_save(labels, path) == FCSEG_OK);
  fcseg_labels* back = NULL;
  EXPECT(fcseg_labels_load(path, &back) == FCSEG_OK);
  double same = 0;
  EXPECT(fcseg_dice(back, labels, FCSEG_FAT, &same) == FCSEG_OK && same == 1.0);

  char csv[512], summary[512];
  snprintf(csv, sizeof csv, "%s/report.csv", dir);
  snprintf(summary, sizeof summary, "%s/summary.txt", dir);
  EXPECT(fcseg_evaluate(labels, truth, "capi", csv, summary) == FCSEG_OK);
  FILE* f = fopen(csv, "r");
  EXPECT(f != NULL);
  if (f) fclose(f);

  snprintf(path, sizeof path, "%s/seeds.txt", dir);
  EXPECT(fcseg_seeds_save(seeds, path) == FCSEG_OK);
  fcseg_seeds* reloaded = NULL;
  EXPECT(fcseg_seeds_load(path, dims, &reloaded) == FCSEG_OK);
  EXPECT(fcseg_seeds_count(reloaded) == fcseg_seeds_count(seeds));

  free(member);
  free(truth_buf);
  fcseg_seeds_free(reloaded);
  fcseg_labels_free(back);
  fcseg_labels_free(decision);
  fcseg_labels_free(labels);
  fcseg_result_free(result);
  fcseg_seeds_free(seeds);
  fcseg_labels_free(truth);
  fcseg_image_free(image);
}

static void test_small_calls(void) {
  EXPECT(strlen(fcseg_version()) > 0);
  EXPECT(fcseg_can_fuse(0, 1, 0) == 1);
  EXPECT(fcseg_can_fuse(1, 0, 1) == 1);
  EXPECT(fcseg_can_fuse(1, 0, 0) == 0);

  const double dsc[3] = {0.6, 0.8, 0.6};
  double w[3];
  EXPECT(fcseg_contrast_weights(dsc, 3, w) == FCSEG_OK);
  EXPECT(fabs(w[0] - 0.3) < 1e-12 && fabs(w[1] - 0.4) < 1e-12 && fabs(w[2] - 0.3) < 1e-12);

  /* Constant image: every voxel is fully connected to the seed. */
  const int dims[3] = {4, 3, 2};
  const double spacing[3] = {1, 1, 1};
  double data[24], out[24];
  for (int i = 0; i < 24; ++i) data[i] = 50.0;
  const int seed[3] = {1, 1, 0};
  EXPECT(fcseg_compute_fc(data, dims, spacing, 50.0, 5.0, 5.0, seed, 1, 6, out) == FCSEG_OK);
  int all_one = 1;
  for (int i = 0; i < 24; ++i) all_one &= out[i] == 1.0;
  EXPECT(all_one);
  const int bad_seed[3] = {4, 0, 0};
  EXPECT(fcseg_compute_fc(data, dims, spacing, 50.0, 5.0, 5.0, bad_seed, 1, 6, out) == FCSEG_ERR_DATA);
  EXPECT(strcmp(fcseg_last_error_kind(), "out-of-bounds") == 0);
  EXPECT(fcseg_compute_fc(data, dims, spacing, 50.0, 0.0, 5.0, seed, 1, 6, out) == FCSEG_ERR_CONFIG);

  const char* names[1] = {"water"};
  fcseg_image* img = NULL;
  EXPECT(fcseg_image_create(dims, spacing, 1, names, data, &img) == FCSEG_OK);
  double copy[24];
  EXPECT(fcseg_image_channel(img, 0, copy, 24) == FCSEG_OK && copy[5] == 50.0);
  EXPECT(fcseg_image_channel(img, 1, copy, 24) != FCSEG_OK);
  fcseg_image_free(img);
}

static void test_errors(const char* dir) {
  fcseg_labels* l = NULL;
  EXPECT(fcseg_labels_load("/nonexistent/labels.raw", &l) == FCSEG_ERR_DATA);
  EXPECT(strcmp(fcseg_last_error_kind(), "io-failure") == 0);
  EXPECT(strlen(fcseg_last_error()) > 0);
  EXPECT(l == NULL);
  EXPECT(fcseg_labels_load("/nonexistent/labels.raw", NULL) != FCSEG_OK);

  fcseg_config* cfg = NULL;
  EXPECT(fcseg_config_default(&cfg) == FCSEG_OK);
  char out_dir[512];
  snprintf(out_dir, sizeof out_dir, "%s/run", dir);
  EXPECT(fcseg_config_set(cfg, "output.dir", out_dir) == FCSEG_OK);
  EXPECT(fcseg_config_set(cfg, "seeding.method", "manual") == FCSEG_OK);
  EXPECT(fcseg_run(cfg, FCSEG_STAGE_SEGMENT) == FCSEG_ERR_CONFIG);
  EXPECT(strstr(fcseg_last_error(), "seeding") != NULL);
  EXPECT(fcseg_config_set(cfg, "seeding.method", "guess") == FCSEG_OK);
  EXPECT(fcseg_run(cfg, FCSEG_STAGE_SEGMENT) == FCSEG_ERR_CONFIG);
  fcseg_config_free(cfg);

  /* No class region reaches a million voxels. */
  fcseg_image* image = NULL;
  EXPECT(fcseg_phantom_generate(kPhantom, 3, &image, NULL) == FCSEG_OK);
  fcseg_seeds* seeds = NULL;
  EXPECT(fcseg_seeds_ap(image, 5, 1000000, &seeds) == FCSEG_ERR_ALGORITHM);
  EXPECT(strcmp(fcseg_last_error_kind(), "no-valid-seed") == 0);
  fcseg_image_free(image);

  fcseg_set_warning_handler(count_warning, &warnings_seen);
  char path[512];
  snprintf(path, sizeof path, "%s/dup_seeds.txt", dir);
  FILE* f = fopen(path, "w");
  fputs("1 2 2 2\n1 2 2 2\n", f);
  fclose(f);
  const int dims[3] = {8, 8, 8};
  EXPECT(fcseg_seeds_load(path, dims, &seeds) == FCSEG_OK);
  EXPECT(fcseg_seeds_count(seeds) == 1);
  EXPECT(warnings_seen == 1);
  fcseg_set_warning_handler(NULL, NULL);
  fcseg_seeds_free(seeds);

  /* Freeing NULL is a no-op. */
  fcseg_image_free(NULL);
  fcseg_labels_free(NULL);
  fcseg_seeds_free(NULL);
  fcseg_result_free(NULL);
  fcseg_config_free(NULL);
}

static void test_pipeline(const char* dir) {
  fcseg_config* cfg = NULL;
  EXPECT(fcseg_config_default(&cfg) == FCSEG_OK);
  char out_dir[512];
  snprintf(out_dir, sizeof out_dir, "%s/pipeline", dir);
  EXPECT(fcseg_config_set(cfg, "output.dir", out_dir) == FCSEG_OK);
  EXPECT(fcseg_config_set(cfg, "phantom.dims", "64 64 12") == FCSEG_OK);
  EXPECT(fcseg_config_set(cfg, "phantom.leg_separation_mm", "32") == FCSEG_OK);
  EXPECT(fcseg_config_set(cfg, "phantom.leg_radius_mm", "14") == FCSEG_OK);
  EXPECT(fcseg_config_set(cfg, "phantom.muscle_radius_mm", "10") == FCSEG_OK);
  EXPECT(fcseg_config_set(cfg, "phantom.bone_radius_mm", "2.5") == FCSEG_OK);
  EXPECT(fcseg_config_set(cfg, "seeding.min_component_size", "50") == FCSEG_OK);
  EXPECT(fcseg_run(cfg, FCSEG_STAGE_SEGMENT) == FCSEG_OK);
  char path[600];
  snprintf(path, sizeof path, "%s/summary.txt", out_dir);
  FILE* f = fopen(path, "r");
  EXPECT(f != NULL);
  if (f) fclose(f);

  snprintf(path, sizeof path, "%s/saved.ini", dir);
  EXPECT(fcseg_config_save(cfg, path) == FCSEG_OK);
  fcseg_config* again = NULL;
  EXPECT(fcseg_config_load(path, &again) == FCSEG_OK);
  fcseg_config_free(again);
  fcseg_config_free(cfg);
  EXPECT(strstr(fcseg_reference_config(), "[seeding]") != NULL);
}

int main(int argc, char** argv) {
  const char* dir = argc > 1 ? argv[1] : ".";
  test_small_calls();
  test_segment(dir);
  test_errors(dir);
  test_pipeline(dir);
  if (failures) fprintf(stderr, "%d C API check(s) failed\n", failures);
  else printf("C API checks passed\n");
  return failures ? 1 : 0;
}
