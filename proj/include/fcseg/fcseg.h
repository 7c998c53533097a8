#ifndef FCSEG_FCSEG_H
#define FCSEG_FCSEG_H

#include <stddef.h>
#include <stdint.h>

#if defined(FCSEG_BUILDING_LIBRARY)
#define FCSEG_API __attribute__((visibility("default")))
#else
#define FCSEG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. The numeric values double as the command-line exit codes. */
typedef enum fcseg_status {
  FCSEG_OK = 0,
  FCSEG_ERR_CONFIG = 1,
  FCSEG_ERR_DATA = 2,
  FCSEG_ERR_ALGORITHM = 3,
  FCSEG_ERR_INTERNAL = 4
} fcseg_status;

typedef enum fcseg_stage {
  FCSEG_STAGE_PREPROCESS = 0,
  FCSEG_STAGE_SEEDING = 1,
  FCSEG_STAGE_SEGMENT = 2
} fcseg_stage;

/* Class ids used by every label buffer. */
enum { FCSEG_BACKGROUND = 0, FCSEG_FAT = 1, FCSEG_MUSCLE = 2 };

typedef struct fcseg_image fcseg_image;   /* co-registered multi-contrast volume */
typedef struct fcseg_labels fcseg_labels; /* uint8 label volume */
typedef struct fcseg_seeds fcseg_seeds;
typedef struct fcseg_result fcseg_result; /* multi-object FC outcome */
typedef struct fcseg_config fcseg_config; /* pipeline configuration */

FCSEG_API const char* fcseg_version(void);

/* Message of the last failure on the calling thread; "" if none. Valid until
   the next failing call on the same thread. */
FCSEG_API const char* fcseg_last_error(void);

/* Name of the specific failure (e.g. "no-valid-seed"); "" if none. */
FCSEG_API const char* fcseg_last_error_kind(void);

/* Warnings go to stderr unless a sink is installed. NULL restores stderr. */
typedef void (*fcseg_warning_fn)(const char* message, void* user);
FCSEG_API void fcseg_set_warning_handler(fcseg_warning_fn fn, void* user);

/* ---- images ---- */

/* `data` holds `channels` consecutive x-fastest volumes of nx*ny*nz doubles. */
FCSEG_API fcseg_status fcseg_image_create(const int dims[3], const double spacing[3],
                                          int channels, const char* const* names,
                                          const double* data, fcseg_image** out);
/* Raw volumes with .hdr sidecars, one file per channel. */
FCSEG_API fcseg_status fcseg_image_load(int channels, const char* const* files,
                                        const char* const* names, fcseg_image** out);
FCSEG_API void fcseg_image_free(fcseg_image* image);
FCSEG_API fcseg_status fcseg_image_dims(const fcseg_image* image, int dims[3]);
FCSEG_API int fcseg_image_channels(const fcseg_image* image);
/* Copies channel `c` into `out` (capacity `n` voxels). */
FCSEG_API fcseg_status fcseg_image_channel(const fcseg_image* image, int c, double* out, size_t n);

/* ---- labels ---- */

FCSEG_API fcseg_status fcseg_labels_create(const int dims[3], const double spacing[3],
                                           const uint8_t* data, fcseg_labels** out);
FCSEG_API fcseg_status fcseg_labels_load(const char* path, fcseg_labels** out);
FCSEG_API fcseg_status fcseg_labels_save(const fcseg_labels* labels, const char* path);
FCSEG_API void fcseg_labels_free(fcseg_labels* labels);
FCSEG_API fcseg_status fcseg_labels_dims(const fcseg_labels* labels, int dims[3]);
FCSEG_API fcseg_status fcseg_labels_copy(const fcseg_labels* labels, uint8_t* out, size_t n);

/* ---- phantom ---- */

/* `config_text` is key/value text with a [phantom] section, or NULL for the
   defaults. `truth` may be NULL. */
FCSEG_API fcseg_status fcseg_phantom_generate(const char* config_text, uint64_t seed,
                                              fcseg_image** image, fcseg_labels** truth);

/* ---- seeding ---- */

FCSEG_API fcseg_status fcseg_seeds_ap(const fcseg_image* image, int seeds_per_class,
                                      int min_component_size, fcseg_seeds** out);
/* Threshold seeding on one channel. `background` may be NULL. */
FCSEG_API fcseg_status fcseg_seeds_morphology(const fcseg_image* image, int channel,
                                              const double fat[2], const double muscle[2],
                                              const double* background, int erosion_radius,
                                              int min_component_size, int seeds_per_class,
                                              fcseg_seeds** out);
/* Lines "<class> <x> <y> <z>"; checked against `dims`. */
FCSEG_API fcseg_status fcseg_seeds_load(const char* path, const int dims[3], fcseg_seeds** out);
FCSEG_API fcseg_status fcseg_seeds_save(const fcseg_seeds* seeds, const char* path);
FCSEG_API void fcseg_seeds_free(fcseg_seeds* seeds);
FCSEG_API size_t fcseg_seeds_count(const fcseg_seeds* seeds);
FCSEG_API fcseg_status fcseg_seeds_get(const fcseg_seeds* seeds, size_t i, uint8_t* class_id,
                                       int xyz[3]);

/* ---- fuzzy connectedness ---- */

/* Single-channel, single-object connectedness. `seeds_xyz` holds n_seeds
   triples; `out` receives nx*ny*nz memberships. adjacency is 6 or 26. */
FCSEG_API fcseg_status fcseg_compute_fc(const double* data, const int dims[3],
                                        const double spacing[3], double m, double sigma_psi,
                                        double sigma_phi, const int* seeds_xyz, size_t n_seeds,
                                        int adjacency, double* out);

/* Estimates affinity parameters from the seeds and runs every class on every
   channel. `weights` (one per channel, sum 1) may be NULL for uniform. */
FCSEG_API fcseg_status fcseg_segment(const fcseg_image* image, const fcseg_seeds* seeds,
                                     const double* weights, int adjacency, int workers,
                                     fcseg_result** out);
FCSEG_API void fcseg_result_free(fcseg_result* result);
FCSEG_API fcseg_status fcseg_result_labels(const fcseg_result* result, fcseg_labels** out);
FCSEG_API fcseg_status fcseg_result_contrast_labels(const fcseg_result* result, int channel,
                                                    fcseg_labels** out);
FCSEG_API fcseg_status fcseg_result_membership(const fcseg_result* result, uint8_t class_id,
                                               double* out, size_t n);
/* Boolean decision fusion of the per-contrast labels, roles taken from the
   channel names (water / waterfat / fat). */
FCSEG_API fcseg_status fcseg_result_decision(const fcseg_result* result, fcseg_labels** out);

/* ---- fusion and weights ---- */

FCSEG_API int fcseg_can_fuse(int mri1, int mri2, int mri3);
/* Weights proportional to the DSC values, summing to 1. */
FCSEG_API fcseg_status fcseg_contrast_weights(const double* dsc, size_t n, double* out);

/* ---- evaluation ---- */

FCSEG_API fcseg_status fcseg_dice(const fcseg_labels* pred, const fcseg_labels* truth,
                                  uint8_t class_id, double* out);
/* Per-class dice / sensitivity / specificity / volumes as CSV rows, plus a
   key/value summary. `summary_path` may be NULL. */
FCSEG_API fcseg_status fcseg_evaluate(const fcseg_labels* pred, const fcseg_labels* truth,
                                      const char* image_name, const char* csv_path,
                                      const char* summary_path);

/* ---- pipeline ---- */

FCSEG_API fcseg_status fcseg_config_default(fcseg_config** out);
/* Relative paths inside the file resolve against its directory. */
FCSEG_API fcseg_status fcseg_config_load(const char* path, fcseg_config** out);
/* Overrides one "section.key"; validated on the next run. */
FCSEG_API fcseg_status fcseg_config_set(fcseg_config* config, const char* key, const char* value);
FCSEG_API fcseg_status fcseg_config_save(const fcseg_config* config, const char* path);
FCSEG_API void fcseg_config_free(fcseg_config* config);
/* Commented default configuration. Static storage. */
FCSEG_API const char* fcseg_reference_config(void);

/* Runs the pipeline up to and including `last`. Outputs land in the
   configured output directory. */
FCSEG_API fcseg_status fcseg_run(const fcseg_config* config, fcseg_stage last);
/* Per-stage timings written to <output.dir>/timing.csv. */
FCSEG_API fcseg_status fcseg_run_benchmark(const fcseg_config* config);
/* Writes the configured phantom cohort (volumes, truth, manifest) to `dir`. */
FCSEG_API fcseg_status fcseg_write_cohort(const fcseg_config* config, const char* dir);

#ifdef __cplusplus
}
#endif

#endif
