/*
 * homctx - joint recognition of manipulation actions, hand grasp types and
 * object attributes from per-frame classifier evidence.
 *
 * C interface of the shared library. All functions return a homctx_status;
 * on failure homctx_last_error() carries a thread-local message. Objects are
 * opaque handles released with their matching _free function.
 */
#ifndef HOMCTX_H
#define HOMCTX_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum homctx_status {
  HOMCTX_OK = 0,
  HOMCTX_ERR_INVALID_ARGUMENT = 1,
  HOMCTX_ERR_IO = 2,
  HOMCTX_ERR_SCHEMA = 3,
  HOMCTX_ERR_FINGERPRINT = 4,
  HOMCTX_ERR_NUMERIC = 5,
  HOMCTX_ERR_CAP_EXCEEDED = 6,
  HOMCTX_ERR_INTERNAL = 7
} homctx_status;

const char* homctx_version(void);
const char* homctx_status_name(homctx_status status);
/* Message of the last failure on this thread; empty string if none. */
const char* homctx_last_error(void);

typedef struct homctx_label_space homctx_label_space;
typedef struct homctx_params homctx_params;

/* ----- label spaces ----- */

homctx_status homctx_label_space_load(const char* path, homctx_label_space** out);
/* Built-in GTEA taxonomy: 10 actions, 13 grasp types, 9 object attributes. */
homctx_status homctx_label_space_gtea(homctx_label_space** out);
homctx_status homctx_label_space_save(const homctx_label_space* space, const char* path);
homctx_status homctx_label_space_counts(const homctx_label_space* space, int* num_actions,
                                        int* num_grasps, int* num_attributes);
/* Copies the fingerprint (hex, NUL terminated) into buffer. */
homctx_status homctx_label_space_fingerprint(const homctx_label_space* space, char* buffer,
                                             size_t size);
void homctx_label_space_free(homctx_label_space* space);

/* ----- parameters ----- */

homctx_status homctx_params_load(const char* path, const homctx_label_space* space,
                                 homctx_params** out);
homctx_status homctx_params_save(const homctx_params* params, const homctx_label_space* space,
                                 const char* path);
homctx_status homctx_params_zeros(const homctx_label_space* space, homctx_params** out);
void homctx_params_free(homctx_params* params);

/* ----- synthetic data ----- */

typedef struct homctx_synth_config {
  int num_actions;
  int num_grasps;
  int num_attributes;
  int num_frames;
  double context_sharpness;
  double evidence_noise;
  double box_noise;
  uint64_t seed;
  int hand_candidates;
  int object_records;
  double train_fraction;
} homctx_synth_config;

void homctx_synth_config_init(homctx_synth_config* config);
/* Writes labels.json, frames.jsonl, manifest.json, generating_params.json. */
homctx_status homctx_synth_run(const homctx_synth_config* config, const char* out_dir);

/* ----- learning ----- */

typedef enum homctx_mode {
  HOMCTX_MODE_FULL = 0,
  HOMCTX_MODE_EVIDENCE_ONLY = 1,
  HOMCTX_MODE_EVIDENCE_PHYSICAL = 2
} homctx_mode;

typedef struct homctx_fit_config {
  double l2_strength;
  double step_size;
  int max_epochs;
  double convergence_tol;
  double alpha_smoothing;
  int mode;    /* homctx_mode; restricted modes pin context blocks at zero */
  int threads; /* >= 1 */
} homctx_fit_config;

void homctx_fit_config_init(homctx_fit_config* config);
homctx_status homctx_fit_run(const char* manifest_path, const homctx_fit_config* config,
                             const char* out_params_path);

/* ----- inference ----- */

typedef struct homctx_infer_config {
  double hand_detection_threshold; /* in (0,1) */
  int max_iterations;              /* >= 1 */
  int detect_convergence;          /* 0 or 1 */
  int threads;
} homctx_infer_config;

void homctx_infer_config_init(homctx_infer_config* config);
/* split: "train", "test" or "all". Writes one JSON line per frame. */
homctx_status homctx_infer_run(const char* manifest_path, const char* params_path,
                               const homctx_infer_config* config, const char* split,
                               const char* out_path);
/* frame_json: one frame record (same schema as frames.jsonl lines).
 * On success *out_json is a malloc'd result released with homctx_string_free. */
homctx_status homctx_infer_frame_json(const homctx_label_space* space, const homctx_params* params,
                                      const char* frame_json, const homctx_infer_config* config,
                                      char** out_json);
void homctx_string_free(char* text);

/* ----- evaluation ----- */

typedef struct homctx_eval_config {
  homctx_fit_config fit;
  homctx_infer_config infer;
  const double* downsize_fractions; /* strictly increasing, in [0,1); may be NULL */
  size_t num_downsize_fractions;
  int log_domain_context; /* 1: log-sum-exp context tables, 0: linear */
} homctx_eval_config;

void homctx_eval_config_init(homctx_eval_config* config);
/* Fits evidence-only / evidence+physical / full on the train split (reusing
 * full_params_path for the full mode when given), evaluates the test split
 * and writes accuracy, confusion and context CSVs plus summary.json. */
homctx_status homctx_eval_run(const char* manifest_path, const char* full_params_path,
                              const homctx_eval_config* config, const char* out_dir);

/* ----- oracle comparison ----- */

typedef struct homctx_oracle_config {
  int count;
  uint64_t seed;
  int max_actions;
  int max_grasps;
  int max_attributes;
  int max_candidates;
} homctx_oracle_config;

typedef struct homctx_oracle_stats {
  int count;
  int matches;
  double match_fraction;
  double max_relative_gap;
  double mean_relative_gap;
  int trace_violations;
} homctx_oracle_stats;

void homctx_oracle_config_init(homctx_oracle_config* config);
homctx_status homctx_oracle_run(const homctx_oracle_config* config, homctx_oracle_stats* stats,
                                const char* out_json_path);

/* ----- context export ----- */

/* Writes action-grasp, action-attribute and grasp-attribute strength tables
 * plus the top-k grasp/attribute combinations per action. */
homctx_status homctx_export_context(const char* params_path, const char* labels_path,
                                    int log_domain, int top_k, const char* out_dir);

/* ----- geometry ----- */

/* Reads a P5 PGM probability map, extracts reference hand boxes and writes
 * them as a JSON list of {cx, cy, w, h}. */
homctx_status homctx_extract_hand_boxes(const char* pgm_path, double threshold,
                                        double min_area_frac, double max_area_frac,
                                        const char* out_json_path);

#ifdef __cplusplus
}
#endif

#endif /* HOMCTX_H */
