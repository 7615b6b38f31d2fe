// Copyright (c) 2026 The mpfkansc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MPFKANSC_MPFKANSC_H_
#define MPFKANSC_MPFKANSC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(MPK_BUILDING_LIBRARY)
#define MPK_API __declspec(dllexport)
#else
#define MPK_API __declspec(dllimport)
#endif
#else
#define MPK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status; on failure mpk_last_error() holds a
 * message for the calling thread until its next failing call. */
typedef enum mpk_status {
  MPK_OK = 0,
  MPK_ERR_USAGE = 1,     /* bad arguments or API misuse */
  MPK_ERR_DATA = 2,      /* data, file format, config or shape error */
  MPK_ERR_NUMERIC = 3,   /* NaN/Inf during training or inference */
  MPK_ERR_GRADCHECK = 4, /* a gradient check failed */
  MPK_ERR_INTERNAL = 5   /* unexpected exception */
} mpk_status;

MPK_API const char* mpk_version(void);
MPK_API const char* mpk_last_error(void);

/* Progress lines from long-running commands. Pass NULL to silence. The
 * callback may be invoked from worker threads, one call at a time. */
typedef void (*mpk_log_fn)(const char* line, void* user);
MPK_API void mpk_set_log_callback(mpk_log_fn fn, void* user);

/* ---- configuration ---------------------------------------------------- */

typedef struct mpk_config mpk_config;

MPK_API mpk_status mpk_config_default(mpk_config** out);
MPK_API mpk_status mpk_config_load(const char* path, mpk_config** out);
MPK_API mpk_status mpk_config_parse(const char* ini_text, mpk_config** out);
/* Canonical INI text. Writes at most `capacity` bytes including the NUL and
 * stores the full length (without NUL) in *needed when non-NULL. */
MPK_API mpk_status mpk_config_to_string(const mpk_config* cfg, char* buffer, size_t capacity, size_t* needed);
MPK_API void mpk_config_free(mpk_config* cfg);

/* ---- volumes ---------------------------------------------------------- */

typedef struct mpk_volume mpk_volume;

/* data holds d*h*w values in row-major [d][h][w] order and is copied. */
MPK_API mpk_status mpk_volume_create(size_t d, size_t h, size_t w, const double* data, int label,
                                     mpk_volume** out);
MPK_API mpk_status mpk_volume_load(const char* path, mpk_volume** out);
MPK_API mpk_status mpk_volume_save(const mpk_volume* vol, const char* path);
MPK_API mpk_status mpk_volume_dims(const mpk_volume* vol, size_t dims[3]);
MPK_API mpk_status mpk_volume_label(const mpk_volume* vol, int* label);
/* Borrowed pointer to d*h*w voxels, valid until the volume is freed. */
MPK_API const double* mpk_volume_data(const mpk_volume* vol);
MPK_API void mpk_volume_free(mpk_volume* vol);

/* ---- datasets --------------------------------------------------------- */

typedef struct mpk_dataset mpk_dataset;

MPK_API mpk_status mpk_dataset_load(const char* manifest_path, mpk_dataset** out);
MPK_API size_t mpk_dataset_size(const mpk_dataset* ds);
/* Copies subject `index` into a new volume owned by the caller. */
MPK_API mpk_status mpk_dataset_get(const mpk_dataset* ds, size_t index, mpk_volume** out);
MPK_API void mpk_dataset_free(mpk_dataset* ds);

/* ---- models ----------------------------------------------------------- */

typedef struct mpk_model mpk_model;

MPK_API mpk_status mpk_model_create(const mpk_config* cfg, uint64_t seed, mpk_model** out);
/* cfg may be NULL for the default configuration. */
MPK_API mpk_status mpk_model_load(const char* path, const mpk_config* cfg, mpk_model** out);
MPK_API mpk_status mpk_model_save(const mpk_model* model, const char* path);
MPK_API mpk_status mpk_model_parameter_count(const mpk_model* model, size_t* count);
/* Probability of class 1. */
MPK_API mpk_status mpk_model_predict(const mpk_model* model, const mpk_volume* vol, double* probability);
MPK_API void mpk_model_free(mpk_model* model);

/* ---- commands --------------------------------------------------------- */
/* String fields may be NULL when optional. Zero-initialize the structs and
 * fill what is needed; numeric fields document their defaults. */

typedef struct mpk_synth_args {
  const char* spec; /* phantom INI file */
  const char* out;
  size_t n_per_class; /* 0 means 10 */
} mpk_synth_args;

typedef struct mpk_train_args {
  const char* data; /* manifest.tsv */
  const char* config;
  const char* const* transfer; /* checkpoint paths */
  size_t transfer_count;
  const char* out;
  const char* planes;    /* override, e.g. "axial,coronal" */
  const char* attention; /* override: variant name or "off" */
  int epochs;            /* override when > 0 */
  int has_seed;
  uint64_t seed;
  size_t threads; /* override when > 0 */
} mpk_train_args;

typedef struct mpk_eval_args {
  const char* ckpt;
  const char* data;
  const char* config;
  const char* out;
} mpk_eval_args;

typedef struct mpk_gradcam_args {
  const char* ckpt;
  const char* data;
  const char* atlas;
  const char* config;
  const char* out;
  size_t k;   /* 0 means 20 */
  int target; /* -1 means each subject's label */
  int post_attention;
} mpk_gradcam_args;

typedef struct mpk_gradcheck_args {
  const char* scale; /* "tiny" (default) or "small" */
  uint64_t seed;
  const char* fault_op; /* scale the backward of this op */
  double fault_factor;  /* 0 means 1.5 */
  const char* report;
} mpk_gradcheck_args;

MPK_API mpk_status mpk_cmd_synth(const mpk_synth_args* args);
/* The mean metrics table is copied into `table` like mpk_config_to_string;
 * table may be NULL. */
MPK_API mpk_status mpk_cmd_train(const mpk_train_args* args, char* table, size_t capacity, size_t* needed);
MPK_API mpk_status mpk_cmd_eval(const mpk_eval_args* args, char* table, size_t capacity, size_t* needed);
MPK_API mpk_status mpk_cmd_gradcam(const mpk_gradcam_args* args);
/* MPK_ERR_GRADCHECK when any check fails. */
MPK_API mpk_status mpk_cmd_gradcheck(const mpk_gradcheck_args* args);
/* out may be NULL to reuse the recorded output directory. */
MPK_API mpk_status mpk_cmd_rerun(const char* manifest, const char* out);

#ifdef __cplusplus
}
#endif

#endif /* MPFKANSC_MPFKANSC_H_ */
