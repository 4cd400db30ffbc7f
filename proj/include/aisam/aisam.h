// Copyright 2026 The aisam Authors.
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

#ifndef AISAM_AISAM_H_
#define AISAM_AISAM_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define AISAM_API __declspec(dllexport)
#else
#define AISAM_API __attribute__((visibility("default")))
#endif

typedef enum aisam_status {
  AISAM_OK = 0,
  AISAM_ERR_INVALID_ARGUMENT = 1, /* bad flag value, config or request */
  AISAM_ERR_IO = 2,               /* file missing or unwritable */
  AISAM_ERR_FORMAT = 3,           /* malformed PPM/PGM/checkpoint/JSON */
  AISAM_ERR_NOT_FOUND = 4,        /* missing dataset, unknown sample id or route */
  AISAM_ERR_NUMERIC = 5,          /* non-finite value during training */
  AISAM_ERR_CHECK_FAILED = 6,     /* a verification did not pass */
  AISAM_ERR_INTERNAL = 7
} aisam_status;

/* Message for the last failing call on this thread; never NULL. */
AISAM_API const char* aisam_last_error(void);
AISAM_API const char* aisam_version(void);
/* Releases strings returned through char** out-parameters. */
AISAM_API void aisam_free(char* s);

/* Writes <out_dir>/index.jsonl, images/ and masks/. */
AISAM_API aisam_status aisam_generate_dataset(const char* out_dir, int count, int size, int num_classes,
                                              uint64_t seed);

/* config_json: training config object (may be NULL or "{}"); keys absent
 * keep their defaults. log_path may be NULL. *summary_json receives the
 * epoch log as a JSON array. */
AISAM_API aisam_status aisam_train(const char* data_dir, const char* out_ckpt, const char* config_json,
                                   const char* log_path, char** summary_json);

/* options_json: {"split": "test"|"train"|"all", "one_hot": bool,
 * "classes": "auto"|"gt"}. *report_json receives mean and per-class DICE. */
AISAM_API aisam_status aisam_evaluate(const char* data_dir, const char* ckpt_path, const char* options_json,
                                      char** report_json);

/* Dataset-averaged PCM and OCM written as CSV. prompt_kind is "point" or
 * "box"; points is the number of point prompts per class. */
AISAM_API aisam_status aisam_pcm(const char* data_dir, const char* ckpt_path, const char* prompt_kind, int points,
                                 const char* out_csv, char** summary_json);

/* Runs the gradient check suite. *max_rel_error receives the largest error
 * over all cases; AISAM_ERR_CHECK_FAILED when it exceeds threshold. */
AISAM_API aisam_status aisam_grad_check(uint64_t seed, double threshold, double* max_rel_error, char** report_json);

/* Service: request handlers over one loaded checkpoint. */
typedef struct aisam_service aisam_service;

AISAM_API aisam_status aisam_service_create(const char* ckpt_path, int cache_size, aisam_service** out);
AISAM_API void aisam_service_destroy(aisam_service* svc);
/* Handles one request; *http_status and *response_body are always set on
 * AISAM_OK, including for 4xx/5xx outcomes. */
AISAM_API aisam_status aisam_service_handle(aisam_service* svc, const char* method, const char* path, const char* body,
                                            size_t body_len, int* http_status, char** response_body);
/* Serves HTTP until the process is stopped. */
AISAM_API aisam_status aisam_service_serve(aisam_service* svc, const char* host, int port);

/* Runs /refine (or /segment when edits are empty) for an image file and
 * writes <prefix>.json, <prefix>_labels.pgm and <prefix>_class<id>.pgm.
 * request_json holds optional "classes", "one_hot" and "edits". */
AISAM_API aisam_status aisam_infer(aisam_service* svc, const char* image_path, const char* request_json,
                                   const char* out_prefix, char** response_json);

#ifdef __cplusplus
}
#endif

#endif /* AISAM_AISAM_H_ */
