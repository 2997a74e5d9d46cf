/* Copyright (c) 2026, The ProtoML Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface of libprotoml. All handles are opaque; every call returns a
 * pml_status and, on failure, leaves a message in pml_last_error() for the
 * calling thread. Strings returned through out-parameters are owned by the
 * caller and released with pml_string_free.
 */
#ifndef PROTOML_PROTOML_H
#define PROTOML_PROTOML_H

#include <stddef.h>

#if defined(_WIN32)
#define PML_API __declspec(dllexport)
#else
#define PML_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pml_status {
    PML_OK = 0,
    PML_INVALID_ARGUMENT = 1,
    PML_PARSE = 2,
    PML_SCHEMA = 3,
    PML_IO = 4,
    PML_NOT_FOUND = 5,
    PML_CONFLICT = 6,
    PML_EXISTS = 7,
    PML_HASH_MISMATCH = 8,
    PML_VALIDATION = 9,
    PML_GENERATION = 10,
    PML_INTERNAL = 11
} pml_status;

typedef struct pml_project pml_project;
typedef struct pml_report pml_report;
typedef struct pml_output pml_output;
typedef struct pml_server pml_server;

/* Load modes for pml_project_load / pml_project_load_bundle. */
#define PML_LOAD_STRICT 0
#define PML_LOAD_LENIENT 1

PML_API const char* pml_version(void);
PML_API const char* pml_last_error(void);
/* Stable name of a status, e.g. "SCHEMA_ERROR". */
PML_API const char* pml_status_name(pml_status status);
PML_API void pml_string_free(char* s);

/* ---- projects ---- */
PML_API pml_status pml_project_load(const char* dir, int mode, pml_project** out);
PML_API pml_status pml_project_load_bundle(const char* json, size_t len, int mode, pml_project** out);
PML_API pml_status pml_project_create(const char* name, pml_project** out);
PML_API pml_status pml_project_save(const pml_project* project, const char* dir);
PML_API pml_status pml_project_bundle(const pml_project* project, char** json_out);
PML_API void pml_project_free(pml_project* project);

/* ---- validation ---- */
PML_API pml_status pml_validate(const pml_project* project, pml_report** out);
PML_API int pml_report_passed(const pml_report* report);
PML_API size_t pml_report_error_count(const pml_report* report);
PML_API size_t pml_report_warning_count(const pml_report* report);
PML_API pml_status pml_report_json(const pml_report* report, char** out);
PML_API pml_status pml_report_text(const pml_report* report, char** out);
PML_API void pml_report_free(pml_report* report);

/* ---- generation ----
 * On PML_VALIDATION the report (if report_out is non-null) explains why. */
PML_API pml_status pml_generate(const pml_project* project, int force, pml_output** out, pml_report** report_out);
PML_API size_t pml_output_count(const pml_output* output);
PML_API const char* pml_output_path(const pml_output* output, size_t index);
PML_API const char* pml_output_content(const pml_output* output, size_t index);
/* Replaces dir with exactly the generated files (temp dir + rename). */
PML_API pml_status pml_output_write(const pml_output* output, const char* dir);
PML_API void pml_output_free(pml_output* output);

/* ---- registry ---- */
/* record_json_out (optional): {"name","version","hash"}. */
PML_API pml_status pml_registry_publish(const char* package_dir, const char* registry_root, char** record_json_out);
PML_API pml_status pml_registry_list(const char* registry_root, char** json_out);
/* Adds or updates a requirement, re-resolves and vendors in place. */
PML_API pml_status pml_project_add_package(pml_project* project, const char* name, const char* requirement,
                                           const char* registry_root);

/* ---- service ----
 * host may be NULL (127.0.0.1); port 0 picks a free port. cors_origin may be NULL ("*"). */
PML_API pml_status pml_server_create(const char* host, int port, const char* workspace, const char* registry_root,
                                     const char* cors_origin, pml_server** out);
PML_API int pml_server_port(const pml_server* server);
/* Blocks until pml_server_stop is called from another thread. */
PML_API pml_status pml_server_run(pml_server* server);
PML_API void pml_server_stop(pml_server* server);
PML_API void pml_server_free(pml_server* server);

#ifdef __cplusplus
}
#endif

#endif /* PROTOML_PROTOML_H */
