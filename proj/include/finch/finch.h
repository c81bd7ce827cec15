/* SPDX-License-Identifier: Apache-2.0 */
#ifndef FINCH_FINCH_H
#define FINCH_FINCH_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#  ifdef FINCH_BUILDING_LIBRARY
#    define FINCH_API __declspec(dllexport)
#  else
#    define FINCH_API __declspec(dllimport)
#  endif
#else
#  define FINCH_API __attribute__((visibility("default")))
#endif

typedef struct finch_engine finch_engine;
typedef struct finch_server finch_server;

typedef enum finch_status {
  FINCH_OK = 0,
  FINCH_INVALID_ARGUMENT = 1,
  FINCH_PARSE_ERROR = 2,
  FINCH_SCHEMA_ERROR = 3,
  FINCH_EMPTY_DATA = 4,
  FINCH_NOT_FOUND = 5,
  FINCH_CHAIN_ERROR = 6,
  FINCH_UNAVAILABLE = 7,
  FINCH_IO_ERROR = 8,
  FINCH_BIND_ERROR = 9,
  FINCH_INTERNAL_ERROR = 10
} finch_status;

/* Strings returned through `char** out` are owned by the caller and released
 * with finch_string_free. On failure *out is set to NULL. */
FINCH_API void finch_string_free(char* s);
FINCH_API const char* finch_version(void);

/* Message and detail of the last failure on the calling thread. */
FINCH_API const char* finch_last_error(void);
FINCH_API const char* finch_last_error_detail(void);
FINCH_API const char* finch_status_name(finch_status status);

/* config_json may be NULL: the FINCH_CONFIG file is used if set, else defaults. */
FINCH_API finch_status finch_engine_create(const char* config_json, finch_engine** out);
FINCH_API void finch_engine_destroy(finch_engine* engine);

/* schema_json may be NULL: `<stem>.schema.json` next to the table is read.
 * dataset_id may be NULL: the file stem is used. Writes dataset info JSON. */
FINCH_API finch_status finch_load_dataset(finch_engine* engine, const char* path,
                                          const char* schema_json, const char* dataset_id,
                                          char** out);
FINCH_API finch_status finch_add_dataset(finch_engine* engine, const char* bytes, unsigned long size,
                                         const char* schema_json, char** out);
FINCH_API finch_status finch_load_directory(finch_engine* engine, const char* dir, char** out);
FINCH_API finch_status finch_overview(finch_engine* engine, const char* dataset_id,
                                      const char* request_json, char** out);

FINCH_API finch_status finch_session_create(finch_engine* engine, const char* request_json,
                                            char** out);
FINCH_API finch_status finch_session_command(finch_engine* engine, const char* session_id,
                                             const char* command_json, char** out);
FINCH_API finch_status finch_session_payload(finch_engine* engine, const char* session_id,
                                             char** out);
/* kind may be NULL for the session's configured score kind. */
FINCH_API finch_status finch_session_ranking(finch_engine* engine, const char* session_id,
                                             const char* kind, char** out);
FINCH_API finch_status finch_session_close(finch_engine* engine, const char* session_id);

/* Request: {"dataset_id", "x_feature", "chain"?, "target"?, "instance"?, "view"?}. */
FINCH_API finch_status finch_explain(finch_engine* engine, const char* request_json, char** out);

/* Generates a synthetic table plus sidecars. spec_json may be NULL. */
FINCH_API finch_status finch_synth(const char* spec_json, const char* out_path);
FINCH_API finch_status finch_pdp_compare(finch_engine* engine, const char* path,
                                         const char* feature, char** out);

FINCH_API finch_status finch_server_start(finch_engine* engine, const char* host, int port,
                                          finch_server** out);
FINCH_API int finch_server_port(const finch_server* server);
FINCH_API void finch_server_stop(finch_server* server);

#ifdef __cplusplus
}
#endif

#endif /* FINCH_FINCH_H */
