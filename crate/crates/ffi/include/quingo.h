#ifndef QUINGO_H
#define QUINGO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Start every qubit in |0> instead of a seeded random state.
 */
#define QG_FLAG_ZERO_INIT 1

/**
 * Executing a pulse is an error.
 */
#define QG_FLAG_STRICT_PULSE 2

/**
 * Serialize doubles as 4-byte floats.
 */
#define QG_FLAG_F32_DOUBLES 4

typedef enum QgStatus {
  QG_STATUS_OK = 0,
  QG_STATUS_NULL_ARGUMENT = 1,
  QG_STATUS_INVALID_UTF8 = 2,
  QG_STATUS_COMPILE_ERROR = 3,
  QG_STATUS_RUNTIME_ERROR = 4,
  QG_STATUS_NOT_COMPLETED = 5,
} QgStatus;

typedef struct QgRun QgRun;

typedef struct QgSession QgSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a session for the platform configuration at `config_path`.
 * Returns null on a null or non-UTF-8 path.
 *
 * # Safety
 * `config_path` must be null or a valid NUL-terminated string.
 */
struct QgSession *qg_session_new(const char *config_path, uint64_t seed);

/**
 * # Safety
 * `session` must be null or a pointer from [`qg_session_new`] not yet freed.
 */
void qg_session_free(struct QgSession *session);

/**
 * # Safety
 * `session` must be a live session; `path` a NUL-terminated string.
 */
enum QgStatus qg_session_add_search_path(struct QgSession *session, const char *path);

/**
 * Sets `QG_FLAG_*` bits for later calls.
 *
 * # Safety
 * `session` must be a live session.
 */
enum QgStatus qg_session_set_flags(struct QgSession *session, uint32_t flags);

/**
 * Compiles and runs `op` from `kernel_path` with a JSON argument array.
 * On success `*out` receives a run to be released with [`qg_run_free`].
 *
 * # Safety
 * `session` must be a live session, the strings NUL-terminated, and
 * `out` a valid pointer.
 */
enum QgStatus qg_call_kernel(struct QgSession *session,
                             const char *kernel_path,
                             const char *op,
                             const char *args_json,
                             struct QgRun **out);

/**
 * Points `*data`/`*len` at the result bytes, valid while `run` lives.
 *
 * # Safety
 * `run` must be a live run; `data` and `len` valid pointers.
 */
enum QgStatus qg_run_result_bytes(const struct QgRun *run, const uint8_t **data, size_t *len);

/**
 * The result's type descriptor text, valid while `run` lives.
 *
 * # Safety
 * `run` must be null or a live run.
 */
const char *qg_run_descriptor(const struct QgRun *run);

/**
 * The decoded result as text, e.g. `(16, 0)`; null on failure.
 *
 * # Safety
 * `run` must be null or a live run.
 */
char *qg_run_text(const struct QgRun *run);

/**
 * # Safety
 * `run` must be null or a run not yet freed.
 */
void qg_run_free(struct QgRun *run);

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *qg_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void qg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QUINGO_H */
