#ifndef ACE_H
#define ACE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum AceStatus {
  ACE_STATUS_OK = 0,
  // A required pointer was null.
  ACE_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8 or JSON.
  ACE_STATUS_INVALID_ARGUMENT = 2,
  // The event document failed validation.
  ACE_STATUS_SCHEMA = 3,
  // A knowledge base failed to parse or a goal raised an error.
  ACE_STATUS_KB_ERROR = 4,
  // Unknown package, session or model kind.
  ACE_STATUS_NOT_FOUND = 5,
  // The session is in the wrong state or the question id is stale.
  ACE_STATUS_STATE = 6,
  // The answer does not fit the question's kind.
  ACE_STATUS_ANSWER_TYPE = 7,
  // The top goal has no proof.
  ACE_STATUS_NO_PROOF = 8,
  // A headless run needed more answers than were given.
  ACE_STATUS_ANSWERS_EXHAUSTED = 9,
  // Model fitting or evaluation failed on the given data.
  ACE_STATUS_DATA = 10,
  // I/O or journal failure.
  ACE_STATUS_IO = 11,
  // A bug: the engine panicked. The handle should be discarded.
  ACE_STATUS_INTERNAL = 99,
} AceStatus;

// Engine service holding packages and sessions.
typedef struct AceService AceService;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next call on the same thread; do not free.
const char *ace_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void ace_string_free(char *s);

// In-memory service with the shipped packages.
//
// # Safety
// `out` must be a valid pointer.
enum AceStatus ace_service_new(struct AceService **out);

// Service persisting sessions and tables under `data_dir`; existing
// sessions are replayed from their journals.
//
// # Safety
// `data_dir` must be a NUL-terminated string and `out` a valid pointer.
enum AceStatus ace_service_open(const char *data_dir, struct AceService **out);

// # Safety
// `svc` must come from `ace_service_new`/`ace_service_open` and not be used
// afterwards. Null is ignored.
void ace_service_free(struct AceService *svc);

// Appends a knowledge-base source to a package, creating the package if
// it does not exist.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum AceStatus ace_service_add_source(const struct AceService *svc,
                                      const char *package,
                                      const char *file_name,
                                      const char *text);

// Starts a session for the event (JSON). With a null `package` the package
// follows from the event's category. Writes the session view as JSON.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum AceStatus ace_session_create(const struct AceService *svc,
                                  const char *package,
                                  const char *event_json,
                                  char **out_view_json);

// Session view as JSON: id, state, pending question, answers, report.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum AceStatus ace_session_get(const struct AceService *svc, const char *id, char **out_json);

// Pending question as JSON (`id`, `text`, `kind`).
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum AceStatus ace_session_question(const struct AceService *svc, const char *id, char **out_json);

// Answers question `question_id`. `answer_json` is a JSON boolean, number
// or string (`"yes"`/`"no"` work for yes/no questions). Writes the new
// session view.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum AceStatus ace_session_answer(const struct AceService *svc,
                                  const char *id,
                                  uint64_t question_id,
                                  const char *answer_json,
                                  char **out_view_json);

// Final report as JSON; `ACE_STATUS_STATE` until the session is done.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum AceStatus ace_session_report(const struct AceService *svc, const char *id, char **out_json);

// Goal tree of the latest step as JSON.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum AceStatus ace_session_trace(const struct AceService *svc, const char *id, char **out_json);

// One-shot run. `kb_text` (optional) is loaded after the event's shipped
// package; `answers` (optional) holds one answer per line or a JSON array.
// Writes the report, pending question or error object as JSON and the
// process-style exit code (0 success, 3 answers exhausted, 4 KB error,
// 5 schema, 6 no proof). The status mirrors the exit code.
//
// # Safety
// Pointers must be valid; strings NUL-terminated; optional ones may be null.
enum AceStatus ace_run_headless(const char *kb_text,
                                const char *event_json,
                                const char *answers,
                                char **out_json,
                                int32_t *out_exit_code);

// Fits a model of `kind` (plane, surface, freq, potential, regression,
// dynamical) to a CSV table with default options and writes the model file
// JSON.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum AceStatus ace_model_fit(const char *kind, const char *csv, char **out_model_json);

// Applies a model file to each row of a CSV table; writes a JSON array of
// class decisions or predictions.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
enum AceStatus ace_model_apply(const char *model_json, const char *csv, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACE_H */
