/* C interface to the pathgain network coding toolkit. */

#ifndef PATHGAIN_H
#define PATHGAIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PG_OK 0

#define PG_UNSOLVABLE 1

#define PG_ERR_INPUT 2

#define PG_BUDGET_EXCEEDED 3

#define PG_ERR_INTERNAL 4

// Opaque handle to a validated network coding problem.
typedef struct PgProblem PgProblem;

// Opaque handle to a polynomial equation system.
typedef struct PgSystem PgSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *pg_last_error(void);

// Frees a string returned through an out parameter.
//
// # Safety
// `s` must have been produced by this library and not freed before.
void pg_string_free(char *s);

// Parses a problem JSON document into a handle.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be a valid pointer.
int pg_problem_from_json(const char *json, struct PgProblem **out);

// Canonical JSON of a problem handle.
//
// # Safety
// `problem` must be a live handle; `out` must be valid.
int pg_problem_to_json(const struct PgProblem *problem, char **out);

// # Safety
// `problem` must be a handle from this library, freed at most once.
void pg_problem_free(struct PgProblem *problem);

// Builds the polynomial system of a problem: formulation 0 is the degree-2
// path-gain system, 1 the edge-to-edge gain system. Returns PG_UNSOLVABLE
// when a demanded source is unreachable.
//
// # Safety
// `problem` must be a live handle; `out` must be valid.
int pg_build_system(const struct PgProblem *problem, int formulation, struct PgSystem **out);

// Parses a system JSON document into a handle.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be a valid pointer.
int pg_system_from_json(const char *json, struct PgSystem **out);

// # Safety
// `system` must be a live handle; `out` must be valid.
int pg_system_to_json(const struct PgSystem *system, char **out);

// # Safety
// `system` must be a handle from this library, freed at most once.
void pg_system_free(struct PgSystem *system);

// Prunes, eliminates, and case-splits the system; writes the simplification
// result (reduced system, trace, verdict, branch log) as JSON.
//
// # Safety
// `system` must be a live handle; `out_json` must be valid.
int pg_simplify(const struct PgSystem *system, uint32_t depth, uint32_t width, char **out_json);

// Solves a system over the named field ("p" or "p^m"). On success writes
// the solution JSON; on PG_UNSOLVABLE writes a verdict document instead.
//
// # Safety
// `system` and `field` must be valid; `out_json` must be valid.
int pg_solve(const struct PgSystem *system,
             const char *field,
             uint64_t budget,
             uint32_t depth,
             uint32_t width,
             char **out_json);

// Derives edge-to-edge coding coefficients from a path-gain solution JSON;
// writes the network code JSON.
//
// # Safety
// `problem` must be a live handle; strings and `out_json` must be valid.
int pg_recover(const struct PgProblem *problem, const char *solution_json, char **out_json);

// Verifies a network code JSON by independent forward propagation; writes
// the per-sink report. Returns PG_UNSOLVABLE when any sink fails.
//
// # Safety
// `problem` must be a live handle; strings and `out_json` must be valid.
int pg_verify(const struct PgProblem *problem, const char *code_json, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PATHGAIN_H */
