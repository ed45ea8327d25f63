#ifndef CQLIN_H
#define CQLIN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result of every fallible call.
 */
typedef enum CqlinStatus {
  CQLIN_STATUS_OK = 0,
  CQLIN_STATUS_NULL_ARGUMENT = 1,
  CQLIN_STATUS_INVALID_UTF8 = 2,
  CQLIN_STATUS_PARSE = 3,
  CQLIN_STATUS_INVALID = 4,
  CQLIN_STATUS_TGD_VIOLATION = 5,
  CQLIN_STATUS_BUDGET_EXHAUSTED = 6,
  CQLIN_STATUS_OUT_OF_BOUND = 7,
  CQLIN_STATUS_PANIC = 8,
} CqlinStatus;

/*
 In-memory database.
 */
typedef struct CqlinDatabase CqlinDatabase;

/*
 Parsed conjunctive query.
 */
typedef struct CqlinQuery CqlinQuery;

/*
 Parsed set of TGDs.
 */
typedef struct CqlinTgds CqlinTgds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next library call on the same thread.
 */
const char *cqlin_last_error(void);

/*
 # Safety
 `s` must be null or a string returned by this library.
 */
void cqlin_string_free(char *s);

/*
 Parses a query such as `q(x) :- R(x,y).`

 # Safety
 `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CqlinStatus cqlin_query_parse(const char *text_, struct CqlinQuery **out);

/*
 # Safety
 `q` must be null or a handle from [`cqlin_query_parse`].
 */
void cqlin_query_free(struct CqlinQuery *q);

/*
 Parses TGDs, one `body -> head.` rule per line. The empty string is the
 empty set.

 # Safety
 `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CqlinStatus cqlin_tgds_parse(const char *text_, struct CqlinTgds **out);

/*
 # Safety
 `t` must be null or a handle from [`cqlin_tgds_parse`].
 */
void cqlin_tgds_free(struct CqlinTgds *t);

/*
 Parses facts such as `R(1,2).`

 # Safety
 `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CqlinStatus cqlin_database_parse(const char *text_, struct CqlinDatabase **out);

/*
 # Safety
 `db` must be null or a database handle from this library.
 */
void cqlin_database_free(struct CqlinDatabase *db);

/*
 Number of facts, or 0 for a null handle.

 # Safety
 `db` must be null or a database handle from this library.
 */
size_t cqlin_database_len(const struct CqlinDatabase *db);

/*
 Checks that `db` satisfies `tgds`. Returns `TgdViolation` with the
 violated rule in the error message otherwise.

 # Safety
 Both handles must be valid.
 */
enum CqlinStatus cqlin_check(const struct CqlinDatabase *db, const struct CqlinTgds *tgds);

/*
 Skolem chase of `db` under `tgds` with at most `budget` steps. The result
 is a new database handle.

 # Safety
 Both handles must be valid and `out` a valid pointer.
 */
enum CqlinStatus cqlin_chase(const struct CqlinDatabase *db,
                             const struct CqlinTgds *tgds,
                             uint64_t budget,
                             struct CqlinDatabase **out);

/*
 Tractability verdict as a JSON object. `mode` is one of `SINGLE_TEST`,
 `ALL_TEST`, `COUNT`, `DIRECT_ACCESS`, `ENUMERATE`; `order` is a
 comma-separated variable list or null.

 # Safety
 Handles must be valid, strings NUL-terminated, `out` a valid pointer.
 The returned string is freed with [`cqlin_string_free`].
 */
enum CqlinStatus cqlin_classify(const struct CqlinQuery *q,
                                const struct CqlinTgds *tgds,
                                const char *mode,
                                const char *order,
                                char **out_json);

/*
 Number of distinct answers of `q` on `db`.

 # Safety
 Handles must be valid and `out` a valid pointer.
 */
enum CqlinStatus cqlin_count(const struct CqlinQuery *q,
                             const struct CqlinDatabase *db,
                             uint64_t *out);

/*
 All answers of `q` on `db` as a JSON array of tuples, in enumeration
 order.

 # Safety
 Handles must be valid and `out_json` a valid pointer. The returned string
 is freed with [`cqlin_string_free`].
 */
enum CqlinStatus cqlin_enumerate(const struct CqlinQuery *q,
                                 const struct CqlinDatabase *db,
                                 char **out_json);

/*
 The `index`-th answer (1-based) in the lexicographic order given by the
 comma-separated variable list `order`, as a JSON array.

 # Safety
 Handles must be valid, `order` NUL-terminated, `out_json` a valid
 pointer. The returned string is freed with [`cqlin_string_free`].
 */
enum CqlinStatus cqlin_access(const struct CqlinQuery *q,
                              const struct CqlinDatabase *db,
                              const char *order,
                              uint64_t index,
                              char **out_json);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CQLIN_H */
