/* spdcq — SPDC photon-pair emission simulator for open nanoresonators,
 * built on a quasi-normal-mode expansion of the two-photon amplitude.
 *
 * C interface of the shared library. All computations run through opaque
 * handles and return status codes; the last error message is kept per
 * thread. Result data flows as named double columns plus a JSON metadata
 * string, requests as JSON documents (see docs/formats.md for the schema).
 */
#ifndef SPDCQ_H
#define SPDCQ_H

#include <stddef.h>

#if defined(_WIN32)
#define SPDCQ_API __declspec(dllexport)
#else
#define SPDCQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spdcq_status {
    SPDCQ_OK = 0,
    SPDCQ_ERROR_USAGE = 1,   /* malformed request or arguments */
    SPDCQ_ERROR_DATA = 2,    /* dataset, validation or I/O failure */
    SPDCQ_ERROR_NUMERIC = 3  /* non-convergence of an iterative method */
} spdcq_status;

typedef struct spdcq_scenario spdcq_scenario;
typedef struct spdcq_table spdcq_table;

SPDCQ_API const char* spdcq_version(void);

/* Message for the most recent failure on this thread; never NULL. */
SPDCQ_API const char* spdcq_last_error(void);

/* ---- scenarios ---------------------------------------------------- */

SPDCQ_API spdcq_status spdcq_scenario_open(const char* path, spdcq_scenario** out);

/* options_json: {"preset": "single-dipole"|"two-mode"|"three-mode-random"|
 *                "sweep-family-member", "seed": <uint>, ...} */
SPDCQ_API spdcq_status spdcq_scenario_generate(const char* options_json, spdcq_scenario** out);

SPDCQ_API spdcq_status spdcq_scenario_save(const spdcq_scenario* scenario, const char* path);

/* Summary JSON (modes, Q factors, grid, volume); free with spdcq_string_free. */
SPDCQ_API spdcq_status spdcq_scenario_info(const spdcq_scenario* scenario, char** json_out);

SPDCQ_API void spdcq_scenario_free(spdcq_scenario* scenario);

/* ---- computations -------------------------------------------------- */

/* request_json: {"op": "xi"|"rate"|"spectrum"|"farfield"|"knife"|"mc-check",
 *                "detection": {...}, "omega_grid": {...}, ...}.
 * The result table owns its columns until spdcq_table_free. */
SPDCQ_API spdcq_status spdcq_compute(const spdcq_scenario* scenario, const char* request_json,
                                     spdcq_table** out);

/* Lateral-scaling sweep over several datasets:
 * {"members": [{"fs": <num>, "path": "..."}, ...], "detection": {...},
 *  "omega_grid": {...}, "full_sum": false} */
SPDCQ_API spdcq_status spdcq_sweep(const char* request_json, spdcq_table** out);

/* Fits offset + amplitude*erf((x-x0)/m); result JSON carries the parameters,
 * 95% confidence half-widths and the RMS residual. */
SPDCQ_API spdcq_status spdcq_fit_erf(const double* positions, const double* rates, size_t count,
                                     char** json_out);

/* ---- result tables -------------------------------------------------- */

SPDCQ_API size_t spdcq_table_column_count(const spdcq_table* table);
SPDCQ_API size_t spdcq_table_row_count(const spdcq_table* table);
SPDCQ_API const char* spdcq_table_column_name(const spdcq_table* table, size_t column);
SPDCQ_API const double* spdcq_table_column_data(const spdcq_table* table, size_t column);
SPDCQ_API const char* spdcq_table_meta_json(const spdcq_table* table);
SPDCQ_API void spdcq_table_free(spdcq_table* table);

SPDCQ_API void spdcq_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* SPDCQ_H */
