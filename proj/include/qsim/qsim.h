#ifndef QSIM_QSIM_H
#define QSIM_QSIM_H

/* C interface to the qubit-oscillator open-system simulator.
 *
 * Every function returns a status code; on failure a description is
 * available from qsim_last_error() on the calling thread. Handles are opaque
 * and owned by the caller, who releases them with the matching _free call. */

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define QSIM_API __declspec(dllexport)
#else
#define QSIM_API __attribute__((visibility("default")))
#endif

typedef enum qsim_status {
  QSIM_OK = 0,
  QSIM_ERR_INVALID_ARGUMENT = 1,
  QSIM_ERR_CONFIG = 2,
  QSIM_ERR_SOLVER = 3,
  QSIM_ERR_CONVERGENCE = 4,
  QSIM_ERR_IO = 5,
  QSIM_ERR_INTERNAL = 6
} qsim_status;

typedef struct qsim_config qsim_config;
typedef struct qsim_report qsim_report;

QSIM_API const char* qsim_version(void);
QSIM_API const char* qsim_last_error(void);
QSIM_API const char* qsim_status_name(qsim_status status);

/* Parses a JSON scenario document. When protocol is non-NULL the document may
 * omit its "protocol" key; if present it must match. */
QSIM_API qsim_status qsim_config_parse(const char* json, const char* protocol, qsim_config** out);
QSIM_API qsim_status qsim_config_load(const char* path, const char* protocol, qsim_config** out);
QSIM_API void qsim_config_free(qsim_config* config);

QSIM_API qsim_status qsim_config_set_fock_cutoff(qsim_config* config, int cutoff);
QSIM_API qsim_status qsim_config_set_tolerance(qsim_config* config, double tolerance);
QSIM_API qsim_status qsim_config_set_workers(qsim_config* config, int workers);
QSIM_API qsim_status qsim_config_set_convergence_gate(qsim_config* config, int enabled);
QSIM_API const char* qsim_config_protocol(const qsim_config* config);

/* Runs the configured protocol. A report whose convergence gate failed is
 * still returned (status QSIM_OK); query it with qsim_report_gate_passed. */
QSIM_API qsim_status qsim_run(const qsim_config* config, qsim_report** out);

/* Full report as JSON text. The pointer stays valid until the report is freed. */
QSIM_API const char* qsim_report_json(const qsim_report* report);
QSIM_API qsim_status qsim_report_headline(const qsim_report* report, const char* key, double* value);
QSIM_API int qsim_report_gate_passed(const qsim_report* report);
/* Writes report.json and the CSV tables into dir, creating it if needed. */
QSIM_API qsim_status qsim_report_write(const qsim_report* report, const char* dir);
QSIM_API void qsim_report_free(qsim_report* report);

#ifdef __cplusplus
}
#endif

#endif
