#ifndef PMF_PMF_H
#define PMF_PMF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PMF_API __declspec(dllexport)
#else
#define PMF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pmf_status {
  PMF_OK = 0,
  PMF_E_INVALID_ARGUMENT = 1,
  PMF_E_IO = 2,
  PMF_E_MISSING_COLUMN = 3,
  PMF_E_BAD_TIMESTAMP = 4,
  PMF_E_BAD_ACTIVITY = 5,
  PMF_E_EMPTY_LOG = 6,
  PMF_E_EVENT_OUTSIDE_SPAN = 7,
  PMF_E_TOO_SHORT = 8,
  PMF_E_NO_MEDIAN = 9,
  PMF_E_PROTOCOL = 10,
  PMF_E_TIMEOUT = 11,
  PMF_E_CHILD_EXITED = 12,
  PMF_E_LAUNCH_FAILED = 13,
  PMF_E_REMOTE = 14,
  PMF_E_NO_CELLS = 15,
  PMF_E_MISSING_PREDICTION = 16,
  PMF_E_EMPTY_SUBLOG = 17,
  PMF_E_CONFIG = 18,
  PMF_E_FORMAT = 19,
  PMF_E_INTERNAL = 20
} pmf_status;

/* Stable identifier such as "BadTimestamp"; "Ok" for PMF_OK. */
PMF_API const char* pmf_status_name(pmf_status status);
/* Message of the last failed call on this thread ("" after success). */
PMF_API const char* pmf_last_error(void);
/* Pipeline stage of the last failed pmf_run_config call, else "". */
PMF_API const char* pmf_last_error_stage(void);
PMF_API const char* pmf_version(void);
/* "1d", "12h", "30m", "45s" or plain seconds. */
PMF_API pmf_status pmf_parse_duration(const char* text, int64_t* seconds);

typedef struct pmf_log pmf_log;
typedef struct pmf_panel pmf_panel;
typedef struct pmf_forecaster pmf_forecaster;
typedef struct pmf_forecast_set pmf_forecast_set;

/* ---- event logs ---------------------------------------------------- */

typedef struct pmf_ingest_options {
  const char* case_column;
  const char* activity_column;
  const char* timestamp_column;
  char delimiter;
  const char* timestamp_format;
  int reject_naive_timestamps;
  size_t min_case_events;
  int drop_duplicate_events;
  const char* keep_from;  /* "YYYY-MM-DD[THH:MM:SS]" or NULL */
  const char* keep_until;
} pmf_ingest_options;

PMF_API void pmf_ingest_options_init(pmf_ingest_options* opts);

PMF_API pmf_status pmf_log_read(const char* path, const pmf_ingest_options* opts, pmf_log** out);
/* Canonical CSV (case_id,activity,timestamp). */
PMF_API pmf_status pmf_log_write(const pmf_log* log, const char* path);
PMF_API void pmf_log_free(pmf_log* log);

typedef struct pmf_log_summary {
  size_t cases;
  size_t events;
  size_t activities;
  size_t span_days;
  size_t duplicate_groups;
} pmf_log_summary;

PMF_API pmf_status pmf_log_validate(const pmf_log* log, pmf_log_summary* out);

/* ---- DF panels ----------------------------------------------------- */

typedef enum pmf_endpoint_mode { PMF_ENDPOINTS_CASE = 0, PMF_ENDPOINTS_NONE = 1 } pmf_endpoint_mode;
typedef enum pmf_window_assignment { PMF_ASSIGN_SECOND = 0, PMF_ASSIGN_FIRST = 1 } pmf_window_assignment;

/* Windows of `window_seconds` from UTC midnight of the first event; the
   chronological split is attached when the panel has >= 10 windows. */
PMF_API pmf_status pmf_panel_extract(const pmf_log* log, int64_t window_seconds, pmf_endpoint_mode endpoints,
                                     pmf_window_assignment assignment, pmf_panel** out);
PMF_API pmf_status pmf_panel_read(const char* path, pmf_panel** out);
PMF_API pmf_status pmf_panel_write(const pmf_panel* panel, const char* path);
PMF_API void pmf_panel_free(pmf_panel* panel);

PMF_API size_t pmf_panel_length(const pmf_panel* panel);
PMF_API size_t pmf_panel_series_count(const pmf_panel* panel);
/* "from>>to"; owned by the panel. NULL when d is out of range. */
PMF_API const char* pmf_panel_key(const pmf_panel* panel, size_t d);
PMF_API pmf_status pmf_panel_value(const pmf_panel* panel, size_t t, size_t d, int64_t* out);
PMF_API pmf_status pmf_panel_split(const pmf_panel* panel, size_t* train_end, size_t* val_end);

/* ---- characterization ---------------------------------------------- */

typedef struct pmf_characterization {
  double seasonality;
  double trend;
  double stationarity;
  double transition;
  double shifting;
  double correlation;
  double non_gaussianity;
} pmf_characterization;

PMF_API pmf_status pmf_characterize(const pmf_panel* panel, int period, pmf_characterization* out);
/* Writes characterization.csv (header plus one row for `dataset`). */
PMF_API pmf_status pmf_characterize_write(const pmf_panel* panel, const char* dataset, int period,
                                          const char* path);

/* ---- forecasters and backtests ------------------------------------- */

/* naive_seasonal, naive_last, drift or window_mean. */
PMF_API pmf_status pmf_forecaster_builtin(const char* name, int season, int mean_window, pmf_forecaster** out);
/* External process speaking the line-delimited JSON protocol. The command
   is launched once here to verify the handshake. `display_name` may be NULL. */
PMF_API pmf_status pmf_forecaster_external(const char* command_line, int64_t timeout_ms, const char* display_name,
                                           pmf_forecaster** out);
PMF_API const char* pmf_forecaster_name(const pmf_forecaster* f);
PMF_API void pmf_forecaster_free(pmf_forecaster* f);

/* One forecast; writes `horizon` values (median track, else point track). */
PMF_API pmf_status pmf_forecast(pmf_forecaster* f, const double* series, size_t n, int horizon, double* out);

PMF_API pmf_status pmf_backtest(const pmf_panel* panel, pmf_forecaster* f, int horizon, unsigned jobs,
                                pmf_forecast_set** out);
PMF_API pmf_status pmf_forecast_set_read(const char* path, pmf_forecast_set** out);
PMF_API pmf_status pmf_forecast_set_write(const pmf_forecast_set* fs, const char* path);
PMF_API void pmf_forecast_set_free(pmf_forecast_set* fs);
PMF_API const char* pmf_forecast_set_model(const pmf_forecast_set* fs);
PMF_API size_t pmf_forecast_set_cell_count(const pmf_forecast_set* fs);
PMF_API size_t pmf_forecast_set_failure_count(const pmf_forecast_set* fs);
/* PMF_E_INVALID_ARGUMENT for an unknown (d, origin, step); PMF_E_NO_CELLS
   when the cell exists but its forecast failed. */
PMF_API pmf_status pmf_forecast_set_value(const pmf_forecast_set* fs, size_t d, size_t origin, int step,
                                          double* out);

/* ---- evaluation ---------------------------------------------------- */

typedef struct pmf_metric_summary {
  double mae_mean;
  double mae_std;
  double rmse_mean;
  double rmse_std;
  size_t series;
  size_t skipped_series;
} pmf_metric_summary;

PMF_API pmf_status pmf_evaluate(const pmf_panel* panel, const pmf_forecast_set* fs, pmf_metric_summary* out);
/* metrics.csv for `n` forecast sets; percentages relative to `baseline`,
   which must be the model name of one of the sets. */
PMF_API pmf_status pmf_evaluate_write(const pmf_panel* panel, const pmf_forecast_set* const* sets, size_t n,
                                      const char* baseline, const char* dataset, const char* path);

typedef enum pmf_dfg_mode { PMF_DFG_ROUND_CLIP = 0, PMF_DFG_RAW_CLIP = 1 } pmf_dfg_mode;

typedef struct pmf_er_summary {
  double er_mean;
  double er_std;
  double mean_fitting_ratio;
  size_t windows;
  size_t empty_windows;
} pmf_er_summary;

/* `log` must be the log the panel was extracted from. */
PMF_API pmf_status pmf_er(const pmf_panel* panel, const pmf_log* log, const pmf_forecast_set* fs, pmf_dfg_mode mode,
                          double tau, pmf_er_summary* out);
/* er.csv; `references` adds the "truth" and "training" rows. */
PMF_API pmf_status pmf_er_write(const pmf_panel* panel, const pmf_log* log, const pmf_forecast_set* const* sets,
                                size_t n, pmf_dfg_mode mode, double tau, int references, const char* dataset,
                                const char* path);

/* ---- end to end ---------------------------------------------------- */

/* Runs a JSON config. `output_dir` overrides the config when non-NULL;
   jobs == 0 keeps the config / PMF_JOBS value. On failure the output
   directory holds error.json and pmf_last_error_stage() names the stage. */
PMF_API pmf_status pmf_run_config(const char* config_path, const char* output_dir, unsigned jobs);
/* Summary tables rebuilt from the CSVs in `dir`; free with pmf_string_free. */
PMF_API pmf_status pmf_render_summary(const char* dir, char** out);
PMF_API void pmf_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif
