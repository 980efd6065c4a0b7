#include "pmf/pmf.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "bench/run.hpp"
#include "common/error.hpp"

struct pmf_log {
  pmf::EventLog log;
};

struct pmf_panel {
  pmf::DFPanel panel;
  std::vector<std::string> keys;
};

struct pmf_forecaster {
  std::string name;
  pmf::ForecasterFactory factory;
  std::unique_ptr<pmf::Forecaster> instance;
};

struct pmf_forecast_set {
  pmf::ForecastSet set;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_stage;

pmf_status to_status(pmf::Errc code) { return static_cast<pmf_status>(static_cast<int>(code)); }

template <typename F>
pmf_status guard(F&& f) {
  last_error.clear();
  last_stage.clear();
  try {
    f();
    return PMF_OK;
  } catch (const pmf::StageError& e) {
    last_error = e.what();
    last_stage = e.stage();
    return to_status(e.code());
  } catch (const pmf::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return PMF_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return PMF_E_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return PMF_E_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) pmf::fail(pmf::Errc::InvalidArgument, what);
}

pmf_panel* wrap(pmf::DFPanel panel) {
  auto p = std::make_unique<pmf_panel>();
  p->panel = std::move(panel);
  for (const auto& k : p->panel.vocabulary()) p->keys.push_back(k.str());
  return p.release();
}

std::ofstream open_out(const char* path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) pmf::fail(pmf::Errc::Io, std::string("cannot write '") + path + "'");
  return out;
}

std::vector<pmf::ForecastSet> collect(const pmf_forecast_set* const* sets, size_t n) {
  require(sets != nullptr && n > 0, "at least one forecast set is required");
  std::vector<pmf::ForecastSet> out;
  for (size_t i = 0; i < n; ++i) {
    require(sets[i] != nullptr, "null forecast set");
    out.push_back(sets[i]->set);
  }
  return out;
}

pmf::RoundingMode rounding(pmf_dfg_mode mode) {
  return mode == PMF_DFG_RAW_CLIP ? pmf::RoundingMode::RawClip : pmf::RoundingMode::RoundClip;
}

}  // namespace

extern "C" {

const char* pmf_status_name(pmf_status status) {
  if (status == PMF_OK) return "Ok";
  if (status < PMF_E_INVALID_ARGUMENT || status > PMF_E_INTERNAL) return "Unknown";
  return pmf::errc_name(static_cast<pmf::Errc>(status)).data();
}

const char* pmf_last_error(void) { return last_error.c_str(); }
const char* pmf_last_error_stage(void) { return last_stage.c_str(); }
const char* pmf_version(void) { return "0.1.0"; }

pmf_status pmf_parse_duration(const char* text, int64_t* seconds) {
  return guard([&] {
    require(text && seconds, "null argument");
    const auto d = pmf::parse_duration(text);
    if (!d || *d <= pmf::Duration::zero()) pmf::fail(pmf::Errc::InvalidArgument, std::string("bad duration '") + text + "'");
    *seconds = std::chrono::duration_cast<std::chrono::seconds>(*d).count();
    if (*seconds <= 0) pmf::fail(pmf::Errc::InvalidArgument, "duration must be at least one second");
  });
}

void pmf_ingest_options_init(pmf_ingest_options* opts) {
  if (!opts) return;
  static const pmf::IngestConfig defaults;
  opts->case_column = defaults.case_column.c_str();
  opts->activity_column = defaults.activity_column.c_str();
  opts->timestamp_column = defaults.timestamp_column.c_str();
  opts->delimiter = defaults.delimiter;
  opts->timestamp_format = defaults.timestamp_format.c_str();
  opts->reject_naive_timestamps = 0;
  opts->min_case_events = 0;
  opts->drop_duplicate_events = 0;
  opts->keep_from = nullptr;
  opts->keep_until = nullptr;
}

pmf_status pmf_log_read(const char* path, const pmf_ingest_options* opts, pmf_log** out) {
  return guard([&] {
    require(path && out, "null argument");
    pmf_ingest_options o;
    pmf_ingest_options_init(&o);
    if (opts) o = *opts;
    pmf::IngestConfig cfg;
    if (o.case_column) cfg.case_column = o.case_column;
    if (o.activity_column) cfg.activity_column = o.activity_column;
    if (o.timestamp_column) cfg.timestamp_column = o.timestamp_column;
    if (o.delimiter) cfg.delimiter = o.delimiter;
    if (o.timestamp_format) cfg.timestamp_format = o.timestamp_format;
    cfg.timezone = o.reject_naive_timestamps ? pmf::TimezonePolicy::RejectNaive : pmf::TimezonePolicy::AssumeUtc;
    pmf::PreprocessOptions pre;
    pre.min_case_events = o.min_case_events;
    pre.drop_duplicate_events = o.drop_duplicate_events != 0;
    if (o.keep_from) pre.keep_from = pmf::parse_config_time(o.keep_from, "keep_from");
    if (o.keep_until) pre.keep_until = pmf::parse_config_time(o.keep_until, "keep_until");
    auto log = std::make_unique<pmf_log>();
    log->log = pmf::preprocess(pmf::read_log_file(path, cfg), pre);
    *out = log.release();
  });
}

pmf_status pmf_log_write(const pmf_log* log, const char* path) {
  return guard([&] {
    require(log && path, "null argument");
    auto out = open_out(path);
    pmf::write_csv(out, log->log);
  });
}

void pmf_log_free(pmf_log* log) { delete log; }

pmf_status pmf_log_validate(const pmf_log* log, pmf_log_summary* out) {
  return guard([&] {
    require(log && out, "null argument");
    const auto r = pmf::validate(log->log);
    *out = {r.cases, r.events, r.activities, r.span_days, r.duplicates.size()};
  });
}

pmf_status pmf_panel_extract(const pmf_log* log, int64_t window_seconds, pmf_endpoint_mode endpoints,
                             pmf_window_assignment assignment, pmf_panel** out) {
  return guard([&] {
    require(log && out, "null argument");
    require(window_seconds > 0, "window must be positive");
    const auto spec = pmf::partition_windows(log->log, std::chrono::seconds(window_seconds));
    auto panel = pmf::extract_df_counts(
        log->log, spec, endpoints == PMF_ENDPOINTS_NONE ? pmf::EndpointMode::None : pmf::EndpointMode::CaseEndpoints,
        assignment == PMF_ASSIGN_FIRST ? pmf::WindowAssignment::FirstEvent : pmf::WindowAssignment::SecondEvent);
    if (panel.length() >= 10) panel = pmf::split_panel(std::move(panel));
    *out = wrap(std::move(panel));
  });
}

pmf_status pmf_panel_read(const char* path, pmf_panel** out) {
  return guard([&] {
    require(path && out, "null argument");
    *out = wrap(pmf::read_panel_file(path));
  });
}

pmf_status pmf_panel_write(const pmf_panel* panel, const char* path) {
  return guard([&] {
    require(panel && path, "null argument");
    pmf::write_panel_file(path, panel->panel);
  });
}

void pmf_panel_free(pmf_panel* panel) { delete panel; }

size_t pmf_panel_length(const pmf_panel* panel) { return panel ? panel->panel.length() : 0; }
size_t pmf_panel_series_count(const pmf_panel* panel) { return panel ? panel->panel.series_count() : 0; }

const char* pmf_panel_key(const pmf_panel* panel, size_t d) {
  if (!panel || d >= panel->keys.size()) return nullptr;
  return panel->keys[d].c_str();
}

pmf_status pmf_panel_value(const pmf_panel* panel, size_t t, size_t d, int64_t* out) {
  return guard([&] {
    require(panel && out, "null argument");
    require(t < panel->panel.length() && d < panel->panel.series_count(), "panel index out of range");
    *out = panel->panel.at(t, d);
  });
}

pmf_status pmf_panel_split(const pmf_panel* panel, size_t* train_end, size_t* val_end) {
  return guard([&] {
    require(panel && train_end && val_end, "null argument");
    const auto& s = panel->panel.split();
    *train_end = s.train_end;
    *val_end = s.val_end;
  });
}

pmf_status pmf_characterize(const pmf_panel* panel, int period, pmf_characterization* out) {
  return guard([&] {
    require(panel && out, "null argument");
    const auto r = pmf::characterize(panel->panel, "", period);
    *out = {r.seasonality, r.trend, r.stationarity, r.transition, r.shifting, r.correlation, r.non_gaussianity};
  });
}

pmf_status pmf_characterize_write(const pmf_panel* panel, const char* dataset, int period, const char* path) {
  return guard([&] {
    require(panel && dataset && path, "null argument");
    const auto row = pmf::characterize(panel->panel, dataset, period);
    auto out = open_out(path);
    pmf::write_characterization_header(out);
    pmf::write_characterization_row(out, row);
  });
}

pmf_status pmf_forecaster_builtin(const char* name, int season, int mean_window, pmf_forecaster** out) {
  return guard([&] {
    require(name && out, "null argument");
    pmf::BuiltinOptions opts{season, mean_window};
    auto f = std::make_unique<pmf_forecaster>();
    f->instance = pmf::make_builtin(name, opts);
    f->name = name;
    std::string n = name;
    f->factory = [n, opts] { return pmf::make_builtin(n, opts); };
    *out = f.release();
  });
}

pmf_status pmf_forecaster_external(const char* command_line, int64_t timeout_ms, const char* display_name,
                                   pmf_forecaster** out) {
  return guard([&] {
    require(command_line && out, "null argument");
    require(timeout_ms > 0, "timeout must be positive");
    pmf::ExternalOptions opts;
    opts.timeout = std::chrono::milliseconds(timeout_ms);
    if (display_name) opts.display_name = display_name;
    auto f = std::make_unique<pmf_forecaster>();
    f->factory = pmf::external_factory(command_line, opts);
    f->instance = f->factory();
    f->name = f->instance->name();
    *out = f.release();
  });
}

const char* pmf_forecaster_name(const pmf_forecaster* f) { return f ? f->name.c_str() : nullptr; }

void pmf_forecaster_free(pmf_forecaster* f) { delete f; }

pmf_status pmf_forecast(pmf_forecaster* f, const double* series, size_t n, int horizon, double* out) {
  return guard([&] {
    require(f && series && out, "null argument");
    pmf::ForecastRequest req;
    req.series.assign(series, series + n);
    req.horizon = horizon;
    req.validate();
    if (!f->instance) f->instance = f->factory();
    const auto point = pmf::quantile_to_point(f->instance->forecast(req));
    require(point.size() == static_cast<size_t>(horizon), "forecast has the wrong length");
    std::copy(point.begin(), point.end(), out);
  });
}

pmf_status pmf_backtest(const pmf_panel* panel, pmf_forecaster* f, int horizon, unsigned jobs,
                        pmf_forecast_set** out) {
  return guard([&] {
    require(panel && f && out, "null argument");
    const auto plan = pmf::make_plan(panel->panel, horizon);
    pmf::BacktestOptions opts;
    opts.jobs = jobs == 0 ? 1 : jobs;
    opts.freq = pmf::freq_tag(panel->panel.windows().width);
    // The probe instance is released so workers start their own.
    f->instance.reset();
    auto set = std::make_unique<pmf_forecast_set>();
    set->set = pmf::rolling_backtest(panel->panel, f->factory, plan, opts);
    set->set.set_model(f->name);
    *out = set.release();
  });
}

pmf_status pmf_forecast_set_read(const char* path, pmf_forecast_set** out) {
  return guard([&] {
    require(path && out, "null argument");
    auto set = std::make_unique<pmf_forecast_set>();
    set->set = pmf::read_forecast_file(path);
    *out = set.release();
  });
}

pmf_status pmf_forecast_set_write(const pmf_forecast_set* fs, const char* path) {
  return guard([&] {
    require(fs && path, "null argument");
    pmf::write_forecast_file(path, fs->set);
  });
}

void pmf_forecast_set_free(pmf_forecast_set* fs) { delete fs; }

const char* pmf_forecast_set_model(const pmf_forecast_set* fs) { return fs ? fs->set.model().c_str() : nullptr; }
size_t pmf_forecast_set_cell_count(const pmf_forecast_set* fs) { return fs ? fs->set.cell_count() : 0; }
size_t pmf_forecast_set_failure_count(const pmf_forecast_set* fs) { return fs ? fs->set.failures().size() : 0; }

pmf_status pmf_forecast_set_value(const pmf_forecast_set* fs, size_t d, size_t origin, int step, double* out) {
  return guard([&] {
    require(fs && out, "null argument");
    const auto v = fs->set.get(d, origin, step);
    if (!v) pmf::fail(pmf::Errc::NoCells, "forecast cell is missing");
    *out = *v;
  });
}

pmf_status pmf_evaluate(const pmf_panel* panel, const pmf_forecast_set* fs, pmf_metric_summary* out) {
  return guard([&] {
    require(panel && fs && out, "null argument");
    const auto row = pmf::evaluate(panel->panel, fs->set, "");
    *out = {row.mae.mean, row.mae.std, row.rmse.mean, row.rmse.std, row.per_series.size(), row.skipped.size()};
  });
}

pmf_status pmf_evaluate_write(const pmf_panel* panel, const pmf_forecast_set* const* sets, size_t n,
                              const char* baseline, const char* dataset, const char* path) {
  return guard([&] {
    require(panel && baseline && dataset && path, "null argument");
    std::vector<pmf::MetricRow> rows;
    for (const auto& s : collect(sets, n)) rows.push_back(pmf::evaluate(panel->panel, s, dataset));
    pmf::apply_baseline(rows, baseline);
    auto out = open_out(path);
    pmf::write_metrics_header(out);
    for (const auto& r : rows) pmf::write_metrics_rows(out, r);
  });
}

pmf_status pmf_er(const pmf_panel* panel, const pmf_log* log, const pmf_forecast_set* fs, pmf_dfg_mode mode,
                  double tau, pmf_er_summary* out) {
  return guard([&] {
    require(panel && log && fs && out, "null argument");
    const auto r = pmf::er_over_test(panel->panel, fs->set, log->log, {rounding(mode), tau});
    *out = {r.er.mean, r.er.std, r.mean_fitting_ratio, r.windows.size(), r.empty_windows.size()};
  });
}

pmf_status pmf_er_write(const pmf_panel* panel, const pmf_log* log, const pmf_forecast_set* const* sets, size_t n,
                        pmf_dfg_mode mode, double tau, int references, const char* dataset, const char* path) {
  return guard([&] {
    require(panel && log && dataset && path, "null argument");
    std::vector<pmf::ERResult> results;
    for (const auto& s : collect(sets, n)) {
      results.push_back(pmf::er_over_test(panel->panel, s, log->log, {rounding(mode), tau}, dataset));
    }
    if (references) {
      results.push_back(pmf::er_truth(panel->panel, log->log, dataset));
      results.push_back(pmf::er_training(panel->panel, log->log, dataset));
    }
    auto out = open_out(path);
    pmf::write_er_header(out);
    for (const auto& r : results) pmf::write_er_rows(out, r);
  });
}

pmf_status pmf_run_config(const char* config_path, const char* output_dir, unsigned jobs) {
  return guard([&] {
    require(config_path != nullptr, "null argument");
    auto cfg = pmf::load_run_config(config_path);
    if (output_dir) cfg.output_dir = output_dir;
    if (jobs > 0) cfg.jobs = jobs;
    pmf::run(cfg);
  });
}

pmf_status pmf_render_summary(const char* dir, char** out) {
  return guard([&] {
    require(dir && out, "null argument");
    const std::string text = pmf::render_summary(dir);
    char* buf = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

void pmf_string_free(char* s) { std::free(s); }

}  // extern "C"
