#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmf/pmf.h"

namespace {

struct Failure {
  pmf_status status;
  std::string stage;
};

void check(pmf_status st, const std::string& stage) {
  if (st != PMF_OK) {
    std::string s = pmf_last_error_stage();
    throw Failure{st, s.empty() ? stage : s};
  }
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle(Handle&& o) noexcept : p(o.p) { o.p = nullptr; }
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using LogHandle = Handle<pmf_log, pmf_log_free>;
using PanelHandle = Handle<pmf_panel, pmf_panel_free>;
using ForecasterHandle = Handle<pmf_forecaster, pmf_forecaster_free>;
using SetHandle = Handle<pmf_forecast_set, pmf_forecast_set_free>;

struct IngestFlags {
  std::string case_column = "case_id";
  std::string activity_column = "activity";
  std::string timestamp_column = "timestamp";
  char delimiter = ',';
  std::string timestamp_format = "%Y-%m-%dT%H:%M:%S";
  bool reject_naive = false;
  std::size_t min_case_events = 0;
  bool drop_duplicates = false;
  std::string keep_from;
  std::string keep_until;

  void add(CLI::App* app) {
    app->add_option("--case-column", case_column, "Case id column");
    app->add_option("--activity-column", activity_column, "Activity column");
    app->add_option("--timestamp-column", timestamp_column, "Timestamp column");
    app->add_option("--delimiter", delimiter, "Field delimiter");
    app->add_option("--timestamp-format", timestamp_format, "strptime format of timestamps");
    app->add_flag("--reject-naive", reject_naive, "Reject timestamps without a UTC offset");
    app->add_option("--min-case-events", min_case_events, "Drop cases with fewer events");
    app->add_flag("--drop-duplicates", drop_duplicates, "Drop repeated (case, activity, timestamp) events");
    app->add_option("--from", keep_from, "Drop events before this time");
    app->add_option("--until", keep_until, "Drop events at or after this time");
  }

  LogHandle read(const std::string& path) const {
    pmf_ingest_options o;
    pmf_ingest_options_init(&o);
    o.case_column = case_column.c_str();
    o.activity_column = activity_column.c_str();
    o.timestamp_column = timestamp_column.c_str();
    o.delimiter = delimiter;
    o.timestamp_format = timestamp_format.c_str();
    o.reject_naive_timestamps = reject_naive;
    o.min_case_events = min_case_events;
    o.drop_duplicate_events = drop_duplicates;
    o.keep_from = keep_from.empty() ? nullptr : keep_from.c_str();
    o.keep_until = keep_until.empty() ? nullptr : keep_until.c_str();
    LogHandle log;
    check(pmf_log_read(path.c_str(), &o, log.out()), "ingest");
    return log;
  }
};

PanelHandle read_panel(const std::string& path, const std::string& stage) {
  PanelHandle panel;
  check(pmf_panel_read(path.c_str(), panel.out()), stage);
  return panel;
}

std::vector<SetHandle> read_sets(const std::vector<std::string>& paths, const std::string& stage) {
  std::vector<SetHandle> sets;
  for (const auto& p : paths) {
    SetHandle s;
    check(pmf_forecast_set_read(p.c_str(), s.out()), stage);
    sets.push_back(std::move(s));
  }
  return sets;
}

std::vector<const pmf_forecast_set*> raw(const std::vector<SetHandle>& sets) {
  std::vector<const pmf_forecast_set*> out;
  for (const auto& s : sets) out.push_back(s.get());
  return out;
}

unsigned default_jobs() {
  if (const char* env = std::getenv("PMF_JOBS")) {
    const long j = std::strtol(env, nullptr, 10);
    if (j > 0) return static_cast<unsigned>(j);
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Process model forecasting benchmark"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pmf_version());

  IngestFlags ingest_flags;
  std::string log_path, out_path, panel_path, dataset = "dataset", window = "1d";
  std::string endpoint_mode = "case-endpoints", assignment = "second";
  std::string model, model_name, baseline = "naive_seasonal", dfg_mode = "round-clip";
  std::string dir, config_path, output_dir;
  std::vector<std::string> forecast_paths;
  int horizon = 7, season = 7, mean_window = 28;
  long timeout_ms = 60000;
  unsigned jobs = default_jobs();
  double tau = 0.5;
  bool no_references = false;

  auto* ingest = app.add_subcommand("ingest", "Parse an event log and write its canonical CSV");
  ingest->add_option("--log", log_path, "Event log CSV")->required();
  ingest->add_option("--out", out_path, "Canonical log output");
  ingest_flags.add(ingest);

  auto* extract = app.add_subcommand("extract", "Build the DF count panel");
  extract->add_option("--log", log_path, "Event log CSV")->required();
  extract->add_option("--window", window, "Window width (1d, 12h, 30m, seconds)");
  extract->add_option("--endpoint-mode", endpoint_mode, "case-endpoints or none")
      ->check(CLI::IsMember({"case-endpoints", "none"}));
  extract->add_option("--df-assignment", assignment, "Window of a DF pair: second or first event")
      ->check(CLI::IsMember({"second", "first"}));
  extract->add_option("--out", out_path, "Panel CSV")->required();
  ingest_flags.add(extract);

  auto* characterize = app.add_subcommand("characterize", "Score the panel's series characteristics");
  characterize->add_option("--panel", panel_path, "Panel CSV")->required();
  characterize->add_option("--dataset", dataset, "Dataset name");
  characterize->add_option("--season", season, "Seasonal period");
  characterize->add_option("--out", out_path, "characterization.csv")->required();

  auto* backtest = app.add_subcommand("backtest", "Rolling-origin backtest of one model");
  backtest->add_option("--panel", panel_path, "Panel CSV")->required();
  backtest->add_option("--model", model, "Built-in name or cmd:<command line>")->required();
  backtest->add_option("--name", model_name, "Report name of an external model");
  backtest->add_option("--horizon", horizon, "Forecast horizon");
  backtest->add_option("--season", season, "Season of naive_seasonal");
  backtest->add_option("--mean-window", mean_window, "Window of window_mean");
  backtest->add_option("--timeout-ms", timeout_ms, "Per-request timeout of external models");
  backtest->add_option("--jobs", jobs, "Worker threads (default PMF_JOBS or 1)");
  backtest->add_option("--out", out_path, "Forecast CSV")->required();

  auto* evaluate = app.add_subcommand("evaluate", "MAE / RMSE of forecast sets");
  evaluate->add_option("--panel", panel_path, "Panel CSV")->required();
  evaluate->add_option("--forecasts", forecast_paths, "Forecast CSVs")->required();
  evaluate->add_option("--baseline", baseline, "Model for percentage changes");
  evaluate->add_option("--dataset", dataset, "Dataset name");
  evaluate->add_option("--out", out_path, "metrics.csv")->required();

  auto* er = app.add_subcommand("er", "Entropic relevance of forecasted DFGs");
  er->add_option("--panel", panel_path, "Panel CSV")->required();
  er->add_option("--log", log_path, "Event log the panel was built from")->required();
  er->add_option("--forecasts", forecast_paths, "Forecast CSVs")->required();
  er->add_option("--dfg-mode", dfg_mode, "round-clip or raw-clip")->check(CLI::IsMember({"round-clip", "raw-clip"}));
  er->add_option("--tau", tau, "Round-clip edge threshold");
  er->add_flag("--no-references", no_references, "Skip the truth and training rows");
  er->add_option("--dataset", dataset, "Dataset name");
  er->add_option("--out", out_path, "er.csv")->required();
  ingest_flags.add(er);

  auto* report = app.add_subcommand("report", "Summary tables from an output directory");
  report->add_option("--dir", dir, "Directory holding metrics.csv, er.csv, characterization.csv")->required();
  report->add_option("--out", out_path, "Also write the summary here");

  auto* run = app.add_subcommand("run", "Run a JSON config end to end");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--output-dir", output_dir, "Override the config's output directory");
  auto* jobs_opt = run->add_option("--jobs", jobs, "Worker threads (default config, PMF_JOBS or 1)");

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "ingest") {
      auto log = ingest_flags.read(log_path);
      pmf_log_summary s{};
      check(pmf_log_validate(log.get(), &s), "ingest");
      std::cout << "cases " << s.cases << "\nevents " << s.events << "\nactivities " << s.activities
                << "\nspan_days " << s.span_days << "\nduplicate_groups " << s.duplicate_groups << "\n";
      if (!out_path.empty()) check(pmf_log_write(log.get(), out_path.c_str()), "ingest");
    } else if (command == "extract") {
      int64_t seconds = 0;
      check(pmf_parse_duration(window.c_str(), &seconds), "extract");
      auto log = ingest_flags.read(log_path);
      PanelHandle panel;
      check(pmf_panel_extract(log.get(), seconds, endpoint_mode == "none" ? PMF_ENDPOINTS_NONE : PMF_ENDPOINTS_CASE,
                              assignment == "first" ? PMF_ASSIGN_FIRST : PMF_ASSIGN_SECOND, panel.out()),
            "extract");
      check(pmf_panel_write(panel.get(), out_path.c_str()), "extract");
      std::size_t train_end = 0, val_end = 0;
      std::cout << "windows " << pmf_panel_length(panel.get()) << "\nseries " << pmf_panel_series_count(panel.get())
                << "\n";
      if (pmf_panel_split(panel.get(), &train_end, &val_end) == PMF_OK) {
        std::cout << "split " << train_end << " " << (val_end - train_end) << " "
                  << (pmf_panel_length(panel.get()) - val_end) << "\n";
      }
    } else if (command == "characterize") {
      auto panel = read_panel(panel_path, "characterize");
      check(pmf_characterize_write(panel.get(), dataset.c_str(), season, out_path.c_str()), "characterize");
    } else if (command == "backtest") {
      auto panel = read_panel(panel_path, "backtest");
      ForecasterHandle f;
      if (model.rfind("cmd:", 0) == 0) {
        check(pmf_forecaster_external(model.c_str() + 4, timeout_ms, model_name.empty() ? nullptr : model_name.c_str(),
                                      f.out()),
              "backtest");
      } else {
        if (!model_name.empty() && model_name != model) {
          std::cerr << "--name only applies to cmd: models\n";
          return 2;
        }
        check(pmf_forecaster_builtin(model.c_str(), season, mean_window, f.out()), "backtest");
      }
      SetHandle set;
      check(pmf_backtest(panel.get(), f.get(), horizon, jobs, set.out()), "backtest");
      check(pmf_forecast_set_write(set.get(), out_path.c_str()), "backtest");
      if (const auto failed = pmf_forecast_set_failure_count(set.get())) {
        std::cerr << failed << " forecast(s) failed; see the error column of " << out_path << "\n";
      }
    } else if (command == "evaluate") {
      auto panel = read_panel(panel_path, "evaluate");
      auto sets = read_sets(forecast_paths, "evaluate");
      auto ptrs = raw(sets);
      check(pmf_evaluate_write(panel.get(), ptrs.data(), ptrs.size(), baseline.c_str(), dataset.c_str(),
                               out_path.c_str()),
            "evaluate");
    } else if (command == "er") {
      auto panel = read_panel(panel_path, "er");
      auto log = ingest_flags.read(log_path);
      auto sets = read_sets(forecast_paths, "er");
      auto ptrs = raw(sets);
      check(pmf_er_write(panel.get(), log.get(), ptrs.data(), ptrs.size(),
                         dfg_mode == "raw-clip" ? PMF_DFG_RAW_CLIP : PMF_DFG_ROUND_CLIP, tau, !no_references,
                         dataset.c_str(), out_path.c_str()),
            "er");
    } else if (command == "report") {
      char* text = nullptr;
      check(pmf_render_summary(dir.c_str(), &text), "report");
      std::unique_ptr<char, void (*)(char*)> owned(text, pmf_string_free);
      std::cout << text;
      if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        out << text;
        if (!out) {
          std::cerr << "cannot write " << out_path << "\n";
          return 1;
        }
      }
    } else if (command == "run") {
      const unsigned run_jobs = jobs_opt->count() > 0 ? jobs : 0;
      check(pmf_run_config(config_path.c_str(), output_dir.empty() ? nullptr : output_dir.c_str(), run_jobs), "config");
    }
  } catch (const Failure& f) {
    nlohmann::json record{{"status", "error"},
                          {"stage", f.stage},
                          {"code", pmf_status_name(f.status)},
                          {"message", pmf_last_error()}};
    std::cerr << record.dump() << "\n";
    return 1;
  }
  return 0;
}
