#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "characterization/characterize.hpp"
#include "common/error.hpp"
#include "dfseries/df_panel.hpp"
#include "evaluation/metrics.hpp"
#include "forecasting/backtest.hpp"
#include "forecasting/external.hpp"
#include "ingest/event_log.hpp"
#include "process_eval/entropic_relevance.hpp"

namespace pmf {

struct DatasetConfig {
  std::string name;
  std::string log_path;
  IngestConfig ingest;
  PreprocessOptions preprocess;
};

struct ModelConfig {
  std::string name;
  /// Empty for built-ins; otherwise the external forecaster command line.
  std::string command;
};

struct RunConfig {
  std::vector<DatasetConfig> datasets;
  Duration window = kDay;
  int horizon = 7;
  int season = 7;
  int mean_window = 28;
  EndpointMode endpoints = EndpointMode::CaseEndpoints;
  WindowAssignment assignment = WindowAssignment::SecondEvent;
  std::vector<ModelConfig> models;
  std::string baseline = "naive_seasonal";
  std::string output_dir = "pmf-out";
  RoundingMode dfg_mode = RoundingMode::RoundClip;
  double tau = 0.5;
  bool er_references = true;
  unsigned jobs = 1;
  std::chrono::milliseconds timeout{60000};

  /// >= 1 dataset, >= 1 model, unique names, baseline among the models.
  void validate() const;
};

/// Parses the JSON config. Unknown keys are errors; relative paths resolve
/// against `base_dir`.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::string& path);

std::string endpoint_mode_name(EndpointMode m);
EndpointMode parse_endpoint_mode(const std::string& s);
std::string assignment_name(WindowAssignment a);
WindowAssignment parse_assignment(const std::string& s);
std::string rounding_name(RoundingMode m);
RoundingMode parse_rounding(const std::string& s);
TimezonePolicy parse_timezone_policy(const std::string& s);
/// "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SS" (UTC); Errc::Config otherwise.
Timestamp parse_config_time(const std::string& text, const std::string& where);

/// Forecaster factory for a model entry: built-in name or external command.
ForecasterFactory make_factory(const ModelConfig& model, const RunConfig& cfg);

struct DatasetReport {
  std::string name;
  ValidationReport validation;
  std::size_t windows = 0;
  std::size_t series = 0;
  Split split;
  CharacterizationRow characterization;
  std::vector<MetricRow> metrics;
  std::vector<ERResult> er;
  std::vector<std::pair<std::string, std::size_t>> failed_cells;  // model, cells
};

struct ReportBundle {
  std::vector<DatasetReport> datasets;
  std::vector<std::string> outputs;
};

/// Stage failure; `stage` names the pipeline step that failed.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// ingest -> extract -> split -> characterize -> backtest -> metrics -> ER,
/// writing metrics.csv, er.csv, characterization.csv, panels/, forecasts/,
/// plotdata/ and summary.txt under cfg.output_dir. On failure error.json
/// records the stage, code, message and the outputs written so far, and a
/// StageError is thrown.
ReportBundle run(const RunConfig& cfg);

/// Human-readable tables rebuilt from the CSVs in `dir`.
std::string render_summary(const std::filesystem::path& dir);

/// "<START>>>a" -> "%3CSTART%3E%3E%3Ea": file-name-safe encoding of a DF key.
std::string encode_key_filename(const std::string& key);

/// Writes plotdata CSVs (columns t,truth,forecast) for one model into dir.
void write_plot_data(const std::filesystem::path& dir, const DFPanel& panel, const ForecastSet& fs);

}  // namespace pmf
