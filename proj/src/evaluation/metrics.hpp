#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dfseries/df_panel.hpp"
#include "forecasting/backtest.hpp"

namespace pmf {

/// Mean absolute error over every present (origin, step) cell of series d
/// whose target lies in the test region. Throws Errc::NoCells if none.
double mae_per_series(const DFPanel& truth, const ForecastSet& fs, std::size_t d);

/// Per-series root mean squared error over the same cells as MAE.
double rmse_per_series(const DFPanel& truth, const ForecastSet& fs, std::size_t d);

struct Aggregate {
  double mean = 0;
  double std = 0;  // population
};

Aggregate aggregate(std::span<const double> values);

/// (model_mean - baseline_mean) / baseline_mean; nullopt when the baseline
/// mean is zero.
std::optional<double> pct_change(double model_mean, double baseline_mean);

/// "↓20%", "↑40%" or "0%" (rounded to the nearest integer percent).
std::string render_pct_change(double fraction);

struct SeriesMetrics {
  DFKey key;
  double mae = 0;
  double rmse = 0;
  std::size_t cells = 0;
};

struct MetricRow {
  std::string model;
  std::string dataset;
  std::vector<SeriesMetrics> per_series;
  Aggregate mae;
  Aggregate rmse;
  std::optional<double> mae_pct;
  std::optional<double> rmse_pct;
  /// Series with no evaluable cell (all forecasts failed); excluded above.
  std::vector<DFKey> skipped;
  std::size_t failed_cells = 0;
};

/// Scores one forecast set; series without cells are skipped and reported.
MetricRow evaluate(const DFPanel& truth, const ForecastSet& fs, const std::string& dataset);

/// Fills mae_pct / rmse_pct of every row against the row whose model is
/// `baseline` (the baseline row itself gets no percentage).
void apply_baseline(std::vector<MetricRow>& rows, const std::string& baseline);

/// Columns model,dataset,metric,mean,std,pct_change_vs_baseline.
void write_metrics_header(std::ostream& out);
void write_metrics_rows(std::ostream& out, const MetricRow& row);

struct MetricsRecord {
  std::string model, dataset, metric;
  double mean = 0, std = 0;
  std::string pct_change;
};
std::vector<MetricsRecord> read_metrics_csv(std::istream& in);

}  // namespace pmf
