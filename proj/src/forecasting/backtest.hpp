#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dfseries/df_panel.hpp"
#include "forecasting/forecaster.hpp"

namespace pmf {

/// Forecast origins for the test region [val_end, T).
struct BacktestPlan {
  std::vector<std::size_t> origins;
  int horizon = 7;
  std::size_t eval_begin = 0;  // val_end
  std::size_t eval_end = 0;    // T

  /// Checks o >= 1 and that every target o+1..o+h lies in [eval_begin, eval_end).
  void validate() const;
};

/// Origins val_end-1 .. T-h-1, i.e. m - h + 1 of them for a test region of
/// length m. Throws Errc::TooShort when m < h.
BacktestPlan make_plan(const DFPanel& panel, int horizon = 7);

struct CellFailure {
  std::size_t series = 0;
  std::size_t origin = 0;
  std::string message;

  friend bool operator==(const CellFailure&, const CellFailure&) = default;
};

/// Point forecasts indexed by (series, origin, step). Missing cells (failed
/// forecasts) are absent, never zero.
class ForecastSet {
 public:
  ForecastSet() = default;
  ForecastSet(std::string model, std::vector<DFKey> keys, std::vector<std::size_t> origins, int horizon);

  const std::string& model() const noexcept { return model_; }
  void set_model(std::string model) { model_ = std::move(model); }
  const std::vector<DFKey>& keys() const noexcept { return keys_; }
  const std::vector<std::size_t>& origins() const noexcept { return origins_; }
  int horizon() const noexcept { return horizon_; }

  std::optional<double> get(std::size_t d, std::size_t origin, int step) const;
  void set(std::size_t d, std::size_t origin, int step, double value);

  /// Number of present cells.
  std::size_t cell_count() const;
  std::size_t cell_count(std::size_t d) const;

  const std::vector<CellFailure>& failures() const noexcept { return failures_; }
  void add_failure(CellFailure f) { failures_.push_back(std::move(f)); }

  friend bool operator==(const ForecastSet& a, const ForecastSet& b);

 private:
  std::size_t slot(std::size_t d, std::size_t origin, int step) const;

  std::string model_;
  std::vector<DFKey> keys_;
  std::vector<std::size_t> origins_;
  int horizon_ = 0;
  std::vector<double> values_;  // NaN marks a missing cell
  std::vector<CellFailure> failures_;
};

struct BacktestOptions {
  unsigned jobs = 1;
  std::string freq = "D";
  std::vector<double> quantile_levels{0.1, 0.5, 0.9};
};

/// Expanding-window backtest: for each series and origin o, context is
/// counts[0..o] inclusive; the median (or point) track is recorded. Series
/// are spread across `jobs` workers, each with its own forecaster instance.
ForecastSet rolling_backtest(const DFPanel& panel, const ForecasterFactory& factory,
                             const BacktestPlan& plan, const BacktestOptions& opts = {});

/// Single-forecaster convenience overload (runs sequentially).
ForecastSet rolling_backtest(const DFPanel& panel, Forecaster& forecaster, const BacktestPlan& plan,
                             const BacktestOptions& opts = {});

/// "D" for daily windows, "h" hourly, "min" per minute, otherwise "<n>s".
std::string freq_tag(Duration width);

/// Columns model,series,origin,step,value,error. A failed (series, origin)
/// pair is one row with step = horizon, an empty value and the message in error.
void write_forecast_csv(std::ostream& out, const ForecastSet& fs);
ForecastSet read_forecast_csv(std::istream& in);
void write_forecast_file(const std::string& path, const ForecastSet& fs);
ForecastSet read_forecast_file(const std::string& path);

}  // namespace pmf
