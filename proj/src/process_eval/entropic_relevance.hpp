#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "common/time_util.hpp"
#include "dfseries/df_panel.hpp"
#include "evaluation/metrics.hpp"
#include "forecasting/backtest.hpp"
#include "ingest/event_log.hpp"
#include "process_eval/dfg.hpp"

namespace pmf {

struct ERScore {
  double er_bits = 0;
  double fitting_ratio = 0;
  std::size_t traces = 0;
  std::size_t fitting = 0;
};

/// Entropic relevance of the traces in `sub` under normalize(g).
///
/// A trace fits when START->x1, every x_i->x_{i+1} and x_n->END have positive
/// probability. With rho the fitting fraction, a fitting trace costs
/// -log2(rho) plus the sum of -log2 P over its steps; a non-fitting trace
/// costs -log2(1-rho) plus (n+1)*log2(|A|+1), a uniform background code over
/// the sublog's alphabet A with an extra end symbol. The selector term is
/// dropped for an empty class. Result is the mean cost per trace.
///
/// Throws Errc::EmptySublog when `sub` has no traces.
ERScore entropic_relevance(const SublogTraces& sub, const WeightedDFG& g);

struct WindowER {
  std::size_t window = 0;
  std::string window_start;
  ERScore score;
};

struct ERResult {
  std::string model;
  std::string dataset;
  std::vector<WindowER> windows;
  Aggregate er;
  double mean_fitting_ratio = 0;
  /// Test windows without any trace (no events); not scored.
  std::vector<std::size_t> empty_windows;
};

struct EROptions {
  RoundingMode rounding = RoundingMode::RoundClip;
  double tau = 0.5;
};

/// Scores the forecasted DFG of every test window against that window's
/// clipped sublog. `log` must be the log the panel was extracted from.
ERResult er_over_test(const DFPanel& panel, const ForecastSet& fs, const EventLog& log,
                      const EROptions& opts = {}, const std::string& dataset = "");

/// Reference rows: the DFG discovered from each test window's own sublog
/// ("truth"), and the DFG discovered from all training windows ("training").
ERResult er_truth(const DFPanel& panel, const EventLog& log, const std::string& dataset = "");
ERResult er_training(const DFPanel& panel, const EventLog& log, const std::string& dataset = "");

/// Columns model,dataset,window_start,er_bits,fitting_ratio; one row per
/// window followed by "mean" and "std" aggregate rows.
void write_er_header(std::ostream& out);
void write_er_rows(std::ostream& out, const ERResult& result);

}  // namespace pmf
