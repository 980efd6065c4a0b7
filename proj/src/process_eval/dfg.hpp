#pragma once

#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "dfseries/df_panel.hpp"
#include "forecasting/backtest.hpp"
#include "ingest/event_log.hpp"

namespace pmf {

struct WeightedDFG {
  std::map<DFKey, double> edges;

  /// Adds weight to an edge; rejects negative weights and invalid keys.
  void add(const DFKey& key, double weight);
  std::set<std::string> nodes() const;
  bool empty() const noexcept { return edges.empty(); }
};

/// Row-normalized transition probabilities P(next | state).
struct StochasticDFG {
  std::map<std::string, std::map<std::string, double>> transitions;

  double probability(const std::string& from, const std::string& to) const;
};

enum class RoundingMode { RoundClip, RawClip };

/// Forecast origin and step used to predict window w: windows are tiled by
/// consecutive h-step horizons starting at the first origin; windows past the
/// last full tile use the last origin. Returns false if w is not covered.
bool select_origin(const ForecastSet& fs, std::size_t window, std::size_t& origin, int& step);

/// Forecasted DFG for window w. Round-clip: weight = round(max(0, p)), kept
/// when weight >= tau. Raw-clip: weight = max(0, p), kept when > 0.
/// Throws Errc::MissingPrediction when a vocabulary key has no forecast.
WeightedDFG assemble_dfg(const ForecastSet& fs, const std::vector<DFKey>& vocabulary, std::size_t window,
                         RoundingMode mode = RoundingMode::RoundClip, double tau = 0.5);

/// START->first, consecutive pairs and last->END of every (clipped) trace.
WeightedDFG discover_dfg(const SublogTraces& sub);
WeightedDFG discover_dfg(const std::vector<ClippedTrace>& traces);

StochasticDFG normalize(const WeightedDFG& g);

void write_dot(std::ostream& out, const WeightedDFG& g, const std::string& name = "dfg");

}  // namespace pmf
