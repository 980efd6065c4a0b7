#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dfseries/df_panel.hpp"

namespace pmf {

struct Decomposition {
  std::vector<double> trend;
  std::vector<double> seasonal;
  std::vector<double> remainder;
};

/// Additive decomposition: centred moving average (2xm for even periods)
/// for the trend, with symmetric windows shrunk near the edges; per-phase
/// means of the detrended series, re-centred to zero, for the seasonal part.
/// Throws Errc::TooShort when the series is shorter than two periods.
Decomposition decompose(std::span<const double> series, int period = 7);

double seasonality_strength(std::span<const double> series, int period = 7);
double trend_strength(std::span<const double> series, int period = 7);

struct AdfResult {
  double statistic = 0;
  double critical_value = 0;
  int lags = 0;
  bool rejects_unit_root = false;
};

/// Augmented Dickey-Fuller regression with a constant and floor(cbrt(n))
/// lagged differences, compared against the 5% MacKinnon critical value.
AdfResult adf_test(std::span<const double> series);

/// Fraction of series whose unit root is rejected; constant series count
/// as stationary. Every series needs length >= 20.
double stationarity_score(const std::vector<std::vector<double>>& panel);

/// Change points found by binary segmentation with a pooled two-sample t
/// test at level `alpha` (Bonferroni-adjusted over candidate splits).
std::vector<std::size_t> binary_segmentation(std::span<const double> series, double alpha = 0.01,
                                             std::size_t max_changes = static_cast<std::size_t>(-1));

/// min(#change points, n/10) / (n/10). Needs length >= 30.
double transition_score(std::span<const double> series);
/// Total-variation distance between 10-bin histograms of the first and last thirds.
double shifting_score(std::span<const double> series);

double spearman(std::span<const double> a, std::span<const double> b);
/// Mean |Spearman| over all series pairs. Needs >= 2 series.
double correlation_score(const std::vector<std::vector<double>>& panel);
/// Mean over series of clamp((|skew| + |excess kurtosis|/2)/4, 0, 1).
double non_gaussianity_score(const std::vector<std::vector<double>>& panel);

struct CharacterizationRow {
  std::string dataset;
  double seasonality = 0;
  double trend = 0;
  double stationarity = 0;
  double transition = 0;
  double shifting = 0;
  double correlation = 0;
  double non_gaussianity = 0;
};

/// Per-series scores are averaged over the panel's series. A single-series
/// panel reports correlation 0. Needs T >= 30.
CharacterizationRow characterize(const std::vector<std::vector<double>>& panel, const std::string& dataset = "",
                                 int period = 7);
CharacterizationRow characterize(const DFPanel& panel, const std::string& dataset = "", int period = 7);

void write_characterization_header(std::ostream& out);
void write_characterization_row(std::ostream& out, const CharacterizationRow& row);

}  // namespace pmf
