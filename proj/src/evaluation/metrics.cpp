#include "evaluation/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/numfmt.hpp"

namespace pmf {

namespace {

struct ErrorSums {
  double abs = 0;
  double sq = 0;
  std::size_t n = 0;
};

ErrorSums error_sums(const DFPanel& truth, const ForecastSet& fs, std::size_t d) {
  if (d >= fs.keys().size()) fail(Errc::InvalidArgument, "series index out of range");
  const std::size_t td = truth.find(fs.keys()[d]);
  if (td == DFPanel::npos) {
    fail(Errc::InvalidArgument, "forecast series " + fs.keys()[d].str() + " not in the truth panel");
  }
  const std::size_t test_begin = truth.split().val_end;
  ErrorSums s;
  for (std::size_t o : fs.origins()) {
    for (int k = 1; k <= fs.horizon(); ++k) {
      const std::size_t target = o + static_cast<std::size_t>(k);
      if (target < test_begin || target >= truth.length()) continue;
      auto yhat = fs.get(d, o, k);
      if (!yhat) continue;
      const double err = static_cast<double>(truth.at(target, td)) - *yhat;
      s.abs += std::abs(err);
      s.sq += err * err;
      ++s.n;
    }
  }
  if (s.n == 0) fail(Errc::NoCells, "no evaluable cells for series " + fs.keys()[d].str());
  return s;
}

}  // namespace

double mae_per_series(const DFPanel& truth, const ForecastSet& fs, std::size_t d) {
  auto s = error_sums(truth, fs, d);
  return s.abs / static_cast<double>(s.n);
}

double rmse_per_series(const DFPanel& truth, const ForecastSet& fs, std::size_t d) {
  auto s = error_sums(truth, fs, d);
  return std::sqrt(s.sq / static_cast<double>(s.n));
}

Aggregate aggregate(std::span<const double> values) {
  if (values.empty()) fail(Errc::InvalidArgument, "aggregate needs at least one value");
  Aggregate a;
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(values.size());
  double ss = 0;
  for (double v : values) ss += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(ss / static_cast<double>(values.size()));
  return a;
}

std::optional<double> pct_change(double model_mean, double baseline_mean) {
  if (baseline_mean == 0.0) return std::nullopt;
  return (model_mean - baseline_mean) / baseline_mean;
}

std::string render_pct_change(double fraction) {
  const long pct = std::lround(fraction * 100.0);
  if (pct == 0) return "0%";
  return (pct < 0 ? "↓" : "↑") + std::to_string(std::labs(pct)) + "%";
}

MetricRow evaluate(const DFPanel& truth, const ForecastSet& fs, const std::string& dataset) {
  MetricRow row;
  row.model = fs.model();
  row.dataset = dataset;
  for (std::size_t d = 0; d < fs.keys().size(); ++d) {
    try {
      auto s = error_sums(truth, fs, d);
      row.per_series.push_back({fs.keys()[d], s.abs / static_cast<double>(s.n),
                                std::sqrt(s.sq / static_cast<double>(s.n)), s.n});
    } catch (const Error& e) {
      if (e.code() != Errc::NoCells) throw;
      row.skipped.push_back(fs.keys()[d]);
    }
  }
  if (row.per_series.empty()) fail(Errc::NoCells, "model " + fs.model() + " has no evaluable cells");
  std::vector<double> mae, rmse;
  for (const auto& s : row.per_series) {
    mae.push_back(s.mae);
    rmse.push_back(s.rmse);
  }
  row.mae = aggregate(mae);
  row.rmse = aggregate(rmse);
  row.failed_cells = fs.failures().size() * static_cast<std::size_t>(fs.horizon());
  return row;
}

void apply_baseline(std::vector<MetricRow>& rows, const std::string& baseline) {
  for (const auto& dataset_row : rows) {
    auto base = std::find_if(rows.begin(), rows.end(), [&](const MetricRow& r) {
      return r.model == baseline && r.dataset == dataset_row.dataset;
    });
    if (base == rows.end()) {
      fail(Errc::InvalidArgument, "baseline '" + baseline + "' missing for dataset " + dataset_row.dataset);
    }
  }
  for (auto& row : rows) {
    if (row.model == baseline) {
      row.mae_pct.reset();
      row.rmse_pct.reset();
      continue;
    }
    const auto& base = *std::find_if(rows.begin(), rows.end(), [&](const MetricRow& r) {
      return r.model == baseline && r.dataset == row.dataset;
    });
    row.mae_pct = pct_change(row.mae.mean, base.mae.mean);
    row.rmse_pct = pct_change(row.rmse.mean, base.rmse.mean);
  }
}

void write_metrics_header(std::ostream& out) {
  csv::write_row(out, {"model", "dataset", "metric", "mean", "std", "pct_change_vs_baseline"});
}

void write_metrics_rows(std::ostream& out, const MetricRow& row) {
  auto pct = [](const std::optional<double>& p) { return p ? render_pct_change(*p) : std::string(); };
  csv::write_row(out, {row.model, row.dataset, "MAE", format_double(row.mae.mean), format_double(row.mae.std),
                       pct(row.mae_pct)});
  csv::write_row(out, {row.model, row.dataset, "RMSE", format_double(row.rmse.mean),
                       format_double(row.rmse.std), pct(row.rmse_pct)});
}

std::vector<MetricsRecord> read_metrics_csv(std::istream& in) {
  auto table = csv::read_table(in);
  const csv::Row expected{"model", "dataset", "metric", "mean", "std", "pct_change_vs_baseline"};
  if (table.header != expected) fail(Errc::Format, "metrics csv: unexpected header");
  std::vector<MetricsRecord> out;
  for (const auto& r : table.rows) {
    auto mean = parse_double(r[3]);
    auto sd = parse_double(r[4]);
    if (!mean || !sd) fail(Errc::Format, "metrics csv: bad number");
    out.push_back({r[0], r[1], r[2], *mean, *sd, r[5]});
  }
  return out;
}

}  // namespace pmf
