#include "forecasting/backtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/numfmt.hpp"

namespace pmf {

void BacktestPlan::validate() const {
  if (horizon < 1) fail(Errc::InvalidArgument, "backtest plan: horizon must be >= 1");
  const auto h = static_cast<std::size_t>(horizon);
  for (std::size_t o : origins) {
    if (o < 1) fail(Errc::InvalidArgument, "backtest plan: origin must be >= 1");
    if (o + h + 1 > eval_end) fail(Errc::InvalidArgument, "backtest plan: horizon runs past the series end");
    if (o + 1 < eval_begin) fail(Errc::InvalidArgument, "backtest plan: forecasts must target the test region");
  }
}

BacktestPlan make_plan(const DFPanel& panel, int horizon) {
  if (horizon < 1) fail(Errc::InvalidArgument, "horizon must be >= 1");
  const Split& split = panel.split();
  const std::size_t T = panel.length();
  const auto h = static_cast<std::size_t>(horizon);
  const std::size_t m = T - split.val_end;
  if (m < h) {
    fail(Errc::TooShort, "test region of " + std::to_string(m) + " windows is shorter than horizon " +
                             std::to_string(h));
  }
  BacktestPlan plan;
  plan.horizon = horizon;
  plan.eval_begin = split.val_end;
  plan.eval_end = T;
  for (std::size_t o = split.val_end - 1; o + h + 1 <= T; ++o) plan.origins.push_back(o);
  return plan;
}

ForecastSet::ForecastSet(std::string model, std::vector<DFKey> keys, std::vector<std::size_t> origins,
                         int horizon)
    : model_(std::move(model)), keys_(std::move(keys)), origins_(std::move(origins)), horizon_(horizon) {
  if (horizon_ < 1) fail(Errc::InvalidArgument, "forecast set: horizon must be >= 1");
  if (!std::is_sorted(origins_.begin(), origins_.end()) ||
      std::adjacent_find(origins_.begin(), origins_.end()) != origins_.end()) {
    fail(Errc::InvalidArgument, "forecast set: origins must be strictly increasing");
  }
  values_.assign(keys_.size() * origins_.size() * static_cast<std::size_t>(horizon_),
                 std::numeric_limits<double>::quiet_NaN());
}

std::size_t ForecastSet::slot(std::size_t d, std::size_t origin, int step) const {
  auto it = std::lower_bound(origins_.begin(), origins_.end(), origin);
  if (d >= keys_.size() || it == origins_.end() || *it != origin || step < 1 || step > horizon_) {
    return static_cast<std::size_t>(-1);
  }
  const auto oi = static_cast<std::size_t>(it - origins_.begin());
  return (d * origins_.size() + oi) * static_cast<std::size_t>(horizon_) + static_cast<std::size_t>(step - 1);
}

std::optional<double> ForecastSet::get(std::size_t d, std::size_t origin, int step) const {
  auto s = slot(d, origin, step);
  if (s == static_cast<std::size_t>(-1) || std::isnan(values_[s])) return std::nullopt;
  return values_[s];
}

void ForecastSet::set(std::size_t d, std::size_t origin, int step, double value) {
  auto s = slot(d, origin, step);
  if (s == static_cast<std::size_t>(-1)) fail(Errc::InvalidArgument, "forecast set: cell out of range");
  if (!std::isfinite(value)) fail(Errc::InvalidArgument, "forecast set: non-finite value");
  values_[s] = value;
}

std::size_t ForecastSet::cell_count() const {
  return static_cast<std::size_t>(
      std::count_if(values_.begin(), values_.end(), [](double v) { return !std::isnan(v); }));
}

std::size_t ForecastSet::cell_count(std::size_t d) const {
  const std::size_t per = origins_.size() * static_cast<std::size_t>(horizon_);
  auto first = values_.begin() + static_cast<std::ptrdiff_t>(d * per);
  return static_cast<std::size_t>(
      std::count_if(first, first + static_cast<std::ptrdiff_t>(per), [](double v) { return !std::isnan(v); }));
}

bool operator==(const ForecastSet& a, const ForecastSet& b) {
  if (a.model_ != b.model_ || a.keys_ != b.keys_ || a.origins_ != b.origins_ || a.horizon_ != b.horizon_ ||
      a.failures_ != b.failures_ || a.values_.size() != b.values_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.values_.size(); ++i) {
    const double x = a.values_[i];
    const double y = b.values_[i];
    if (std::isnan(x) != std::isnan(y)) return false;
    if (!std::isnan(x) && x != y) return false;
  }
  return true;
}

std::string freq_tag(Duration width) {
  using namespace std::chrono;
  if (width == kDay) return "D";
  if (width == hours(1)) return "h";
  if (width == minutes(1)) return "min";
  return std::to_string(duration_cast<seconds>(width).count()) + "s";
}

namespace {

void forecast_series(const DFPanel& panel, std::size_t d, Forecaster& forecaster, const BacktestPlan& plan,
                     const BacktestOptions& opts, ForecastSet& out, std::vector<CellFailure>& failures) {
  const std::vector<double> full = panel.series(d);
  ForecastRequest req;
  req.horizon = plan.horizon;
  req.quantile_levels = opts.quantile_levels;
  req.freq = opts.freq;
  for (std::size_t o : plan.origins) {
    req.series.assign(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(o + 1));
    try {
      Forecast f = forecaster.forecast(req);
      f.validate(plan.horizon);
      std::vector<double> point = quantile_to_point(f);
      if (point.size() != static_cast<std::size_t>(plan.horizon)) {
        fail(Errc::ProtocolError, "forecast length differs from horizon");
      }
      for (double v : point) {
        if (!std::isfinite(v)) fail(Errc::ProtocolError, "non-finite forecast value");
      }
      for (int k = 1; k <= plan.horizon; ++k) out.set(d, o, k, point[static_cast<std::size_t>(k - 1)]);
    } catch (const Error& e) {
      failures.push_back({d, o, std::string(errc_name(e.code())) + ": " + e.what()});
    }
  }
}

}  // namespace

ForecastSet rolling_backtest(const DFPanel& panel, const ForecasterFactory& factory, const BacktestPlan& plan,
                             const BacktestOptions& opts) {
  plan.validate();
  if (plan.eval_end != panel.length()) fail(Errc::InvalidArgument, "backtest plan does not match the panel");
  const std::size_t D = panel.series_count();
  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(std::max<std::size_t>(D, 1))));

  // The first instance names the set and serves worker 0.
  std::vector<std::unique_ptr<Forecaster>> workers;
  workers.push_back(factory());
  ForecastSet out(workers.front()->name(), panel.vocabulary(), plan.origins, plan.horizon);
  for (unsigned j = 1; j < jobs; ++j) workers.push_back(factory());

  std::vector<std::vector<CellFailure>> failures(D);
  if (jobs == 1) {
    for (std::size_t d = 0; d < D; ++d) forecast_series(panel, d, *workers[0], plan, opts, out, failures[d]);
  } else {
    // Workers write disjoint slices of `out`, so no locking is needed there.
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    std::vector<std::thread> threads;
    for (unsigned j = 0; j < jobs; ++j) {
      threads.emplace_back([&, j] {
        try {
          for (std::size_t d = next++; d < D; d = next++) {
            forecast_series(panel, d, *workers[j], plan, opts, out, failures[d]);
          }
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }
  for (auto& per_series : failures) {
    for (auto& f : per_series) out.add_failure(std::move(f));
  }
  return out;
}

ForecastSet rolling_backtest(const DFPanel& panel, Forecaster& forecaster, const BacktestPlan& plan,
                             const BacktestOptions& opts) {
  plan.validate();
  if (plan.eval_end != panel.length()) fail(Errc::InvalidArgument, "backtest plan does not match the panel");
  ForecastSet out(forecaster.name(), panel.vocabulary(), plan.origins, plan.horizon);
  for (std::size_t d = 0; d < panel.series_count(); ++d) {
    std::vector<CellFailure> failures;
    forecast_series(panel, d, forecaster, plan, opts, out, failures);
    for (auto& f : failures) out.add_failure(std::move(f));
  }
  return out;
}

void write_forecast_csv(std::ostream& out, const ForecastSet& fs) {
  csv::write_row(out, {"model", "series", "origin", "step", "value", "error"});
  std::map<std::pair<std::size_t, std::size_t>, const CellFailure*> failed;
  for (const auto& f : fs.failures()) failed[{f.series, f.origin}] = &f;
  for (std::size_t d = 0; d < fs.keys().size(); ++d) {
    const std::string key = fs.keys()[d].str();
    for (std::size_t o : fs.origins()) {
      if (auto it = failed.find({d, o}); it != failed.end()) {
        csv::write_row(out, {fs.model(), key, std::to_string(o), std::to_string(fs.horizon()), "", it->second->message});
        continue;
      }
      for (int k = 1; k <= fs.horizon(); ++k) {
        auto v = fs.get(d, o, k);
        if (!v) continue;
        csv::write_row(out, {fs.model(), key, std::to_string(o), std::to_string(k), format_double(*v), ""});
      }
    }
  }
}

ForecastSet read_forecast_csv(std::istream& in) {
  auto table = csv::read_table(in);
  const csv::Row expected{"model", "series", "origin", "step", "value", "error"};
  if (table.header != expected) fail(Errc::Format, "forecast csv: unexpected header");

  struct Cell {
    std::size_t d, o;
    int k;
    double v;
  };
  std::string model;
  std::vector<DFKey> keys;
  std::map<DFKey, std::size_t> key_index;
  std::vector<std::size_t> origins;
  std::vector<Cell> cells;
  std::vector<CellFailure> failures;
  int horizon = 0;

  for (const auto& row : table.rows) {
    if (model.empty()) model = row[0];
    else if (row[0] != model) fail(Errc::Format, "forecast csv: mixed model ids");
    DFKey key = DFKey::parse(row[1]);
    auto [it, inserted] = key_index.emplace(key, keys.size());
    if (inserted) keys.push_back(key);
    auto o = parse_int(row[2]);
    if (!o || *o < 0) fail(Errc::Format, "forecast csv: bad origin '" + row[2] + "'");
    origins.push_back(static_cast<std::size_t>(*o));
    auto k = parse_int(row[3]);
    if (!k || *k < 1) fail(Errc::Format, "forecast csv: bad step '" + row[3] + "'");
    if (row[4].empty()) {
      horizon = std::max(horizon, static_cast<int>(*k));
      failures.push_back({it->second, static_cast<std::size_t>(*o), row[5]});
      continue;
    }
    auto v = parse_double(row[4]);
    if (!v) fail(Errc::Format, "forecast csv: bad value '" + row[4] + "'");
    horizon = std::max(horizon, static_cast<int>(*k));
    cells.push_back({it->second, static_cast<std::size_t>(*o), static_cast<int>(*k), *v});
  }
  std::sort(origins.begin(), origins.end());
  origins.erase(std::unique(origins.begin(), origins.end()), origins.end());
  if (horizon == 0) horizon = 1;

  ForecastSet fs(model, keys, origins, horizon);
  for (const auto& c : cells) fs.set(c.d, c.o, c.k, c.v);
  std::sort(failures.begin(), failures.end(),
            [](const CellFailure& a, const CellFailure& b) { return std::tie(a.series, a.origin) < std::tie(b.series, b.origin); });
  for (auto& f : failures) fs.add_failure(std::move(f));
  return fs;
}

void write_forecast_file(const std::string& path, const ForecastSet& fs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::Io, "cannot write forecasts '" + path + "'");
  write_forecast_csv(out, fs);
}

ForecastSet read_forecast_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open forecasts '" + path + "'");
  return read_forecast_csv(in);
}

}  // namespace pmf
