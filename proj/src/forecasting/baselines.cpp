#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "forecasting/forecaster.hpp"

namespace pmf {

void ForecastRequest::validate() const {
  if (horizon < 1) fail(Errc::InvalidArgument, "forecast request: horizon must be >= 1");
  if (series.empty()) fail(Errc::InvalidArgument, "forecast request: empty context");
  for (std::size_t i = 0; i < quantile_levels.size(); ++i) {
    double q = quantile_levels[i];
    if (!(q > 0.0 && q < 1.0)) fail(Errc::InvalidArgument, "forecast request: quantile level outside (0,1)");
    if (i > 0 && !(quantile_levels[i - 1] < q)) {
      fail(Errc::InvalidArgument, "forecast request: quantile levels must be strictly increasing");
    }
  }
}

void Forecast::validate(int horizon, const char* what) const {
  const auto h = static_cast<std::size_t>(horizon);
  auto bad = [&](const std::string& msg) { fail(Errc::InvalidArgument, std::string(what) + ": " + msg); };
  if (!point.empty() && point.size() != h) bad("point track has wrong length");
  const std::vector<double>* prev = nullptr;
  for (const auto& [level, track] : quantiles) {
    if (!(level > 0.0 && level < 1.0)) bad("quantile level outside (0,1)");
    if (track.size() != h) bad("quantile track has wrong length");
    if (prev) {
      for (std::size_t k = 0; k < h; ++k) {
        if (track[k] < (*prev)[k]) bad("quantile crossing");
      }
    }
    prev = &track;
  }
}

std::vector<double> quantile_to_point(const Forecast& f) {
  for (const auto& [level, track] : f.quantiles) {
    if (std::abs(level - 0.5) < 1e-12) return track;
  }
  if (!f.point.empty()) return f.point;
  fail(Errc::NoMedianAvailable, "forecast has neither a 0.5 quantile nor a point track");
}

Forecast naive_seasonal(const ForecastRequest& req, int season) {
  req.validate();
  if (season < 1) fail(Errc::InvalidArgument, "season must be >= 1");
  const auto& y = req.series;
  const std::size_t n = y.size();
  const auto s = static_cast<std::size_t>(season);
  Forecast f;
  f.point.resize(static_cast<std::size_t>(req.horizon));
  for (std::size_t k = 1; k <= f.point.size(); ++k) {
    f.point[k - 1] = n >= s ? y[n - s + ((k - 1) % s)] : y.back();
  }
  return f;
}

Forecast naive_last(const ForecastRequest& req) {
  req.validate();
  Forecast f;
  f.point.assign(static_cast<std::size_t>(req.horizon), req.series.back());
  return f;
}

Forecast drift(const ForecastRequest& req) {
  req.validate();
  const auto& y = req.series;
  if (y.size() < 2) fail(Errc::InvalidArgument, "drift needs at least two context points");
  const double slope = (y.back() - y.front()) / static_cast<double>(y.size() - 1);
  Forecast f;
  f.point.resize(static_cast<std::size_t>(req.horizon));
  for (std::size_t k = 1; k <= f.point.size(); ++k) f.point[k - 1] = y.back() + slope * static_cast<double>(k);
  return f;
}

Forecast window_mean(const ForecastRequest& req, int window) {
  req.validate();
  if (window < 1) fail(Errc::InvalidArgument, "window must be >= 1");
  const auto& y = req.series;
  const std::size_t w = std::min(static_cast<std::size_t>(window), y.size());
  const double mean = std::accumulate(y.end() - static_cast<std::ptrdiff_t>(w), y.end(), 0.0) / static_cast<double>(w);
  Forecast f;
  f.point.assign(static_cast<std::size_t>(req.horizon), mean);
  return f;
}

namespace {

class Builtin final : public Forecaster {
 public:
  Builtin(std::string name, BuiltinOptions opts) : name_(std::move(name)), opts_(opts) {}

  std::string name() const override { return name_; }

  Forecast forecast(const ForecastRequest& req) override {
    if (name_ == "naive_seasonal") return naive_seasonal(req, opts_.season);
    if (name_ == "naive_last") return naive_last(req);
    if (name_ == "drift") return drift(req);
    return window_mean(req, opts_.window);
  }

 private:
  std::string name_;
  BuiltinOptions opts_;
};

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"naive_seasonal", "naive_last", "drift", "window_mean"};
  return names;
}

bool is_builtin(const std::string& name) {
  const auto& names = builtin_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::unique_ptr<Forecaster> make_builtin(const std::string& name, const BuiltinOptions& opts) {
  if (!is_builtin(name)) fail(Errc::InvalidArgument, "unknown built-in forecaster '" + name + "'");
  if (opts.season < 1 || opts.window < 1) fail(Errc::InvalidArgument, "season and window must be >= 1");
  return std::make_unique<Builtin>(name, opts);
}

}  // namespace pmf
