#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pmf {

struct ForecastRequest {
  std::vector<double> series;
  int horizon = 7;
  std::vector<double> quantile_levels{0.1, 0.5, 0.9};
  std::string freq = "D";

  /// Throws Errc::InvalidArgument on horizon < 1, empty context, or levels
  /// outside (0,1) / not strictly increasing.
  void validate() const;
};

/// Point track (empty when absent) plus optional quantile tracks keyed by level.
struct Forecast {
  std::vector<double> point;
  std::map<double, std::vector<double>> quantiles;

  /// Lengths equal h and quantile tracks are non-decreasing across levels.
  /// Throws Errc::InvalidArgument otherwise; `what` prefixes the message.
  void validate(int horizon, const char* what = "forecast") const;
};

/// Returns the 0.5-quantile track if present, otherwise the point track.
/// Throws Errc::NoMedianAvailable when neither exists.
std::vector<double> quantile_to_point(const Forecast& f);

class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string name() const = 0;
  virtual Forecast forecast(const ForecastRequest& req) = 0;
};

/// Each backtest worker obtains its own instance from the factory, so
/// stateful forecasters (child processes) are never shared between threads.
using ForecasterFactory = std::function<std::unique_ptr<Forecaster>()>;

// Baselines ---------------------------------------------------------------

/// y[n - s + ((k-1) mod s)] for n >= s; repeats the last value when n < s.
Forecast naive_seasonal(const ForecastRequest& req, int season);
Forecast naive_last(const ForecastRequest& req);
/// Line through first and last context points; needs n >= 2.
Forecast drift(const ForecastRequest& req);
/// Mean of the last min(window, n) values.
Forecast window_mean(const ForecastRequest& req, int window = 28);

struct BuiltinOptions {
  int season = 7;
  int window = 28;
};

/// "naive_seasonal", "naive_last", "drift", "window_mean".
std::unique_ptr<Forecaster> make_builtin(const std::string& name, const BuiltinOptions& opts = {});
bool is_builtin(const std::string& name);
const std::vector<std::string>& builtin_names();

}  // namespace pmf
