#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "bench/run.hpp"
#include "characterization/characterize.hpp"
#include "common/error.hpp"
#include "evaluation/metrics.hpp"
#include "forecasting/backtest.hpp"
#include "process_eval/entropic_relevance.hpp"
#include "synth.hpp"

using namespace pmf;
using namespace pmf::testing;
namespace fs = std::filesystem;

namespace {

constexpr double kConservationSeconds = 5.0;
constexpr double kCharacterizationSeconds = 10.0;
constexpr double kMetricTolerance = 1e-9;
constexpr double kGoldenTolerance = 1e-6;
constexpr double kMarginSeasonality = 0.3;
constexpr double kMarginTrend = 0.3;
constexpr double kMarginStationarity = 0.5;
constexpr double kMarginShifting = 0.3;
constexpr double kBpiMaeTarget = 8.30;
constexpr double kBpiMaeTolerance = 0.10;
constexpr double kBpiErTarget = 1.06;
constexpr double kBpiErTolerance = 0.15;

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s  %-34s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  if (!ok) ++failures;
}

void guarded(const char* name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

void df_conservation() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937 rng(20240101);
  std::size_t mismatches = 0, keys = 0;
  for (int i = 0; i < 200; ++i) {
    const auto log = random_log(rng, 50, 8, 20);
    const auto panel = extract_df_counts(log, partition_windows(log));
    const auto oracle = brute_force_df(log, true);
    if (panel.series_count() != oracle.size()) ++mismatches;
    for (std::size_t d = 0; d < panel.series_count(); ++d) {
      std::int64_t total = 0;
      for (std::size_t t = 0; t < panel.length(); ++t) total += panel.at(t, d);
      auto it = oracle.find(panel.vocabulary()[d]);
      if (it == oracle.end() || it->second != total) ++mismatches;
      ++keys;
    }
  }
  const double secs = seconds_since(t0);
  report("df_conservation", mismatches == 0 && secs < kConservationSeconds,
         fmt("200 logs, %.0f keys, %.0f mismatches, %.2fs", static_cast<double>(keys),
             static_cast<double>(mismatches), secs));
}

void seasonal_naive_exactness() {
  std::mt19937 rng(7);
  double worst = 0;
  int panels = 0;
  for (std::size_t t_len : {35u, 49u, 100u, 307u}) {
    for (int rep = 0; rep < 5; ++rep, ++panels) {
      const auto panel = periodic_panel(rng, t_len, 4);
      auto f = make_builtin("naive_seasonal", {7, 28});
      const auto set = rolling_backtest(panel, *f, make_plan(panel, 7));
      const auto row = evaluate(panel, set, "p");
      for (const auto& s : row.per_series) worst = std::max({worst, s.mae, s.rmse});
    }
  }
  report("seasonal_naive_exactness", worst == 0.0,
         fmt("%.0f period-7 panels, max per-series error %g", panels, worst));
}

void metric_oracle() {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> noise(-5, 5);
  double worst = 0, worst_flat = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t t_len = 40 + rng() % 60;
    const std::size_t d_count = 1 + rng() % 5;
    const int h = 1 + static_cast<int>(rng() % 7);
    const auto panel = random_panel(rng, t_len, d_count);
    const auto plan = make_plan(panel, h);
    ForecastSet set("r", panel.vocabulary(), plan.origins, h);
    for (std::size_t d = 0; d < d_count; ++d) {
      for (auto o : plan.origins) {
        for (int k = 1; k <= h; ++k) set.set(d, o, k, static_cast<double>(panel.at(o + k, d)) + noise(rng));
      }
    }
    const auto row = evaluate(panel, set, "p");
    long double flat_sum = 0;
    std::size_t flat_cells = 0;
    for (std::size_t d = 0; d < d_count; ++d) {
      long double abs_sum = 0, sq_sum = 0;
      std::size_t cells = 0;
      for (auto o : plan.origins) {
        for (int k = 1; k <= h; ++k) {
          const long double e = *set.get(d, o, k) - static_cast<long double>(panel.at(o + k, d));
          abs_sum += std::fabs(e);
          sq_sum += e * e;
          ++cells;
        }
      }
      flat_sum += abs_sum;
      flat_cells += cells;
      const double mae = static_cast<double>(abs_sum / cells);
      const double rmse = static_cast<double>(std::sqrt(sq_sum / cells));
      worst = std::max({worst, std::fabs(mae - row.per_series[d].mae), std::fabs(rmse - row.per_series[d].rmse)});
    }
    worst_flat = std::max(worst_flat, std::fabs(row.mae.mean - static_cast<double>(flat_sum / flat_cells)));
  }
  report("metric_oracle", worst <= kMetricTolerance && worst_flat <= kMetricTolerance,
         fmt("100 panels, max deviation %.2e, flat-average deviation %.2e (tol %.0e)", worst, worst_flat,
             kMetricTolerance));
}

void backtest_count_law() {
  int checked = 0, bad = 0;
  for (std::size_t m = 8; m <= 64; ++m) {
    std::vector<std::vector<std::int64_t>> series(1, std::vector<std::int64_t>(2 * m, 1));
    auto panel = panel_from(series, false);
    panel.set_split({m / 2, m});
    for (int h = 1; h <= 7; ++h, ++checked) {
      const auto plan = make_plan(panel, h);
      auto f = make_builtin("naive_last");
      const auto set = rolling_backtest(panel, *f, plan);
      const std::size_t want = m - static_cast<std::size_t>(h) + 1;
      if (plan.origins.size() != want || set.cell_count() != want * static_cast<std::size_t>(h)) ++bad;
    }
  }
  report("backtest_count_law", bad == 0 && checked == 57 * 7,
         fmt("%.0f (m, h) pairs, %.0f violations", checked, bad));
}

void er_goldens() {
  const std::string S(kStartLabel), E(kEndLabel);
  auto tr = [](std::vector<std::string> a, bool s = true, bool e = true) { return ClippedTrace{"c", std::move(a), s, e}; };
  const SublogTraces fits{0, {tr({"a", "b"}), tr({"a", "b"}), tr({"a", "c"}), tr({"a", "c"})}};
  const auto g1 = entropic_relevance(fits, discover_dfg(fits));
  const SublogTraces mixed{0, {tr({"a", "b"}), tr({"a", "b"}), tr({"a", "b"}), tr({"a", "d"})}};
  WeightedDFG ab;
  ab.add({S, "a"}, 1);
  ab.add({"a", "b"}, 1);
  ab.add({"b", E}, 1);
  const auto g2 = entropic_relevance(mixed, ab);
  const double golden2 = (3 * -std::log2(0.75) + 8.0) / 4.0;
  const bool goldens = std::fabs(g1.er_bits - 1.0) <= kGoldenTolerance && g1.fitting_ratio == 1.0 &&
                       std::fabs(g2.er_bits - golden2) <= kGoldenTolerance &&
                       std::fabs(g2.er_bits - 2.3113) <= 1e-4 && g2.fitting_ratio == 0.75;

  std::mt19937 rng(21);
  std::uniform_int_distribution<int> n_traces(1, 12), len(1, 6), act(0, 4), coin(0, 1);
  int unfit = 0, negative = 0;
  for (int rep = 0; rep < 100; ++rep) {
    SublogTraces s{0, {}};
    const int n = n_traces(rng);
    for (int i = 0; i < n; ++i) {
      std::vector<std::string> acts;
      const int l = len(rng);
      for (int j = 0; j < l; ++j) acts.push_back(std::string(1, static_cast<char>('a' + act(rng))));
      s.traces.push_back(tr(acts, coin(rng), coin(rng)));
    }
    const auto own = entropic_relevance(s, discover_dfg(s));
    if (own.fitting_ratio != 1.0) ++unfit;
    if (own.er_bits < 0 || entropic_relevance(s, ab).er_bits < 0) ++negative;
  }
  report("er_goldens", goldens && unfit == 0 && negative == 0,
         fmt("er %.6f and %.6f, %.0f random sublogs not fitting their own DFG", g1.er_bits, g2.er_bits, unfit) +
             (negative ? ", negative ER seen" : ""));
}

std::vector<double> gaussian(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> s(n);
  for (auto& x : s) x = g(rng);
  return s;
}

void characterization_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = 140;
  std::vector<double> sine(n), ramp(n), step(n);
  const auto jitter = gaussian(n, 11);
  for (std::size_t t = 0; t < n; ++t) {
    sine[t] = 10 + 3 * std::sin(2 * std::numbers::pi * static_cast<double>(t) / 7.0) + 0.05 * jitter[t];
    ramp[t] = 0.5 * static_cast<double>(t);
    step[t] = t < n / 2 ? 0.0 : 10.0;
  }
  const auto noise = gaussian(n, 3);
  std::vector<std::vector<double>> iid, walks;
  for (unsigned i = 0; i < 10; ++i) {
    iid.push_back(gaussian(300, 100 + i));
    auto w = gaussian(300, 200 + i);
    for (std::size_t t = 1; t < w.size(); ++t) w[t] += w[t - 1];
    walks.push_back(w);
  }
  const double d_season = seasonality_strength(sine) - seasonality_strength(noise);
  const double d_trend = trend_strength(ramp) - trend_strength(noise);
  const double d_stat = stationarity_score(iid) - stationarity_score(walks);
  const double d_shift = shifting_score(step) - shifting_score(noise);

  std::vector<std::vector<double>> panel{sine, ramp, noise, walks[0], step, iid[0]};
  for (auto& s : panel) s.resize(n);
  const auto row = characterize(panel, "p");
  bool in_range = true, invariant = true;
  for (double v : {row.seasonality, row.trend, row.stationarity, row.transition, row.shifting, row.correlation,
                   row.non_gaussianity}) {
    in_range = in_range && v >= 0.0 && v <= 1.0;
  }
  std::mt19937 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    auto shuffled = panel;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto again = characterize(shuffled, "p");
    invariant = invariant && again.seasonality == row.seasonality && again.trend == row.trend &&
                again.stationarity == row.stationarity && again.transition == row.transition &&
                again.shifting == row.shifting && again.correlation == row.correlation &&
                again.non_gaussianity == row.non_gaussianity;
  }
  const double secs = seconds_since(t0);
  const bool ok = d_season >= kMarginSeasonality && d_trend >= kMarginTrend && d_stat >= kMarginStationarity &&
                  d_shift >= kMarginShifting && in_range && invariant && secs < kCharacterizationSeconds;
  report("characterization_directional", ok,
         fmt("margins season %.2f trend %.2f ", d_season, d_trend) +
             fmt("stationarity %.2f shifting %.2f, ", d_stat, d_shift) + (in_range ? "in [0,1], " : "OUT OF RANGE, ") +
             (invariant ? "permutation-invariant, " : "ORDER-DEPENDENT, ") + fmt("%.2fs", secs));
}

int sh(const std::string& cmd) { return std::system((cmd + " >/dev/null 2>&1").c_str()); }

void split_determinism() {
  const Split a = compute_split(307), b = compute_split(319);
  const bool splits = a.train_end == 184 && a.val_end - a.train_end == 61 && 307 - a.val_end == 62 &&
                      b.train_end == 191 && b.val_end - b.train_end == 63 && 319 - b.val_end == 65;

  TempDir tmp;
  spit(tmp / "log.csv", log_csv(weekly_log(63, 3)));
  spit(tmp / "cfg.json",
       R"({"datasets":[{"name":"w","log":"log.csv"}],"models":["naive_seasonal","drift"],"output_dir":"out"})");
  const std::string cli = std::string("\"") + PMF_CLI + "\"";
  auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
  const fs::path st = tmp / "st";
  fs::create_directories(st / "panels");
  fs::create_directories(st / "forecasts" / "w");
  const std::string panel = q(st / "panels" / "w.csv");
  const std::string fa = q(st / "forecasts" / "w" / "naive_seasonal.csv");
  const std::string fb = q(st / "forecasts" / "w" / "drift.csv");
  int rc = sh(cli + " run --config " + q(tmp / "cfg.json"));
  rc |= sh(cli + " extract --log " + q(tmp / "log.csv") + " --out " + panel);
  rc |= sh(cli + " characterize --panel " + panel + " --dataset w --out " + q(st / "characterization.csv"));
  rc |= sh(cli + " backtest --panel " + panel + " --model naive_seasonal --out " + fa);
  rc |= sh(cli + " backtest --panel " + panel + " --model drift --out " + fb);
  rc |= sh(cli + " evaluate --panel " + panel + " --forecasts " + fa + " " + fb + " --dataset w --out " +
           q(st / "metrics.csv"));
  rc |= sh(cli + " er --panel " + panel + " --log " + q(tmp / "log.csv") + " --forecasts " + fa + " " + fb +
           " --dataset w --out " + q(st / "er.csv"));
  rc |= sh(cli + " report --dir " + q(st) + " --out " + q(st / "summary.txt"));
  int differing = 0, files = 0;
  for (const char* f : {"panels/w.csv", "forecasts/w/naive_seasonal.csv", "forecasts/w/drift.csv",
                        "characterization.csv", "metrics.csv", "er.csv", "summary.txt"}) {
    ++files;
    const fs::path one = tmp / "out" / f;
    if (!fs::exists(one) || !fs::exists(st / f) || slurp(one) != slurp(st / f)) ++differing;
  }
  report("split_determinism", splits && rc == 0 && differing == 0,
         fmt("307 -> (%.0f, %.0f, %.0f), ", a.train_end, a.val_end - a.train_end, 307.0 - a.val_end) +
             fmt("319 -> (%.0f, %.0f, %.0f), ", b.train_end, b.val_end - b.train_end, 319.0 - b.val_end) +
             fmt("stage-wise vs run: %.0f of %.0f files differ", differing, files) +
             (rc ? ", a CLI command failed" : ""));
}

void bpi2017_integration() {
  const fs::path cfg_path = PMF_BPI2017_CONFIG;
  if (!fs::exists(cfg_path)) {
    std::printf("SKIPPED  %-31s no config at %s\n", "bpi2017_integration", cfg_path.c_str());
    return;
  }
  auto cfg = load_run_config(cfg_path.string());
  if (cfg.datasets.empty() || !fs::exists(cfg.datasets.front().log_path)) {
    std::printf("SKIPPED  %-31s log not found at %s\n", "bpi2017_integration",
                cfg.datasets.empty() ? "?" : cfg.datasets.front().log_path.c_str());
    return;
  }
  TempDir tmp;
  cfg.output_dir = (tmp / "out").string();
  const auto bundle = run(cfg);
  const auto& ds = bundle.datasets.front();
  double mae = NAN, er = NAN;
  for (const auto& m : ds.metrics) {
    if (m.model == "naive_seasonal") mae = m.mae.mean;
  }
  for (const auto& r : ds.er) {
    if (r.model == "naive_seasonal") er = r.er.mean;
  }
  const bool ok = std::fabs(mae - kBpiMaeTarget) <= kBpiMaeTolerance * kBpiMaeTarget &&
                  std::fabs(er - kBpiErTarget) <= kBpiErTolerance * kBpiErTarget;
  // Optional criterion: reported but never fails the suite.
  std::printf("%s  %-34s naive_seasonal MAE %.2f (target %.2f +-10%%), ER %.2f (target %.2f +-15%%)\n",
              ok ? "PASS" : "FAIL", "bpi2017_integration (optional)", mae, kBpiMaeTarget, er, kBpiErTarget);
}

}  // namespace

int main() {
  guarded("df_conservation", df_conservation);
  guarded("seasonal_naive_exactness", seasonal_naive_exactness);
  guarded("metric_oracle", metric_oracle);
  guarded("backtest_count_law", backtest_count_law);
  guarded("er_goldens", er_goldens);
  guarded("characterization_directional", characterization_suite);
  guarded("split_determinism", split_determinism);
  try {
    bpi2017_integration();
  } catch (const std::exception& e) {
    std::printf("FAIL  %-34s exception: %s\n", "bpi2017_integration (optional)", e.what());
  }
  std::printf("%d required criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
