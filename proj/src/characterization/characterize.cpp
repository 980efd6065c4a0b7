#include "characterization/characterize.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/numfmt.hpp"

namespace pmf {

namespace {

double clamp01(double v) { return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0; }

// Summation in sorted order makes panel means independent of column order.
double order_free_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double s = 0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

double variance(std::span<const double> x) {
  if (x.empty()) return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(x.size());
}

bool is_constant(std::span<const double> x) {
  return std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end();
}

// Variance ratios below this are treated as exact zero (round-off).
constexpr double kRelTol = 1e-12;

double strength(const std::vector<double>& remainder, const std::vector<double>& component_plus_remainder,
                std::span<const double> series) {
  const double denom = variance(component_plus_remainder);
  if (denom <= kRelTol * variance(series)) return 0.0;
  return clamp01(1.0 - variance(remainder) / denom);
}

}  // namespace

Decomposition decompose(std::span<const double> series, int period) {
  if (period < 2) fail(Errc::InvalidArgument, "decompose: period must be >= 2");
  const std::size_t n = series.size();
  const auto p = static_cast<std::size_t>(period);
  if (n < 2 * p) fail(Errc::TooShort, "decompose: need at least two full periods");

  Decomposition out;
  out.trend.resize(n);
  const std::size_t half = p / 2;
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= half && i + half < n) {
      double s = 0;
      if (p % 2 == 1) {
        for (std::size_t j = i - half; j <= i + half; ++j) s += series[j];
      } else {
        s = 0.5 * series[i - half] + 0.5 * series[i + half];
        for (std::size_t j = i - half + 1; j < i + half; ++j) s += series[j];
      }
      out.trend[i] = s / static_cast<double>(p);
    } else {
      const std::size_t h = std::min(i, n - 1 - i);
      double s = 0;
      for (std::size_t j = i - h; j <= i + h; ++j) s += series[j];
      out.trend[i] = s / static_cast<double>(2 * h + 1);
    }
  }

  std::vector<double> phase_sum(p, 0.0);
  std::vector<std::size_t> phase_n(p, 0);
  for (std::size_t i = 0; i < n; ++i) {
    phase_sum[i % p] += series[i] - out.trend[i];
    ++phase_n[i % p];
  }
  std::vector<double> phase_mean(p);
  for (std::size_t k = 0; k < p; ++k) phase_mean[k] = phase_sum[k] / static_cast<double>(phase_n[k]);
  const double centre = std::accumulate(phase_mean.begin(), phase_mean.end(), 0.0) / static_cast<double>(p);
  for (auto& m : phase_mean) m -= centre;

  out.seasonal.resize(n);
  out.remainder.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.seasonal[i] = phase_mean[i % p];
    out.remainder[i] = series[i] - out.trend[i] - out.seasonal[i];
  }
  return out;
}

double seasonality_strength(std::span<const double> series, int period) {
  if (is_constant(series)) return 0.0;
  auto dec = decompose(series, period);
  std::vector<double> sr(series.size());
  for (std::size_t i = 0; i < sr.size(); ++i) sr[i] = dec.seasonal[i] + dec.remainder[i];
  return strength(dec.remainder, sr, series);
}

double trend_strength(std::span<const double> series, int period) {
  if (is_constant(series)) return 0.0;
  auto dec = decompose(series, period);
  std::vector<double> tr(series.size());
  for (std::size_t i = 0; i < tr.size(); ++i) tr[i] = dec.trend[i] + dec.remainder[i];
  return strength(dec.remainder, tr, series);
}

namespace {

struct OlsFit {
  bool ok = false;
  double beta = 0;
  double se = 0;
};

// Regresses diff[t] on (1, level[t-1], diff[t-1..t-lags]) and returns the
// coefficient and standard error of the lagged level.
OlsFit adf_regression(std::span<const double> y, int lags) {
  const std::size_t n = y.size();
  const auto p = static_cast<std::size_t>(lags);
  std::vector<double> dy(n - 1);
  for (std::size_t t = 1; t < n; ++t) dy[t - 1] = y[t] - y[t - 1];

  const std::size_t rows = dy.size() - p;
  const std::size_t cols = 2 + p;
  if (rows <= cols) return {};
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  Eigen::VectorXd Y(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t t = r + p;  // index into dy; dy[t] = y[t+1] - y[t]
    const auto ri = static_cast<Eigen::Index>(r);
    Y(ri) = dy[t];
    X(ri, 0) = 1.0;
    X(ri, 1) = y[t];
    for (std::size_t j = 1; j <= p; ++j) X(ri, static_cast<Eigen::Index>(1 + j)) = dy[t - j];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(cols)) return {};
  Eigen::VectorXd coef = qr.solve(Y);
  const Eigen::VectorXd resid = Y - X * coef;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(rows - cols);
  const Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();
  OlsFit fit;
  fit.ok = true;
  fit.beta = coef(1);
  fit.se = std::sqrt(sigma2 * xtx_inv(1, 1));
  return fit;
}

}  // namespace

AdfResult adf_test(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 20) fail(Errc::TooShort, "adf_test: need at least 20 observations");
  AdfResult r;
  r.lags = static_cast<int>(std::floor(std::cbrt(static_cast<double>(n))));

  OlsFit fit = adf_regression(series, r.lags);
  if (!fit.ok) {
    // Collinear lag terms (typical of sparse count series): drop them.
    r.lags = 0;
    fit = adf_regression(series, 0);
  }
  const double nobs = static_cast<double>(n - 1 - static_cast<std::size_t>(r.lags));
  r.critical_value = -2.86154 - 2.8903 / nobs - 4.234 / (nobs * nobs);
  if (!fit.ok) {
    // Level regressor collinear with the constant: the series is flat.
    r.statistic = -std::numeric_limits<double>::infinity();
    r.rejects_unit_root = true;
    return r;
  }
  if (fit.se == 0.0) {
    r.statistic = fit.beta < 0 ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  } else {
    r.statistic = fit.beta / fit.se;
  }
  r.rejects_unit_root = r.statistic < r.critical_value;
  return r;
}

double stationarity_score(const std::vector<std::vector<double>>& panel) {
  if (panel.empty()) fail(Errc::InvalidArgument, "stationarity_score: empty panel");
  std::size_t stationary = 0;
  for (const auto& s : panel) {
    if (s.size() < 20) fail(Errc::TooShort, "stationarity_score: series shorter than 20");
    if (is_constant(s) || adf_test(s).rejects_unit_root) ++stationary;
  }
  return clamp01(static_cast<double>(stationary) / static_cast<double>(panel.size()));
}

std::vector<std::size_t> binary_segmentation(std::span<const double> series, double alpha, std::size_t max_changes) {
  constexpr std::size_t kMinSegment = 2;
  const std::size_t n = series.size();
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    s1[i + 1] = s1[i] + series[i];
    s2[i + 1] = s2[i] + series[i] * series[i];
  }
  auto ss = [&](std::size_t a, std::size_t b) {
    const double m = static_cast<double>(b - a);
    const double sum = s1[b] - s1[a];
    return std::max(0.0, (s2[b] - s2[a]) - sum * sum / m);
  };

  std::vector<std::size_t> changes;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n}};
  while (!stack.empty() && changes.size() < max_changes) {
    auto [l, r] = stack.back();
    stack.pop_back();
    const std::size_t len = r - l;
    if (len < 2 * kMinSegment + 1) continue;

    const double total = ss(l, r);
    if (total <= 0.0) continue;
    double best_t = -1;
    std::size_t best_k = 0;
    for (std::size_t k = l + kMinSegment; k + kMinSegment <= r; ++k) {
      const double n1 = static_cast<double>(k - l);
      const double n2 = static_cast<double>(r - k);
      const double diff = std::abs((s1[k] - s1[l]) / n1 - (s1[r] - s1[k]) / n2);
      const double pooled = (ss(l, k) + ss(k, r)) / static_cast<double>(len - 2);
      // Noise-free segments on both sides of k: an exact step.
      double t = pooled <= kRelTol * total ? std::numeric_limits<double>::infinity()
                                           : diff / std::sqrt(pooled * (1.0 / n1 + 1.0 / n2));
      if (t > best_t) {
        best_t = t;
        best_k = k;
      }
    }
    if (best_t <= 0) continue;
    const double candidates = static_cast<double>(len - 2 * kMinSegment + 1);
    double p_value = 0.0;
    if (std::isfinite(best_t)) {
      boost::math::students_t dist(static_cast<double>(len - 2));
      p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, best_t));
    }
    if (p_value * candidates >= alpha) continue;
    changes.push_back(best_k);
    stack.push_back({best_k, r});
    stack.push_back({l, best_k});
  }
  std::sort(changes.begin(), changes.end());
  return changes;
}

double transition_score(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 30) fail(Errc::TooShort, "transition_score: need at least 30 observations");
  if (is_constant(series)) return 0.0;
  const double cap = static_cast<double>(n) / 10.0;
  const auto found = binary_segmentation(series, 0.01, static_cast<std::size_t>(std::ceil(cap)));
  return clamp01(std::min(static_cast<double>(found.size()), cap) / cap);
}

double shifting_score(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 30) fail(Errc::TooShort, "shifting_score: need at least 30 observations");
  auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  if (range <= 0.0) return 0.0;

  constexpr int kBins = 10;
  const std::size_t third = n / 3;
  auto histogram = [&](std::size_t begin) {
    std::array<double, kBins> h{};
    for (std::size_t i = begin; i < begin + third; ++i) {
      int b = static_cast<int>((series[i] - lo) / range * kBins);
      h[static_cast<std::size_t>(std::clamp(b, 0, kBins - 1))] += 1.0;
    }
    for (auto& v : h) v /= static_cast<double>(third);
    return h;
  };
  const auto first = histogram(0);
  const auto last = histogram(n - third);
  double tv = 0;
  for (int b = 0; b < kBins; ++b) tv += std::abs(first[static_cast<std::size_t>(b)] - last[static_cast<std::size_t>(b)]);
  return clamp01(0.5 * tv);
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i + 1;
    while (j < idx.size() && x[idx[j]] == x[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j - 1)) / 2.0 + 1.0;
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = avg;
    i = j;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(Errc::InvalidArgument, "spearman: length mismatch");
  if (a.size() < 2 || is_constant(a) || is_constant(b)) return 0.0;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  // Ranks always average to (n+1)/2.
  const double mean = (static_cast<double>(a.size()) + 1.0) / 2.0;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    const double da = ra[i] - mean;
    const double db = rb[i] - mean;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va <= 0 || vb <= 0) return 0.0;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

double correlation_score(const std::vector<std::vector<double>>& panel) {
  if (panel.size() < 2) fail(Errc::InvalidArgument, "correlation_score: need at least two series");
  std::vector<double> values;
  values.reserve(panel.size() * (panel.size() - 1) / 2);
  for (std::size_t i = 0; i < panel.size(); ++i) {
    for (std::size_t j = i + 1; j < panel.size(); ++j) values.push_back(std::abs(spearman(panel[i], panel[j])));
  }
  return clamp01(order_free_mean(std::move(values)));
}

double non_gaussianity_score(const std::vector<std::vector<double>>& panel) {
  if (panel.empty()) fail(Errc::InvalidArgument, "non_gaussianity_score: empty panel");
  std::vector<double> values;
  for (const auto& s : panel) {
    if (s.empty() || is_constant(s)) {
      values.push_back(0.0);
      continue;
    }
    const double n = static_cast<double>(s.size());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : s) {
      const double d = v - mean;
      m2 += d * d;
      m3 += d * d * d;
      m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double skew = m3 / std::pow(m2, 1.5);
    const double exkurt = m4 / (m2 * m2) - 3.0;
    values.push_back(clamp01((std::abs(skew) + std::abs(exkurt) / 2.0) / 4.0));
  }
  return clamp01(order_free_mean(std::move(values)));
}

CharacterizationRow characterize(const std::vector<std::vector<double>>& panel, const std::string& dataset,
                                 int period) {
  if (panel.empty()) fail(Errc::InvalidArgument, "characterize: empty panel");
  for (const auto& s : panel) {
    if (s.size() < 30) fail(Errc::TooShort, "characterize: series need at least 30 windows");
    if (s.size() < 2 * static_cast<std::size_t>(period)) fail(Errc::TooShort, "characterize: series shorter than two periods");
  }
  std::vector<double> seas, trend, trans, shift;
  for (const auto& s : panel) {
    seas.push_back(seasonality_strength(s, period));
    trend.push_back(trend_strength(s, period));
    trans.push_back(transition_score(s));
    shift.push_back(shifting_score(s));
  }
  CharacterizationRow row;
  row.dataset = dataset;
  row.seasonality = clamp01(order_free_mean(seas));
  row.trend = clamp01(order_free_mean(trend));
  row.stationarity = stationarity_score(panel);
  row.transition = clamp01(order_free_mean(trans));
  row.shifting = clamp01(order_free_mean(shift));
  row.correlation = panel.size() >= 2 ? correlation_score(panel) : 0.0;
  row.non_gaussianity = non_gaussianity_score(panel);
  return row;
}

CharacterizationRow characterize(const DFPanel& panel, const std::string& dataset, int period) {
  std::vector<std::vector<double>> series;
  for (std::size_t d = 0; d < panel.series_count(); ++d) series.push_back(panel.series(d));
  return characterize(series, dataset, period);
}

void write_characterization_header(std::ostream& out) {
  csv::write_row(out, {"dataset", "seasonality", "trend", "stationarity", "transition", "shifting", "correlation",
                       "non_gaussianity"});
}

void write_characterization_row(std::ostream& out, const CharacterizationRow& row) {
  csv::write_row(out, {row.dataset, format_double(row.seasonality), format_double(row.trend),
                       format_double(row.stationarity), format_double(row.transition), format_double(row.shifting),
                       format_double(row.correlation), format_double(row.non_gaussianity)});
}

}  // namespace pmf
