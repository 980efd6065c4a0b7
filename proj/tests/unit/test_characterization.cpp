#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "characterization/characterize.hpp"
#include "common/error.hpp"
#include "synth.hpp"

using namespace pmf;

namespace {

std::vector<double> sine(std::size_t n, double noise_sd = 0.0, unsigned seed = 1) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd > 0 ? noise_sd : 1.0);
  std::vector<double> s(n);
  for (std::size_t t = 0; t < n; ++t) {
    s[t] = 10 + 3 * std::sin(2 * std::numbers::pi * static_cast<double>(t) / 7.0);
    if (noise_sd > 0) s[t] += noise(rng);
  }
  return s;
}

std::vector<double> gaussian(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0, 1);
  std::vector<double> s(n);
  for (auto& x : s) x = g(rng);
  return s;
}

std::vector<double> exponential(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::exponential_distribution<double> g(1.0);
  std::vector<double> s(n);
  for (auto& x : s) x = g(rng);
  return s;
}

std::vector<double> random_walk(std::size_t n, unsigned seed) {
  auto s = gaussian(n, seed);
  for (std::size_t t = 1; t < n; ++t) s[t] += s[t - 1];
  return s;
}

std::vector<double> ramp(std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t t = 0; t < n; ++t) s[t] = 0.5 * static_cast<double>(t);
  return s;
}

std::vector<double> step(std::size_t half) {
  std::vector<double> s(2 * half, 0.0);
  std::fill(s.begin() + static_cast<std::ptrdiff_t>(half), s.end(), 10.0);
  return s;
}

double variance(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("decomposition") {
  const auto s = sine(140);
  const auto dec = decompose(s);
  CHECK(variance(dec.remainder) < 0.05 * variance(s));

  const auto flat = decompose(std::vector<double>(30, 4.0));
  for (std::size_t t = 0; t < 30; ++t) {
    CHECK(std::fabs(flat.seasonal[t]) < 1e-12);
    CHECK(std::fabs(flat.remainder[t]) < 1e-12);
  }

  const auto r = ramp(70);
  const auto line = decompose(r);
  for (std::size_t t = 0; t < 70; ++t) CHECK(std::fabs(line.seasonal[t]) < 1e-9);
  for (std::size_t t = 3; t + 3 < 70; ++t) CHECK(line.trend[t] == doctest::Approx(r[t]).epsilon(1e-12));

  CHECK_THROWS_AS(decompose(std::vector<double>(13, 1.0)), Error);
  CHECK(decompose(std::vector<double>(28, 1.0), 4).trend.size() == 28);
}

TEST_CASE("seasonality and trend strengths") {
  CHECK(seasonality_strength(sine(140, 0.05)) >= 0.9);
  const auto noise = gaussian(140, 3);
  CHECK(seasonality_strength(noise) <= 0.3);
  CHECK(seasonality_strength(noise) < seasonality_strength(sine(140, 0.05)) - 0.5);
  CHECK(trend_strength(ramp(140)) - trend_strength(noise) >= 0.3);
  CHECK(seasonality_strength(std::vector<double>(50, 2.0)) == 0.0);
  CHECK(trend_strength(std::vector<double>(50, 2.0)) == 0.0);
}

TEST_CASE("strengths are invariant under positive affine maps") {
  auto s = sine(140, 0.5, 9);
  for (std::size_t t = 0; t < s.size(); ++t) s[t] += 0.03 * static_cast<double>(t);
  auto scaled = s;
  for (auto& x : scaled) x = 4.0 * x + 17.0;
  CHECK(seasonality_strength(scaled) == doctest::Approx(seasonality_strength(s)).epsilon(1e-9));
  CHECK(trend_strength(scaled) == doctest::Approx(trend_strength(s)).epsilon(1e-9));
}

TEST_CASE("stationarity") {
  std::vector<std::vector<double>> iid, walks;
  for (unsigned i = 0; i < 10; ++i) {
    iid.push_back(gaussian(300, 100 + i));
    walks.push_back(random_walk(300, 200 + i));
  }
  const double s_iid = stationarity_score(iid);
  const double s_walk = stationarity_score(walks);
  CHECK(s_iid >= 0.8);
  CHECK(s_walk <= 0.2);
  CHECK(s_iid > s_walk);
  CHECK(adf_test(gaussian(200, 1)).rejects_unit_root);
  CHECK(adf_test(gaussian(200, 1)).lags == 5);
  CHECK_THROWS_AS(adf_test(std::vector<double>(10, 1.0)), Error);
}

TEST_CASE("transitions and shifts") {
  const auto st = step(50);
  const auto noise = gaussian(100, 5);
  CHECK(binary_segmentation(st) == std::vector<std::size_t>{50});
  CHECK(transition_score(st) > transition_score(noise));
  CHECK(shifting_score(st) >= 0.8);
  CHECK(shifting_score(st) - shifting_score(noise) >= 0.3);
  for (unsigned seed = 0; seed < 20; ++seed) CHECK(shifting_score(gaussian(300, seed)) <= 0.3);
  CHECK(transition_score(std::vector<double>(60, 1.0)) == 0.0);
  CHECK(shifting_score(std::vector<double>(60, 1.0)) == 0.0);
  CHECK_THROWS_AS(transition_score(std::vector<double>(20, 1.0)), Error);
}

TEST_CASE("rank correlation and moments") {
  const auto a = gaussian(200, 1);
  CHECK(correlation_score({a, a, a}) == 1.0);
  std::vector<std::vector<double>> independent;
  for (unsigned i = 0; i < 6; ++i) independent.push_back(gaussian(200, 50 + i));
  CHECK(correlation_score(independent) <= 0.3);
  CHECK(spearman(std::vector<double>{1, 2, 2, 3}, std::vector<double>{10, 20, 20, 30}) == doctest::Approx(1.0));
  CHECK(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}) == 0.0);
  auto transformed = a;
  for (auto& x : transformed) x = std::exp(x);
  CHECK(spearman(a, transformed) == doctest::Approx(1.0));

  std::vector<std::vector<double>> gauss{gaussian(300, 7)}, expo{exponential(300, 7)};
  CHECK(non_gaussianity_score(gauss) <= 0.25);
  CHECK(non_gaussianity_score(expo) > non_gaussianity_score(gauss));
}

TEST_CASE("panel scores lie in [0,1] and ignore column order") {
  std::mt19937 rng(17);
  std::vector<std::vector<double>> panel{sine(120, 0.3, 1), ramp(120), gaussian(120, 2), random_walk(120, 3),
                                         step(60), exponential(120, 4)};
  const auto row = characterize(panel, "p");
  for (double v : {row.seasonality, row.trend, row.stationarity, row.transition, row.shifting, row.correlation,
                   row.non_gaussianity}) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  for (int rep = 0; rep < 10; ++rep) {
    auto shuffled = panel;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto again = characterize(shuffled, "p");
    CHECK(again.seasonality == row.seasonality);
    CHECK(again.trend == row.trend);
    CHECK(again.stationarity == row.stationarity);
    CHECK(again.transition == row.transition);
    CHECK(again.shifting == row.shifting);
    CHECK(again.correlation == row.correlation);
    CHECK(again.non_gaussianity == row.non_gaussianity);
  }
  CHECK_THROWS_AS(characterize(std::vector<std::vector<double>>{gaussian(20, 1)}), Error);
}

TEST_CASE("characterization csv row") {
  std::mt19937 rng(2);
  const auto panel = pmf::testing::random_panel(rng, 60, 3);
  const auto row = characterize(panel, "syn");
  std::ostringstream out;
  write_characterization_header(out);
  write_characterization_row(out, row);
  const std::string text = out.str();
  CHECK(text.rfind("dataset,seasonality,trend,stationarity,transition,shifting,correlation,non_gaussianity\n", 0) ==
        0);
  CHECK(text.find("\nsyn,") != std::string::npos);
}
