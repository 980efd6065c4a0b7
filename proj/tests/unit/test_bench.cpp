#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "bench/run.hpp"
#include "common/csv.hpp"
#include "common/error.hpp"
#include "synth.hpp"

using namespace pmf;
namespace fs = std::filesystem;
using pmf::testing::slurp;
using pmf::testing::spit;

namespace {

Errc code_of(const std::function<void()>& f, std::string* message = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  return Errc::Internal;
}

}  // namespace

TEST_CASE("config defaults and path resolution") {
  const auto cfg = parse_run_config(R"({"datasets":[{"name":"d","log":"logs/a.csv"}],"models":["naive_seasonal"]})",
                                    "/data/run");
  REQUIRE(cfg.datasets.size() == 1);
  CHECK(cfg.datasets[0].log_path == "/data/run/logs/a.csv");
  CHECK(cfg.horizon == 7);
  CHECK(cfg.season == 7);
  CHECK(cfg.window == kDay);
  CHECK(cfg.baseline == "naive_seasonal");
  CHECK(cfg.endpoints == EndpointMode::CaseEndpoints);
  CHECK(cfg.dfg_mode == RoundingMode::RoundClip);
  CHECK(cfg.tau == 0.5);
}

TEST_CASE("config keys") {
  const auto cfg = parse_run_config(R"({
    "datasets": [{"name": "d", "log": "/x.csv", "case_column": "Case ID", "delimiter": ";",
                  "timezone": "reject-naive", "min_case_events": 2, "keep_from": "2024-02-01"}],
    "window": "12h", "horizon": 3, "season": 14, "mean_window": 5, "endpoint_mode": "none",
    "df_assignment": "first", "models": ["naive_last", {"name": "tsfm", "command": "python3 bridge.py"}],
    "baseline": "naive_last", "output_dir": "/tmp/o", "dfg_mode": "raw-clip", "tau": 0.25,
    "er_references": false, "jobs": 3, "timeout_ms": 500})");
  CHECK(cfg.datasets[0].ingest.case_column == "Case ID");
  CHECK(cfg.datasets[0].ingest.delimiter == ';');
  CHECK(cfg.datasets[0].ingest.timezone == TimezonePolicy::RejectNaive);
  CHECK(cfg.datasets[0].preprocess.min_case_events == 2);
  CHECK(cfg.datasets[0].preprocess.keep_from == pmf::testing::at(31));
  CHECK(cfg.window == std::chrono::hours(12));
  CHECK(cfg.horizon == 3);
  CHECK(cfg.endpoints == EndpointMode::None);
  CHECK(cfg.assignment == WindowAssignment::FirstEvent);
  CHECK(cfg.models[1].command == "python3 bridge.py");
  CHECK(cfg.dfg_mode == RoundingMode::RawClip);
  CHECK_FALSE(cfg.er_references);
  CHECK(cfg.jobs == 3);
  CHECK(cfg.timeout == std::chrono::milliseconds(500));
}

TEST_CASE("config errors") {
  auto bad = [](const std::string& text) { return code_of([&] { parse_run_config(text); }); };
  CHECK(bad(R"({"datasets":[{"name":"d","log":"a"}],"models":["naive_seasonal"],"horizn":7})") == Errc::Config);
  CHECK(bad(R"({"datasets":[{"name":"d","log":"a","colour":1}],"models":["naive_seasonal"]})") == Errc::Config);
  CHECK(bad(R"({"datasets":[],"models":["naive_seasonal"]})") == Errc::Config);
  CHECK(bad(R"({"datasets":[{"name":"d","log":"a"}],"models":[]})") == Errc::Config);
  CHECK(bad(R"({"datasets":[{"name":"d","log":"a"}],"models":["naive_last"]})") == Errc::Config);
  CHECK(bad(R"({"datasets":[{"name":"d","log":"a"}],"models":["prophet"],"baseline":"prophet"})") == Errc::Config);
  CHECK(bad(R"({"datasets":[{"name":"d","log":"a"}],"models":["naive_seasonal"],"horizon":"7"})") == Errc::Config);
  CHECK(bad(R"({"datasets":[{"name":"d","log":"a"}],"models":["naive_seasonal"],"window":"1w"})") == Errc::Config);
  CHECK(bad("{not json") == Errc::Config);
}

TEST_CASE("jobs fall back to PMF_JOBS") {
  const std::string text = R"({"datasets":[{"name":"d","log":"a"}],"models":["naive_seasonal"]})";
  ::setenv("PMF_JOBS", "5", 1);
  CHECK(parse_run_config(text).jobs == 5);
  CHECK(parse_run_config(R"({"datasets":[{"name":"d","log":"a"}],"models":["naive_seasonal"],"jobs":2})").jobs == 2);
  ::setenv("PMF_JOBS", "zero", 1);
  CHECK(code_of([&] { parse_run_config(text); }) == Errc::Config);
  ::unsetenv("PMF_JOBS");
  CHECK(parse_run_config(text).jobs == 1);
}

TEST_CASE("end-to-end run writes every output") {
  pmf::testing::TempDir tmp;
  spit(tmp / "log.csv", pmf::testing::log_csv(pmf::testing::weekly_log(70)));
  RunConfig cfg;
  cfg.datasets.push_back({"weekly", (tmp / "log.csv").string(), {}, {}});
  cfg.models = {{"naive_seasonal", ""}, {"naive_last", ""}, {"echo", std::string(PMF_ECHO_STUB) + " seasonal"}};
  cfg.output_dir = (tmp / "out").string();
  const auto bundle = run(cfg);

  for (const char* f : {"metrics.csv", "er.csv", "characterization.csv", "summary.txt", "panels/weekly.csv",
                        "forecasts/weekly/naive_seasonal.csv", "forecasts/weekly/echo.csv"}) {
    CHECK_MESSAGE(fs::exists(tmp / "out" / f), f);
  }
  CHECK_FALSE(fs::exists(tmp / "out" / "error.json"));
  CHECK(fs::exists(tmp / "out/plotdata/naive_last" / (encode_key_filename("<START>>>register") + ".csv")));

  REQUIRE(bundle.datasets.size() == 1);
  const auto& report = bundle.datasets[0];
  CHECK(report.windows == 70);
  CHECK(report.split == Split{42, 56});
  REQUIRE(report.metrics.size() == 3);
  CHECK_FALSE(report.metrics[0].mae_pct);
  CHECK(report.metrics[1].mae_pct);
  CHECK(report.metrics[2].mae.mean == report.metrics[0].mae.mean);
  CHECK(report.er.size() == 5);

  std::istringstream metrics(slurp(tmp / "out/metrics.csv"));
  const auto table = csv::read_table(metrics);
  REQUIRE(table.rows.size() == 6);
  CHECK(table.rows[2][0] == "naive_last");
  CHECK_FALSE(table.rows[2][5].empty());
  CHECK(table.rows[0][5].empty());

  const std::string summary = slurp(tmp / "out/summary.txt");
  CHECK(summary == render_summary(tmp / "out"));
  CHECK(summary.find("naive_last") != std::string::npos);
  CHECK(summary.find("(*)") != std::string::npos);

  std::istringstream plot(slurp(tmp / "out/plotdata/naive_last" / (encode_key_filename("register>>check") + ".csv")));
  const auto plot_table = csv::read_table(plot);
  CHECK(plot_table.header == csv::Row{"t", "truth", "forecast"});
  CHECK(plot_table.rows.size() == 70);
  CHECK(plot_table.rows[10][2].empty());
  CHECK_FALSE(plot_table.rows[60][2].empty());
}

TEST_CASE("a missing forecaster binary fails the backtest stage") {
  pmf::testing::TempDir tmp;
  spit(tmp / "log.csv", pmf::testing::log_csv(pmf::testing::weekly_log(40)));
  RunConfig cfg;
  cfg.datasets.push_back({"w", (tmp / "log.csv").string(), {}, {}});
  cfg.models = {{"naive_seasonal", ""}, {"ghost", "/nonexistent/forecaster --serve"}};
  cfg.output_dir = (tmp / "out").string();
  try {
    run(cfg);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "backtest");
    CHECK(e.code() == Errc::LaunchFailed);
    CHECK(std::string(e.what()).find("forecaster launch failed") != std::string::npos);
  }
  const std::string record = slurp(tmp / "out/error.json");
  CHECK(record.find("\"stage\": \"backtest\"") != std::string::npos);
  CHECK(record.find("\"partial\": true") != std::string::npos);
  CHECK(record.find("forecasts/w/naive_seasonal.csv") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp / "out/metrics.csv"));
}

TEST_CASE("an unreadable log fails the ingest stage") {
  pmf::testing::TempDir tmp;
  RunConfig cfg;
  cfg.datasets.push_back({"w", (tmp / "missing.csv").string(), {}, {}});
  cfg.models = {{"naive_seasonal", ""}};
  cfg.output_dir = (tmp / "out").string();
  try {
    run(cfg);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "ingest");
    CHECK(e.code() == Errc::Io);
  }
  CHECK(slurp(tmp / "out/error.json").find("\"partial\": false") != std::string::npos);
}

TEST_CASE("key file names") {
  CHECK(encode_key_filename("<START>>>a") == "%3CSTART%3E%3E%3Ea");
  CHECK(encode_key_filename("A_Create Application>>b") == "A_Create%20Application%3E%3Eb");
  CHECK(encode_key_filename("x/y") == "x%2Fy");
}
