#include "bench/run.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/numfmt.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace pmf {

std::string endpoint_mode_name(EndpointMode m) {
  return m == EndpointMode::CaseEndpoints ? "case-endpoints" : "none";
}

EndpointMode parse_endpoint_mode(const std::string& s) {
  if (s == "case-endpoints") return EndpointMode::CaseEndpoints;
  if (s == "none") return EndpointMode::None;
  fail(Errc::Config, "endpoint mode must be 'case-endpoints' or 'none', got '" + s + "'");
}

std::string assignment_name(WindowAssignment a) { return a == WindowAssignment::SecondEvent ? "second" : "first"; }

WindowAssignment parse_assignment(const std::string& s) {
  if (s == "second") return WindowAssignment::SecondEvent;
  if (s == "first") return WindowAssignment::FirstEvent;
  fail(Errc::Config, "DF window assignment must be 'second' or 'first', got '" + s + "'");
}

std::string rounding_name(RoundingMode m) { return m == RoundingMode::RoundClip ? "round-clip" : "raw-clip"; }

RoundingMode parse_rounding(const std::string& s) {
  if (s == "round-clip") return RoundingMode::RoundClip;
  if (s == "raw-clip") return RoundingMode::RawClip;
  fail(Errc::Config, "DFG mode must be 'round-clip' or 'raw-clip', got '" + s + "'");
}

TimezonePolicy parse_timezone_policy(const std::string& s) {
  if (s == "assume-utc") return TimezonePolicy::AssumeUtc;
  if (s == "reject-naive") return TimezonePolicy::RejectNaive;
  fail(Errc::Config, "timezone policy must be 'assume-utc' or 'reject-naive', got '" + s + "'");
}

void RunConfig::validate() const {
  if (datasets.empty()) fail(Errc::Config, "config needs at least one dataset");
  if (models.empty()) fail(Errc::Config, "config needs at least one model");
  std::set<std::string> names;
  for (const auto& d : datasets) {
    if (d.name.empty()) fail(Errc::Config, "dataset without a name");
    if (d.log_path.empty()) fail(Errc::Config, "dataset '" + d.name + "' has no log path");
    if (!names.insert(d.name).second) fail(Errc::Config, "duplicate dataset name '" + d.name + "'");
    d.ingest.validate();
  }
  names.clear();
  for (const auto& m : models) {
    if (m.name.empty()) fail(Errc::Config, "model without a name");
    if (!names.insert(m.name).second) fail(Errc::Config, "duplicate model name '" + m.name + "'");
    if (m.command.empty() && !is_builtin(m.name)) {
      fail(Errc::Config, "model '" + m.name + "' is neither a built-in nor has a command");
    }
  }
  if (!names.count(baseline)) fail(Errc::Config, "baseline '" + baseline + "' is not in the model list");
  if (horizon < 1 || season < 1 || mean_window < 1) fail(Errc::Config, "horizon, season and mean_window must be >= 1");
  if (window <= Duration::zero()) fail(Errc::Config, "window must be positive");
  if (jobs < 1) fail(Errc::Config, "jobs must be >= 1");
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) fail(Errc::Config, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail(Errc::Config, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(Errc::Config, "key '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

}  // namespace

Timestamp parse_config_time(const std::string& text, const std::string& where) {
  auto ts = parse_timestamp(text, "%Y-%m-%dT%H:%M:%S", TimezonePolicy::AssumeUtc);
  if (!ts) ts = parse_timestamp(text, "%Y-%m-%d", TimezonePolicy::AssumeUtc);
  if (!ts) fail(Errc::Config, "bad time '" + text + "' in " + where);
  return *ts;
}

RunConfig parse_run_config(const std::string& json_text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(Errc::Config, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root,
             {"datasets", "window", "horizon", "season", "mean_window", "endpoint_mode", "df_assignment", "models",
              "baseline", "output_dir", "dfg_mode", "tau", "er_references", "jobs", "timeout_ms"},
             "config");

  RunConfig cfg;
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return (path.is_relative() && !base_dir.empty() ? base_dir / path : path).lexically_normal().string();
  };

  if (!root.contains("datasets") || !root["datasets"].is_array()) fail(Errc::Config, "config needs a 'datasets' list");
  for (const auto& d : root["datasets"]) {
    const std::string where = "dataset entry";
    check_keys(d,
               {"name", "log", "case_column", "activity_column", "timestamp_column", "delimiter", "timestamp_format",
                "timezone", "min_case_events", "drop_duplicate_events", "keep_from", "keep_until"},
               where);
    DatasetConfig ds;
    if (!d.contains("name") || !d.contains("log")) fail(Errc::Config, "dataset entries need 'name' and 'log'");
    ds.name = get<std::string>(d, "name", where);
    ds.log_path = resolve(get<std::string>(d, "log", where));
    if (d.contains("case_column")) ds.ingest.case_column = get<std::string>(d, "case_column", where);
    if (d.contains("activity_column")) ds.ingest.activity_column = get<std::string>(d, "activity_column", where);
    if (d.contains("timestamp_column")) ds.ingest.timestamp_column = get<std::string>(d, "timestamp_column", where);
    if (d.contains("delimiter")) {
      auto delim = get<std::string>(d, "delimiter", where);
      if (delim.size() != 1) fail(Errc::Config, "delimiter must be a single character");
      ds.ingest.delimiter = delim[0];
    }
    if (d.contains("timestamp_format")) ds.ingest.timestamp_format = get<std::string>(d, "timestamp_format", where);
    if (d.contains("timezone")) ds.ingest.timezone = parse_timezone_policy(get<std::string>(d, "timezone", where));
    if (d.contains("min_case_events")) ds.preprocess.min_case_events = get<std::size_t>(d, "min_case_events", where);
    if (d.contains("drop_duplicate_events")) {
      ds.preprocess.drop_duplicate_events = get<bool>(d, "drop_duplicate_events", where);
    }
    if (d.contains("keep_from")) ds.preprocess.keep_from = parse_config_time(get<std::string>(d, "keep_from", where), where);
    if (d.contains("keep_until")) {
      ds.preprocess.keep_until = parse_config_time(get<std::string>(d, "keep_until", where), where);
    }
    cfg.datasets.push_back(std::move(ds));
  }

  if (!root.contains("models") || !root["models"].is_array()) fail(Errc::Config, "config needs a 'models' list");
  for (const auto& m : root["models"]) {
    ModelConfig mc;
    if (m.is_string()) {
      mc.name = m.get<std::string>();
    } else {
      check_keys(m, {"name", "command"}, "model entry");
      if (!m.contains("name")) fail(Errc::Config, "model entries need a 'name'");
      mc.name = get<std::string>(m, "name", "model entry");
      if (m.contains("command")) mc.command = get<std::string>(m, "command", "model entry");
    }
    cfg.models.push_back(std::move(mc));
  }

  const std::string where = "config";
  if (root.contains("window")) {
    auto w = parse_duration(get<std::string>(root, "window", where));
    if (!w) fail(Errc::Config, "bad window duration");
    cfg.window = *w;
  }
  if (root.contains("horizon")) cfg.horizon = get<int>(root, "horizon", where);
  if (root.contains("season")) cfg.season = get<int>(root, "season", where);
  if (root.contains("mean_window")) cfg.mean_window = get<int>(root, "mean_window", where);
  if (root.contains("endpoint_mode")) cfg.endpoints = parse_endpoint_mode(get<std::string>(root, "endpoint_mode", where));
  if (root.contains("df_assignment")) cfg.assignment = parse_assignment(get<std::string>(root, "df_assignment", where));
  if (root.contains("baseline")) cfg.baseline = get<std::string>(root, "baseline", where);
  if (root.contains("output_dir")) cfg.output_dir = resolve(get<std::string>(root, "output_dir", where));
  if (root.contains("dfg_mode")) cfg.dfg_mode = parse_rounding(get<std::string>(root, "dfg_mode", where));
  if (root.contains("tau")) cfg.tau = get<double>(root, "tau", where);
  if (root.contains("er_references")) cfg.er_references = get<bool>(root, "er_references", where);
  if (root.contains("timeout_ms")) cfg.timeout = std::chrono::milliseconds(get<long>(root, "timeout_ms", where));
  if (root.contains("jobs")) {
    cfg.jobs = get<unsigned>(root, "jobs", where);
  } else if (const char* env = std::getenv("PMF_JOBS")) {
    auto j = parse_int(env);
    if (!j || *j < 1) fail(Errc::Config, "PMF_JOBS must be a positive integer");
    cfg.jobs = static_cast<unsigned>(*j);
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), fs::path(path).parent_path());
}

ForecasterFactory make_factory(const ModelConfig& model, const RunConfig& cfg) {
  if (model.command.empty()) {
    BuiltinOptions opts{cfg.season, cfg.mean_window};
    std::string name = model.name;
    make_builtin(name, opts);  // validate eagerly
    return [name, opts] { return make_builtin(name, opts); };
  }
  ExternalOptions opts;
  opts.timeout = cfg.timeout;
  opts.display_name = model.name;
  return external_factory(model.command, opts);
}

std::string encode_key_filename(const std::string& key) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : key) {
    if (std::isalnum(c) || c == '_' || c == '-' || c == '.') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

void write_plot_data(const fs::path& dir, const DFPanel& panel, const ForecastSet& forecasts) {
  fs::create_directories(dir);
  for (std::size_t d = 0; d < forecasts.keys().size(); ++d) {
    const std::size_t td = panel.find(forecasts.keys()[d]);
    if (td == DFPanel::npos) continue;
    std::ofstream out(dir / (encode_key_filename(forecasts.keys()[d].str()) + ".csv"), std::ios::binary);
    if (!out) fail(Errc::Io, "cannot write plot data in " + dir.string());
    csv::write_row(out, {"t", "truth", "forecast"});
    for (std::size_t t = 0; t < panel.length(); ++t) {
      std::string value;
      std::size_t origin = 0;
      int step = 0;
      if (select_origin(forecasts, t, origin, step)) {
        if (auto v = forecasts.get(d, origin, step)) value = format_double(*v);
      }
      csv::write_row(out, {window_label(panel.windows(), t), std::to_string(panel.at(t, td)), value});
    }
  }
}

namespace {

void write_error_record(const fs::path& dir, const std::string& stage, const Error& e,
                        const std::vector<std::string>& outputs) {
  json record{{"status", "error"},
              {"stage", stage},
              {"code", std::string(errc_name(e.code()))},
              {"message", e.what()},
              {"partial", !outputs.empty()},
              {"outputs_written", outputs}};
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "error.json", std::ios::binary);
  out << record.dump(2) << "\n";
}

template <typename F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  } catch (const std::exception& e) {
    throw StageError(name, Error(Errc::Internal, e.what()));
  }
}

std::string rel(const fs::path& root, const fs::path& p) { return fs::relative(p, root).generic_string(); }

}  // namespace

ReportBundle run(const RunConfig& cfg) {
  cfg.validate();
  const fs::path out_dir(cfg.output_dir);
  ReportBundle bundle;
  std::vector<CharacterizationRow> characterization;
  std::vector<MetricRow> metrics;
  std::vector<ERResult> er_results;

  try {
    stage("output", [&] {
      fs::create_directories(out_dir / "panels");
      fs::remove(out_dir / "error.json");
    });

    for (const auto& ds : cfg.datasets) {
      DatasetReport report;
      report.name = ds.name;

      EventLog log = stage("ingest", [&] {
        EventLog raw = read_log_file(ds.log_path, ds.ingest);
        return preprocess(raw, ds.preprocess);
      });
      report.validation = validate(log);

      DFPanel panel = stage("extract", [&] {
        WindowSpec spec = partition_windows(log, cfg.window);
        return extract_df_counts(log, spec, cfg.endpoints, cfg.assignment);
      });
      panel = stage("split", [&] { return split_panel(std::move(panel)); });
      report.windows = panel.length();
      report.series = panel.series_count();
      report.split = panel.split();
      const fs::path panel_path = out_dir / "panels" / (ds.name + ".csv");
      stage("extract", [&] { write_panel_file(panel_path.string(), panel); });
      bundle.outputs.push_back(rel(out_dir, panel_path));

      report.characterization = stage("characterize", [&] { return characterize(panel, ds.name); });
      characterization.push_back(report.characterization);

      const BacktestPlan plan = stage("backtest", [&] { return make_plan(panel, cfg.horizon); });
      BacktestOptions bopts;
      bopts.jobs = cfg.jobs;
      bopts.freq = freq_tag(cfg.window);
      std::vector<ForecastSet> sets;
      for (const auto& model : cfg.models) {
        ForecastSet fs_model = stage("backtest", [&] {
          ForecastSet s = rolling_backtest(panel, make_factory(model, cfg), plan, bopts);
          s.set_model(model.name);
          return s;
        });
        const fs::path fpath = out_dir / "forecasts" / ds.name / (model.name + ".csv");
        stage("backtest", [&] {
          fs::create_directories(fpath.parent_path());
          write_forecast_file(fpath.string(), fs_model);
        });
        bundle.outputs.push_back(rel(out_dir, fpath));
        report.failed_cells.push_back({model.name, fs_model.failures().size() * static_cast<std::size_t>(cfg.horizon)});
        sets.push_back(std::move(fs_model));
      }

      stage("evaluate", [&] {
        for (const auto& s : sets) report.metrics.push_back(evaluate(panel, s, ds.name));
        apply_baseline(report.metrics, cfg.baseline);
      });
      metrics.insert(metrics.end(), report.metrics.begin(), report.metrics.end());

      stage("er", [&] {
        EROptions eopts{cfg.dfg_mode, cfg.tau};
        for (const auto& s : sets) report.er.push_back(er_over_test(panel, s, log, eopts, ds.name));
        if (cfg.er_references) {
          report.er.push_back(er_truth(panel, log, ds.name));
          report.er.push_back(er_training(panel, log, ds.name));
        }
      });
      er_results.insert(er_results.end(), report.er.begin(), report.er.end());

      stage("plot", [&] {
        for (const auto& s : sets) {
          fs::path dir = out_dir / "plotdata";
          if (cfg.datasets.size() > 1) dir /= ds.name;
          dir /= s.model();
          write_plot_data(dir, panel, s);
          bundle.outputs.push_back(rel(out_dir, dir));
        }
      });
      bundle.datasets.push_back(std::move(report));
    }

    stage("report", [&] {
      auto open = [&](const char* name) {
        std::ofstream out(out_dir / name, std::ios::binary);
        if (!out) fail(Errc::Io, std::string("cannot write ") + name);
        return out;
      };
      {
        auto out = open("characterization.csv");
        write_characterization_header(out);
        for (const auto& row : characterization) write_characterization_row(out, row);
      }
      bundle.outputs.push_back("characterization.csv");
      {
        auto out = open("metrics.csv");
        write_metrics_header(out);
        for (const auto& row : metrics) write_metrics_rows(out, row);
      }
      bundle.outputs.push_back("metrics.csv");
      {
        auto out = open("er.csv");
        write_er_header(out);
        for (const auto& r : er_results) write_er_rows(out, r);
      }
      bundle.outputs.push_back("er.csv");
      {
        auto out = open("summary.txt");
        out << render_summary(out_dir);
      }
      bundle.outputs.push_back("summary.txt");
    });
  } catch (const StageError& e) {
    write_error_record(out_dir, e.stage(), e, bundle.outputs);
    throw;
  }
  return bundle;
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << v;
  return ss.str();
}

std::string pad(std::string s, std::size_t width) {
  // Width counts code points so the arrows in percentage cells line up.
  std::size_t cps = 0;
  for (unsigned char c : s) cps += (c & 0xC0) != 0x80;
  if (cps < width) s.append(width - cps, ' ');
  return s;
}

}  // namespace

std::string render_summary(const fs::path& dir) {
  auto load = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) fail(Errc::Io, "cannot open " + (dir / name).string());
    return csv::read_table(in);
  };
  const auto chars = load("characterization.csv");
  const auto metrics = load("metrics.csv");
  const auto er = load("er.csv");

  std::vector<std::string> datasets;
  for (const auto& r : chars.rows) datasets.push_back(r[0]);
  for (const auto& r : metrics.rows) {
    if (std::find(datasets.begin(), datasets.end(), r[1]) == datasets.end()) datasets.push_back(r[1]);
  }

  std::ostringstream out;
  for (const auto& ds : datasets) {
    out << "== " << ds << " ==\n\n";
    for (const auto& r : chars.rows) {
      if (r[0] != ds) continue;
      out << "DF series characteristics\n";
      for (std::size_t c = 1; c < chars.header.size(); ++c) {
        out << "  " << pad(chars.header[c], 16) << fixed(parse_double(r[c]).value_or(0), 3) << "\n";
      }
      out << "\n";
    }

    std::vector<std::string> models;
    std::map<std::string, std::map<std::string, std::string>> cells;
    for (const auto& r : metrics.rows) {
      if (r[1] != ds) continue;
      if (std::find(models.begin(), models.end(), r[0]) == models.end()) models.push_back(r[0]);
      std::string cell = fixed(parse_double(r[3]).value_or(0), 2) + " ± " + fixed(parse_double(r[4]).value_or(0), 2);
      cell += r[5].empty() ? " (*)" : " (" + r[5] + ")";
      cells[r[0]][r[2]] = cell;
    }
    std::map<std::string, std::string> er_cells;
    std::map<std::string, double> er_mean, er_std, er_fit;
    for (const auto& r : er.rows) {
      if (r[1] != ds) continue;
      if (r[2] == "mean") {
        er_mean[r[0]] = parse_double(r[3]).value_or(0);
        er_fit[r[0]] = parse_double(r[4]).value_or(0);
      } else if (r[2] == "std") {
        er_std[r[0]] = parse_double(r[3]).value_or(0);
      }
    }
    for (const auto& [model, mean] : er_mean) {
      er_cells[model] = fixed(mean, 2) + " ± " + fixed(er_std[model], 2) + " (" + fixed(100.0 * er_fit[model], 1) + "%)";
      if (std::find(models.begin(), models.end(), model) == models.end()) models.push_back(model);
    }

    out << pad("model", 20) << pad("MAE", 26) << pad("RMSE", 26) << "ER (fitting)\n";
    for (const auto& m : models) {
      auto cell = [&](const char* metric) {
        auto it = cells[m].find(metric);
        return it == cells[m].end() ? std::string("-") : it->second;
      };
      out << pad(m, 20) << pad(cell("MAE"), 26) << pad(cell("RMSE"), 26)
          << (er_cells.count(m) ? er_cells[m] : std::string("-")) << "\n";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace pmf
