#include "process_eval/entropic_relevance.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "common/csv.hpp"
#include "common/error.hpp"
#include "common/numfmt.hpp"

namespace pmf {

namespace {

/// Sum of -log2 P over the trace's steps, or nullopt if some step is impossible.
std::optional<double> model_cost(const std::vector<std::string>& acts, const StochasticDFG& model) {
  const std::string start(kStartLabel);
  const std::string end(kEndLabel);
  double bits = 0;
  const std::string* prev = &start;
  for (const auto& a : acts) {
    const double p = model.probability(*prev, a);
    if (p <= 0.0) return std::nullopt;
    bits -= std::log2(p);
    prev = &a;
  }
  const double p_end = model.probability(*prev, end);
  if (p_end <= 0.0) return std::nullopt;
  return bits - std::log2(p_end);
}

}  // namespace

ERScore entropic_relevance(const SublogTraces& sub, const WeightedDFG& g) {
  if (sub.traces.empty()) fail(Errc::EmptySublog, "window " + std::to_string(sub.window) + " has no traces");
  const StochasticDFG model = normalize(g);

  std::set<std::string> alphabet;
  for (const auto& t : sub.traces) alphabet.insert(t.activities.begin(), t.activities.end());
  const double background_symbol_bits = std::log2(static_cast<double>(alphabet.size()) + 1.0);

  std::vector<std::optional<double>> costs;
  costs.reserve(sub.traces.size());
  std::size_t fitting = 0;
  for (const auto& t : sub.traces) {
    costs.push_back(model_cost(t.activities, model));
    if (costs.back()) ++fitting;
  }

  ERScore score;
  score.traces = sub.traces.size();
  score.fitting = fitting;
  score.fitting_ratio = static_cast<double>(fitting) / static_cast<double>(score.traces);
  const double rho = score.fitting_ratio;
  const double fit_selector = fitting > 0 ? -std::log2(rho) : 0.0;
  const double miss_selector = fitting < score.traces ? -std::log2(1.0 - rho) : 0.0;

  double total = 0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (costs[i]) {
      total += fit_selector + *costs[i];
    } else {
      const double n = static_cast<double>(sub.traces[i].activities.size());
      total += miss_selector + (n + 1.0) * background_symbol_bits;
    }
  }
  // -log2(1) yields -0.0; keep the result non-negative in print as well.
  score.er_bits = std::max(0.0, total / static_cast<double>(score.traces));
  return score;
}

namespace {

void finish(ERResult& r) {
  if (r.windows.empty()) fail(Errc::EmptySublog, "no test window contains any trace");
  std::vector<double> bits;
  double rho = 0;
  for (const auto& w : r.windows) {
    bits.push_back(w.score.er_bits);
    rho += w.score.fitting_ratio;
  }
  r.er = aggregate(bits);
  r.mean_fitting_ratio = rho / static_cast<double>(r.windows.size());
}

template <typename DfgForWindow>
ERResult score_test_windows(const DFPanel& panel, const EventLog& log, DfgForWindow&& dfg_for) {
  const auto& spec = panel.windows();
  const Split& split = panel.split();
  auto sublogs = all_sublogs(log, spec);
  ERResult r;
  for (std::size_t w = split.val_end; w < panel.length(); ++w) {
    if (sublogs[w].traces.empty()) {
      r.empty_windows.push_back(w);
      continue;
    }
    r.windows.push_back({w, window_label(spec, w), entropic_relevance(sublogs[w], dfg_for(w, sublogs))});
  }
  finish(r);
  return r;
}

}  // namespace

ERResult er_over_test(const DFPanel& panel, const ForecastSet& fs, const EventLog& log, const EROptions& opts,
                      const std::string& dataset) {
  ERResult r = score_test_windows(panel, log, [&](std::size_t w, const auto&) {
    return assemble_dfg(fs, panel.vocabulary(), w, opts.rounding, opts.tau);
  });
  r.model = fs.model();
  r.dataset = dataset;
  return r;
}

ERResult er_truth(const DFPanel& panel, const EventLog& log, const std::string& dataset) {
  ERResult r = score_test_windows(panel, log, [](std::size_t w, const std::vector<SublogTraces>& subs) {
    return discover_dfg(subs[w]);
  });
  r.model = "truth";
  r.dataset = dataset;
  return r;
}

ERResult er_training(const DFPanel& panel, const EventLog& log, const std::string& dataset) {
  std::optional<WeightedDFG> training;
  ERResult r = score_test_windows(panel, log, [&](std::size_t, const std::vector<SublogTraces>& subs) {
    if (!training) {
      std::vector<ClippedTrace> traces;
      for (std::size_t w = 0; w < panel.split().train_end; ++w) {
        traces.insert(traces.end(), subs[w].traces.begin(), subs[w].traces.end());
      }
      training = discover_dfg(traces);
    }
    return *training;
  });
  r.model = "training";
  r.dataset = dataset;
  return r;
}

void write_er_header(std::ostream& out) {
  csv::write_row(out, {"model", "dataset", "window_start", "er_bits", "fitting_ratio"});
}

void write_er_rows(std::ostream& out, const ERResult& result) {
  for (const auto& w : result.windows) {
    csv::write_row(out, {result.model, result.dataset, w.window_start, format_double(w.score.er_bits),
                         format_double(w.score.fitting_ratio)});
  }
  std::vector<double> rhos;
  for (const auto& w : result.windows) rhos.push_back(w.score.fitting_ratio);
  const Aggregate rho = aggregate(rhos);
  csv::write_row(out, {result.model, result.dataset, "mean", format_double(result.er.mean),
                       format_double(result.mean_fitting_ratio)});
  csv::write_row(out, {result.model, result.dataset, "std", format_double(result.er.std), format_double(rho.std)});
}

}  // namespace pmf
