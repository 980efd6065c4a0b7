#include "process_eval/dfg.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/numfmt.hpp"

namespace pmf {

void WeightedDFG::add(const DFKey& key, double weight) {
  key.check();
  if (!(weight >= 0.0) || !std::isfinite(weight)) fail(Errc::InvalidArgument, "DFG edge weight must be >= 0");
  edges[key] += weight;
}

std::set<std::string> WeightedDFG::nodes() const {
  std::set<std::string> out;
  for (const auto& [key, w] : edges) {
    out.insert(key.from);
    out.insert(key.to);
  }
  return out;
}

double StochasticDFG::probability(const std::string& from, const std::string& to) const {
  auto row = transitions.find(from);
  if (row == transitions.end()) return 0.0;
  auto cell = row->second.find(to);
  return cell == row->second.end() ? 0.0 : cell->second;
}

bool select_origin(const ForecastSet& fs, std::size_t window, std::size_t& origin, int& step) {
  if (fs.origins().empty()) return false;
  const std::size_t first = fs.origins().front();
  const std::size_t last = fs.origins().back();
  const auto h = static_cast<std::size_t>(fs.horizon());
  if (window <= first) return false;
  std::size_t o = first + (window - first - 1) / h * h;
  if (o > last) o = last;
  if (window - o > h) return false;
  origin = o;
  step = static_cast<int>(window - o);
  return true;
}

WeightedDFG assemble_dfg(const ForecastSet& fs, const std::vector<DFKey>& vocabulary, std::size_t window,
                         RoundingMode mode, double tau) {
  std::size_t origin = 0;
  int step = 0;
  const bool covered = select_origin(fs, window, origin, step);

  std::map<DFKey, std::size_t> index;
  for (std::size_t d = 0; d < fs.keys().size(); ++d) index.emplace(fs.keys()[d], d);

  WeightedDFG g;
  for (const auto& key : vocabulary) {
    std::optional<double> p;
    if (auto it = index.find(key); covered && it != index.end()) p = fs.get(it->second, origin, step);
    if (!p) {
      fail(Errc::MissingPrediction,
           "no prediction for " + key.str() + " at window " + std::to_string(window));
    }
    double weight = std::max(0.0, *p);
    if (mode == RoundingMode::RoundClip) {
      weight = std::round(weight);
      if (weight < tau) continue;
    } else if (weight <= 0.0) {
      continue;
    }
    g.add(key, weight);
  }
  return g;
}

WeightedDFG discover_dfg(const std::vector<ClippedTrace>& traces) {
  WeightedDFG g;
  const std::string start(kStartLabel);
  const std::string end(kEndLabel);
  for (const auto& t : traces) {
    if (t.activities.empty()) continue;
    g.add({start, t.activities.front()}, 1.0);
    for (std::size_t i = 1; i < t.activities.size(); ++i) g.add({t.activities[i - 1], t.activities[i]}, 1.0);
    g.add({t.activities.back(), end}, 1.0);
  }
  return g;
}

WeightedDFG discover_dfg(const SublogTraces& sub) { return discover_dfg(sub.traces); }

StochasticDFG normalize(const WeightedDFG& g) {
  std::map<std::string, double> out_mass;
  for (const auto& [key, w] : g.edges) out_mass[key.from] += w;
  StochasticDFG s;
  for (const auto& [key, w] : g.edges) {
    const double total = out_mass[key.from];
    if (total <= 0.0 || w <= 0.0) continue;
    s.transitions[key.from][key.to] = w / total;
  }
  return s;
}

namespace {

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

void write_dot(std::ostream& out, const WeightedDFG& g, const std::string& name) {
  out << "digraph " << dot_quote(name) << " {\n";
  for (const auto& node : g.nodes()) {
    out << "  " << dot_quote(node);
    if (node == kStartLabel || node == kEndLabel) out << " [shape=circle]";
    out << ";\n";
  }
  for (const auto& [key, w] : g.edges) {
    out << "  " << dot_quote(key.from) << " -> " << dot_quote(key.to) << " [label=" << dot_quote(format_double(w))
        << "];\n";
  }
  out << "}\n";
}

}  // namespace pmf
