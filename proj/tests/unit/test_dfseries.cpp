#include <doctest.h>

#include <random>
#include <sstream>

#include "common/error.hpp"
#include "dfseries/df_panel.hpp"
#include "synth.hpp"

using namespace pmf;
using pmf::testing::at;
using pmf::testing::ev;

namespace {

std::int64_t count(const DFPanel& p, std::size_t t, const std::string& key) {
  const auto d = p.find(DFKey::parse(key));
  return d == DFPanel::npos ? 0 : p.at(t, d);
}

std::int64_t row_sum(const DFPanel& p, std::size_t t) {
  std::int64_t s = 0;
  for (std::size_t d = 0; d < p.series_count(); ++d) s += p.at(t, d);
  return s;
}

const EventLog kOneCase({ev("c", "a", at(0, 9)), ev("c", "b", at(0, 10)), ev("c", "c", at(1, 9))});

}  // namespace

TEST_CASE("window partition") {
  const EventLog log({ev("x", "a", at(0, 5)), ev("y", "a", at(2, 17))});
  const auto spec = partition_windows(log);
  CHECK(spec.count == 3);
  CHECK(spec.origin == at(0));
  CHECK(partition_windows(EventLog({ev("x", "a", at(4, 12))})).count == 1);
  CHECK(spec.index_of(at(2, 23, 59)) == 2);
  CHECK_THROWS_AS(spec.index_of(at(3)), Error);
  CHECK(partition_windows(log, std::chrono::hours(12)).count == 6);
}

TEST_CASE("case endpoints on: DF counted in the window of its second event") {
  const auto p = extract_df_counts(kOneCase, partition_windows(kOneCase));
  REQUIRE(p.length() == 2);
  CHECK(count(p, 0, "<START>>>a") == 1);
  CHECK(count(p, 0, "a>>b") == 1);
  CHECK(row_sum(p, 0) == 2);
  CHECK(count(p, 1, "b>>c") == 1);
  CHECK(count(p, 1, "c>><END>") == 1);
  CHECK(row_sum(p, 1) == 2);
  CHECK(p.vocabulary().size() == 4);
  CHECK(std::is_sorted(p.vocabulary().begin(), p.vocabulary().end()));
}

TEST_CASE("endpoint mode none") {
  const auto p = extract_df_counts(kOneCase, partition_windows(kOneCase), EndpointMode::None);
  CHECK(p.series_count() == 2);
  CHECK(count(p, 0, "a>>b") == 1);
  CHECK(count(p, 1, "b>>c") == 1);
  CHECK(row_sum(p, 0) == 1);
  CHECK(row_sum(p, 1) == 1);
}

TEST_CASE("first-event assignment moves cross-window pairs back") {
  const auto p = extract_df_counts(kOneCase, partition_windows(kOneCase), EndpointMode::CaseEndpoints,
                                   WindowAssignment::FirstEvent);
  CHECK(count(p, 0, "b>>c") == 1);
  CHECK(count(p, 1, "b>>c") == 0);
}

TEST_CASE("empty windows keep an all-zero row") {
  const EventLog log({ev("x", "a", at(0, 1)), ev("x", "b", at(0, 2)), ev("y", "a", at(4, 1)), ev("y", "b", at(4, 2))});
  const auto p = extract_df_counts(log, partition_windows(log));
  REQUIRE(p.length() == 5);
  for (std::size_t t = 1; t < 4; ++t) CHECK(row_sum(p, t) == 0);
  CHECK(row_sum(p, 4) == 3);
}

TEST_CASE("chronological split") {
  CHECK(compute_split(307) == Split{184, 245});
  CHECK(compute_split(319) == Split{191, 254});
  CHECK(compute_split(10) == Split{6, 8});
  CHECK_THROWS_AS(compute_split(9), Error);
}

TEST_CASE("clipped sublog traces") {
  const EventLog log({ev("c", "a", at(0, 9)), ev("c", "b", at(1, 9)), ev("c", "c", at(1, 10)), ev("d", "x", at(1, 3)),
                      ev("d", "y", at(1, 4))});
  const auto spec = partition_windows(log);
  const auto sub = sublog_traces(log, spec, 1);
  REQUIRE(sub.traces.size() == 2);
  CHECK(sub.traces[0] == ClippedTrace{"c", {"b", "c"}, false, true});
  CHECK(sub.traces[1] == ClippedTrace{"d", {"x", "y"}, true, true});
  const auto all = all_sublogs(log, spec);
  REQUIRE(all.size() == 2);
  CHECK(all[1].traces == sub.traces);
  CHECK(all[0].traces.size() == 1);
  CHECK(all[0].traces[0] == ClippedTrace{"c", {"a"}, true, false});

  const EventLog gap({ev("c", "a", at(0, 9)), ev("c", "b", at(2, 9))});
  CHECK(sublog_traces(gap, partition_windows(gap), 1).traces.empty());
}

TEST_CASE("conservation: window sums equal the whole-log DF count") {
  std::mt19937 rng(2024);
  for (int i = 0; i < 100; ++i) {
    const auto log = pmf::testing::random_log(rng);
    for (bool endpoints : {true, false}) {
      for (auto assign : {WindowAssignment::SecondEvent, WindowAssignment::FirstEvent}) {
        const auto p = extract_df_counts(log, partition_windows(log),
                                         endpoints ? EndpointMode::CaseEndpoints : EndpointMode::None, assign);
        const auto oracle = pmf::testing::brute_force_df(log, endpoints);
        REQUIRE(p.series_count() == oracle.size());
        for (std::size_t d = 0; d < p.series_count(); ++d) {
          std::int64_t total = 0;
          for (std::size_t t = 0; t < p.length(); ++t) total += p.at(t, d);
          CHECK(total == oracle.at(p.vocabulary()[d]));
        }
      }
    }
  }
}

TEST_CASE("DF keys") {
  for (const char* text : {"a>>b", "<START>>>a", "a>><END>", "x y>>z-w"}) {
    CHECK(DFKey::parse(text).str() == text);
  }
  CHECK(DFKey::parse("<START>>>a").from == "<START>");
  CHECK(DFKey::parse("a>><END>").to == "<END>");
  CHECK_THROWS_AS(DFKey::parse("ab"), Error);
  CHECK_THROWS_AS(DFKey::parse("<END>>>a"), Error);
  CHECK_THROWS_AS(DFKey::parse("a>><START>"), Error);
  CHECK_THROWS_AS(DFKey::parse("<START>>><END>"), Error);
}

TEST_CASE("panel invariants are enforced") {
  const WindowSpec spec{at(0), kDay, 2};
  CHECK_THROWS_AS(DFPanel(spec, {{"a", "b"}}, {1}), Error);
  CHECK_THROWS_AS(DFPanel(spec, {{"a", "b"}}, {0, 0}), Error);
  CHECK_THROWS_AS(DFPanel(spec, {{"a", "b"}}, {-1, 2}), Error);
  CHECK_THROWS_AS(DFPanel(spec, {{"b", "c"}, {"a", "b"}}, {1, 1, 1, 1}), Error);
  DFPanel p(spec, {{"a", "b"}}, {1, 0});
  CHECK_FALSE(p.has_split());
  CHECK_THROWS_AS(p.split(), Error);
  CHECK_THROWS_AS(p.set_split({1, 1}), Error);
}

TEST_CASE("panel csv round-trips") {
  std::mt19937 rng(5);
  for (int i = 0; i < 30; ++i) {
    const auto log = pmf::testing::random_log(rng, 50, 8, 30);
    auto p = extract_df_counts(log, partition_windows(log));
    if (p.length() >= 10) p = split_panel(std::move(p));
    std::stringstream s;
    write_panel_csv(s, p);
    const auto back = read_panel_csv(s);
    CHECK(back == p);
  }
  const EventLog hourly({ev("x", "a", at(0, 1)), ev("x", "b", at(0, 5))});
  const auto p = extract_df_counts(hourly, partition_windows(hourly, std::chrono::hours(1)));
  std::stringstream s;
  write_panel_csv(s, p);
  CHECK(s.str().find("2024-01-01T01:00:00") != std::string::npos);
  CHECK(read_panel_csv(s) == p);
}

TEST_CASE("panel csv header") {
  std::stringstream s;
  write_panel_csv(s, extract_df_counts(kOneCase, partition_windows(kOneCase)));
  std::string header;
  std::getline(s, header);
  CHECK(header == "date,<START>>>a,a>>b,b>>c,c>><END>");
  std::string row;
  std::getline(s, row);
  CHECK(row == "2024-01-01,1,1,0,0");
}
