#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "odbguard/error.hpp"
#include "odbguard/eval.hpp"

using namespace odbguard;

namespace {

// Probability that a manipulated record scores below a clean one, ties
// counted half. Equals the trapezoid AUC of the threshold sweep.
double rank_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      pairs += 1.0;
      if (scores[i] < scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

std::vector<bool> random_bits(Rng& rng, std::size_t n, double p) {
  std::vector<bool> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = rng.uniform() < p;
  return v;
}

}  // namespace

TEST_CASE("confusion: counts and rates by brute force") {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = static_cast<std::size_t>(rng() % 200);
    const auto flags = random_bits(rng, n, 0.3);
    const auto labels = random_bits(rng, n, fixtures::uniform(rng, 0.0, 1.0));
    const auto m = confusion(flags, labels);
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (flags[i] && labels[i]) ++tp;
      if (flags[i] && !labels[i]) ++fp;
      if (!flags[i] && !labels[i]) ++tn;
      if (!flags[i] && labels[i]) ++fn;
    }
    CHECK(m.tp == tp);
    CHECK(m.fp == fp);
    CHECK(m.tn == tn);
    CHECK(m.fn == fn);
    CHECK(m.fpr.has_value() == (fp + tn > 0));
    CHECK(m.fnr.has_value() == (fn + tp > 0));
    if (m.fpr) CHECK(*m.fpr == doctest::Approx(double(fp) / double(fp + tn)));
    if (m.fnr) {
      CHECK(*m.fnr == doctest::Approx(double(fn) / double(fn + tp)));
      CHECK(*m.tpr + *m.fnr == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("confusion: absent rates and length mismatch") {
  const auto clean = confusion({true, false, false}, {false, false, false});
  CHECK(clean.fpr == doctest::Approx(1.0 / 3.0));
  CHECK_FALSE(clean.fnr.has_value());
  CHECK_FALSE(clean.tpr.has_value());
  const auto empty = confusion({}, {});
  CHECK_FALSE(empty.fpr.has_value());
  CHECK_THROWS_AS(confusion({true}, {}), UsageError);
}

TEST_CASE("roc: separation extremes") {
  const std::vector<bool> labels = {true, true, false, false, false};
  const auto perfect = roc_from_scores({0.0, 0.01, 0.3, 0.4, 0.5}, labels);
  REQUIRE(perfect.auc.has_value());
  CHECK(*perfect.auc == doctest::Approx(1.0));
  const auto inverted = roc_from_scores({0.5, 0.4, 0.0, 0.01, 0.3}, labels);
  CHECK(*inverted.auc == doctest::Approx(0.0));
  const auto tied = roc_from_scores({0.2, 0.2, 0.2, 0.2, 0.2}, labels);
  CHECK(*tied.auc == doctest::Approx(0.5));
  CHECK(tied.roc.size() == 2);
}

TEST_CASE("roc: binary scores give three points") {
  const auto m = roc_from_scores({0.0, 0.5, 0.0, 0.5, 0.5, 0.0}, {true, true, false, false, false, true});
  REQUIRE(m.roc.size() == 3);
  CHECK(m.roc[0] == RocPoint{1.0, 0.0, 0.0});
  CHECK(m.roc[1].level == 1.0);
  CHECK(m.roc[1].tpr == doctest::Approx(2.0 / 3.0));
  CHECK(m.roc[1].fpr == doctest::Approx(1.0 / 3.0));
  CHECK(m.roc[2].level == 0.0);
  CHECK(m.roc[2].fpr == 1.0);
  CHECK(m.roc[2].tpr == 1.0);
}

TEST_CASE("roc: trapezoid area equals the rank statistic") {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto n = 2 + static_cast<std::size_t>(rng() % 150);
    std::vector<double> scores(n);
    // Scores on the same grid detection produces, so ties are frequent.
    for (auto& s : scores) s = static_cast<double>(rng() % 40) / 80.0;
    auto labels = random_bits(rng, n, 0.4);
    labels[0] = true;
    labels[1] = false;
    const auto m = roc_from_scores(scores, labels);
    REQUIRE(m.auc.has_value());
    CHECK(*m.auc == doctest::Approx(rank_auc(scores, labels)).epsilon(1e-12));
    for (std::size_t i = 1; i < m.roc.size(); ++i) {
      CHECK(m.roc[i].fpr >= m.roc[i - 1].fpr);
      CHECK(m.roc[i].tpr >= m.roc[i - 1].tpr);
      CHECK(m.roc[i].level <= m.roc[i - 1].level);
    }
    CHECK(m.roc.back().fpr == 1.0);
    CHECK(m.roc.back().tpr == 1.0);
  }
}

TEST_CASE("roc: invariant under monotone transforms of the score") {
  Rng rng(3);
  std::vector<double> scores(500);
  for (auto& s : scores) s = fixtures::uniform(rng, 0.0, 0.5);
  auto labels = random_bits(rng, 500, 0.3);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i]) scores[i] *= 0.6;
  }
  std::vector<double> warped(scores.size());
  std::transform(scores.begin(), scores.end(), warped.begin(), [](double s) { return std::exp(3.0 * s) - 7.0; });
  CHECK(*roc_from_scores(scores, labels).auc == doctest::Approx(*roc_from_scores(warped, labels).auc));
}

TEST_CASE("roc: uninformative scores sit near one half") {
  Rng rng(4);
  std::vector<double> scores(1000);
  for (auto& s : scores) s = fixtures::uniform(rng, 0.0, 0.5);
  const auto labels = random_bits(rng, 1000, 0.5);
  CHECK(std::abs(*roc_from_scores(scores, labels).auc - 0.5) < 0.05);
}

TEST_CASE("roc: a single class has no curve") {
  const auto m = roc_from_scores({0.1, 0.2}, {false, false});
  CHECK(m.roc.empty());
  CHECK_FALSE(m.auc.has_value());
  CHECK_FALSE(roc_from_scores({0.1}, {true}).auc.has_value());
  CHECK_THROWS_AS(roc_from_scores({0.1}, {}), UsageError);
}

TEST_CASE("events: worked examples") {
  // Labels at 10..12, flags at 10 and 11: one detected event.
  std::vector<double> t = {8, 9, 10, 11, 12, 13, 14};
  auto ev = group_events(t, {false, false, true, true, false, false, false},
                         {false, false, true, true, true, false, false});
  REQUIRE(ev.events.size() == 1);
  CHECK(ev.true_events == 1);
  CHECK(ev.detected_true_events == 1);
  CHECK(ev.events[0].start_t == 10.0);
  CHECK(ev.events[0].end_t == 12.0);
  CHECK(ev.events[0].indices == std::vector<std::size_t>{2, 3, 4});
  CHECK(*ev.event_fnr == 0.0);

  // Isolated false alarms at 5 and 300.
  ev = group_events({5, 6, 300}, {true, false, true}, {false, false, false});
  CHECK(ev.events.size() == 2);
  CHECK(ev.false_events == 2);
  CHECK(ev.true_events == 0);
  CHECK_FALSE(ev.event_fnr.has_value());

  ev = group_events({1, 2, 3}, {false, false, false}, {false, false, false});
  CHECK(ev.events.empty());
  CHECK_FALSE(ev.event_fnr.has_value());
}

TEST_CASE("events: gaps, time reversal and misses") {
  // Gap of exactly 2 s merges, 2.5 s splits.
  auto ev = group_events({0, 2, 4.5}, {true, true, true}, {false, false, false});
  CHECK(ev.events.size() == 2);
  // A new trip restarting the clock starts a new event.
  ev = group_events({100, 101, 0, 1}, {true, true, true, true}, {true, true, false, false});
  REQUIRE(ev.events.size() == 2);
  CHECK(ev.true_events == 1);
  CHECK(ev.false_events == 1);
  // A labelled run with no flag is a missed event.
  ev = group_events({0, 1, 50, 51}, {false, false, true, false}, {true, true, false, true});
  CHECK(ev.true_events == 2);
  CHECK(ev.detected_true_events == 1);
  CHECK(*ev.event_fnr == doctest::Approx(0.5));
  ev = group_events({0, 3}, {true, true}, {false, false}, 5.0);
  CHECK(ev.events.size() == 1);
  CHECK_THROWS_AS(group_events({0}, {}, {false}), UsageError);
}

TEST_CASE("events: flagging every labelled record detects every event") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(rng() % 300);
    std::vector<double> t(n);
    double now = 0.0;
    for (auto& x : t) x = now += fixtures::uniform(rng, 0.1, 4.0);
    const auto labels = random_bits(rng, n, 0.2);
    auto flags = random_bits(rng, n, 0.1);
    for (std::size_t i = 0; i < n; ++i) flags[i] = flags[i] || labels[i];
    const auto ev = group_events(t, flags, labels);
    CHECK(ev.detected_true_events == ev.true_events);
    std::size_t members = 0;
    for (const auto& e : ev.events) {
      members += e.indices.size();
      for (std::size_t k = 1; k < e.indices.size(); ++k) {
        CHECK(t[e.indices[k]] - t[e.indices[k - 1]] <= 2.0);
      }
    }
    CHECK(members == static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true)));
  }
}

TEST_CASE("writers: metrics JSON and ROC CSV") {
  auto m = roc_from_scores({0.0, 0.5, 0.2}, {true, false, false});
  const auto point = confusion({true, false, true}, {true, false, false});
  m.tp = point.tp;
  m.fp = point.fp;
  m.tn = point.tn;
  m.fn = point.fn;
  m.fpr = point.fpr;
  m.fnr = point.fnr;
  m.tpr = point.tpr;
  const auto ev = group_events({0, 1, 2}, {true, false, true}, {true, false, false});
  std::stringstream ss;
  write_metrics(m, ev, ss);
  const auto j = nlohmann::json::parse(ss.str());
  CHECK(j.at("tp") == 1);
  CHECK(j.at("fp") == 1);
  CHECK(j.at("fpr").get<double>() == doctest::Approx(0.5));
  CHECK(j.at("auc").get<double>() == doctest::Approx(1.0));
  CHECK(j.at("roc").size() == m.roc.size());
  CHECK(j.at("events").at("true_events") == 1);
  CHECK(j.at("events").at("event_fnr").get<double>() == 0.0);

  std::stringstream none;
  write_metrics(Metrics{}, EventAnalysis{}, none);
  const auto k = nlohmann::json::parse(none.str());
  CHECK(k.at("auc").is_null());
  CHECK(k.at("fnr").is_null());
  CHECK(k.at("events").at("event_fnr").is_null());

  std::stringstream csv;
  write_roc_csv(m.roc, csv);
  std::string header, first;
  std::getline(csv, header);
  std::getline(csv, first);
  CHECK(header == "level,fpr,tpr");
  CHECK(first == "1,0,0");
}
