#include "odbguard/eval.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <string>

#include "json.hpp"
#include "odbguard/error.hpp"
#include "text_format.hpp"

namespace odbguard {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

Metrics confusion(const std::vector<bool>& flags, const std::vector<bool>& labels) {
  if (flags.size() != labels.size()) {
    throw UsageError("flags and labels differ in length (" + std::to_string(flags.size()) + " vs " +
                     std::to_string(labels.size()) + ")");
  }
  Metrics m;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (labels[i]) {
      flags[i] ? ++m.tp : ++m.fn;
    } else {
      flags[i] ? ++m.fp : ++m.tn;
    }
  }
  m.fpr = ratio(m.fp, m.fp + m.tn);
  m.fnr = ratio(m.fn, m.fn + m.tp);
  m.tpr = ratio(m.tp, m.fn + m.tp);
  return m;
}

Metrics roc_from_scores(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) {
    throw UsageError("scores and labels differ in length (" + std::to_string(scores.size()) +
                     " vs " + std::to_string(labels.size()) + ")");
  }
  Metrics m;
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  const auto neg = labels.size() - pos;
  if (pos == 0 || neg == 0) return m;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return scores[l] < scores[r]; });

  m.roc.push_back({1.0, 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  double auc = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      labels[order[i]] ? ++tp : ++fp;
      ++i;
    }
    const RocPoint p{std::clamp(1.0 - 2.0 * threshold, 0.0, 1.0),
                     static_cast<double>(fp) / static_cast<double>(neg),
                     static_cast<double>(tp) / static_cast<double>(pos)};
    const auto& prev = m.roc.back();
    auc += (p.fpr - prev.fpr) * (p.tpr + prev.tpr) / 2.0;
    m.roc.push_back(p);
  }
  m.auc = auc;
  return m;
}

EventAnalysis group_events(const std::vector<double>& times, const std::vector<bool>& flags,
                           const std::vector<bool>& labels, double gap_s) {
  if (times.size() != flags.size() || times.size() != labels.size()) {
    throw UsageError("times, flags and labels must have equal length");
  }
  EventAnalysis out;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!flags[i] && !labels[i]) continue;
    // A backwards step in time (concatenated trips) also closes the event.
    const bool split = out.events.empty() || times[i] - out.events.back().end_t > gap_s ||
                       times[i] < out.events.back().end_t;
    if (split) {
      out.events.push_back({times[i], times[i], {}, false, false});
    }
    auto& ev = out.events.back();
    ev.end_t = times[i];
    ev.indices.push_back(i);
    ev.truth = ev.truth || labels[i];
    ev.detected = ev.detected || flags[i];
  }
  for (const auto& ev : out.events) {
    if (ev.truth) {
      ++out.true_events;
      if (ev.detected) ++out.detected_true_events;
    } else if (ev.detected) {
      ++out.false_events;
    }
  }
  out.event_fnr = ratio(out.true_events - out.detected_true_events, out.true_events);
  return out;
}

void write_metrics(const Metrics& point, const EventAnalysis& events, std::ostream& out) {
  nlohmann::json roc = nlohmann::json::array();
  for (const auto& p : point.roc) roc.push_back({{"level", p.level}, {"fpr", p.fpr}, {"tpr", p.tpr}});
  nlohmann::json j = {
      {"tp", point.tp},
      {"fp", point.fp},
      {"tn", point.tn},
      {"fn", point.fn},
      {"fpr", optional_json(point.fpr)},
      {"fnr", optional_json(point.fnr)},
      {"tpr", optional_json(point.tpr)},
      {"auc", optional_json(point.auc)},
      {"roc", roc},
      {"events",
       {{"count", events.events.size()},
        {"true_events", events.true_events},
        {"detected_true_events", events.detected_true_events},
        {"false_events", events.false_events},
        {"event_fnr", optional_json(events.event_fnr)}}},
  };
  out << j.dump(2) << '\n';
}

void write_roc_csv(const std::vector<RocPoint>& roc, std::ostream& out) {
  out << "level,fpr,tpr\n";
  for (const auto& p : roc) {
    out << detail::format_double(p.level) << ',' << detail::format_double(p.fpr) << ','
        << detail::format_double(p.tpr) << '\n';
  }
}

}  // namespace odbguard
