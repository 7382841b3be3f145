#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

namespace odbguard {

struct RocPoint {
  double level = 1.0;  ///< credible level at which this operating point is reached
  double fpr = 0.0;
  double tpr = 0.0;

  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

/// Rates are absent when their denominator is zero.
struct Metrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> fpr;
  std::optional<double> fnr;
  std::optional<double> tpr;
  std::vector<RocPoint> roc;
  std::optional<double> auc;
};

/// Point confusion counts. Throws UsageError on a length mismatch.
Metrics confusion(const std::vector<bool>& flags, const std::vector<bool>& labels);

/// ROC over every distinct score (lower = more anomalous); records at or
/// below a threshold are called manipulated. AUC by the trapezoid rule.
Metrics roc_from_scores(const std::vector<double>& scores, const std::vector<bool>& labels);

struct EventGroup {
  double start_t = 0.0;
  double end_t = 0.0;
  std::vector<std::size_t> indices;
  bool truth = false;     ///< some member is labelled manipulated
  bool detected = false;  ///< some member is flagged
};

struct EventAnalysis {
  std::vector<EventGroup> events;
  std::size_t true_events = 0;
  std::size_t detected_true_events = 0;
  std::size_t false_events = 0;  ///< flagged groups without any labelled member
  std::optional<double> event_fnr;
};

/// Merges labelled-or-flagged records whose timestamps are at most `gap_s`
/// apart into events. Records must be time-ordered.
EventAnalysis group_events(const std::vector<double>& times, const std::vector<bool>& flags,
                           const std::vector<bool>& labels, double gap_s = 2.0);

void write_metrics(const Metrics& point, const EventAnalysis& events, std::ostream& out);
void write_roc_csv(const std::vector<RocPoint>& roc, std::ostream& out);

}  // namespace odbguard
