#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "odbguard/model.hpp"
#include "odbguard/rng.hpp"
#include "odbguard/trace.hpp"

namespace odbguard {

/// Equal-tailed predictive interval for one record. `score` is the two-sided
/// empirical tail mass of the observed y (0 = far outside, 0.5 = median).
struct PredictedRange {
  std::int64_t t = 0;
  double a = 0.0;
  double b = 0.0;
  double level = 0.95;
  double score = 0.5;
};

/// Posterior predictive sampler, with the per-draw component CDFs
/// precomputed.
class PosteriorPredictive {
 public:
  explicit PosteriorPredictive(const PosteriorSamples& samples);

  /// `count` draws of y given x: a posterior draw uniformly, a component by
  /// its weight, then y ~ N(x' beta, sigma2).
  std::vector<double> sample(const std::array<double, 3>& x, std::size_t count, Rng& rng) const;

 private:
  struct Draw {
    std::vector<double> cdf;
    std::vector<std::array<double, 3>> beta;
    std::vector<double> sigma;
  };
  std::vector<Draw> draws_;
};

/// Sorted predictive sample set. Ranges and scores for any level come from
/// the same set, so intervals are nested and flags agree with scores:
/// flagged(y, L) == (score(y) < (1 - L) / 2) exactly.
class PredictiveSampleSet {
 public:
  explicit PredictiveSampleSet(std::vector<double> samples);

  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }

  /// Order statistics at ranks k and S-1-k with k = ceil(S (1 - L) / 2) - 1.
  std::pair<double, double> range(double level) const;
  /// min(#{s <= y}, #{s >= y}, S/2) / S
  double score(double y) const;
  bool flagged(double y, double level) const;

 private:
  std::vector<double> sorted_;
};

inline constexpr std::size_t kMinPredictiveSamples = 100;

std::vector<double> predictive_samples(const std::array<double, 3>& x,
                                       const PosteriorSamples& samples, std::size_t count, Rng& rng);

PredictedRange predicted_range(const std::array<double, 3>& x, const PosteriorSamples& samples,
                               double level, std::size_t count, Rng& rng);

struct Classification {
  bool flagged = false;
  double score = 0.5;
  PredictedRange range;
};

Classification classify(const AlignedRecord& record, const PosteriorSamples& samples, double level,
                        std::size_t count, Rng& rng);
Classification classify(const AlignedRecord& record, const PosteriorPredictive& model,
                        double level, std::size_t count, Rng& rng);

struct DetectionEntry {
  std::int64_t t = 0;
  double y = 0.0;
  PredictedRange range;
  bool flagged = false;
};

struct DetectionReport {
  std::vector<DetectionEntry> entries;
  double level = 0.95;
  std::size_t n_flagged = 0;
};

/// Classifies each record with its own generator, seeded from (seed, t).
DetectionReport detect_trip(std::span<const AlignedRecord> records, const PosteriorSamples& samples,
                            double level, std::size_t count, std::uint64_t seed);
DetectionReport detect_trip(std::span<const AlignedRecord> records,
                            const PosteriorPredictive& model, double level, std::size_t count,
                            std::uint64_t seed);

/// Generator used for the record at time `t`.
Rng record_rng(std::uint64_t seed, std::int64_t t);

// Report file: JSON lines {t, y, a, b, score, flagged}.

void write_report(const DetectionReport& report, std::ostream& out);
void write_report(const DetectionReport& report, const std::filesystem::path& path);
DetectionReport read_report(std::istream& in);
DetectionReport read_report(const std::filesystem::path& path);

}  // namespace odbguard
