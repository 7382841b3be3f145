#include "odbguard/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>

#include "json.hpp"
#include "odbguard/error.hpp"

namespace odbguard {

namespace {

void check_level(double level) {
  if (!(level > 0.0 && level < 1.0)) throw UsageError("credible level must lie in (0, 1)");
}

void check_count(std::size_t count) {
  if (count < kMinPredictiveSamples) {
    throw UsageError("need at least " + std::to_string(kMinPredictiveSamples) +
                     " predictive samples, got " + std::to_string(count));
  }
}

// Tail count below which a record is flagged: S (1 - L) / 2.
double tail_cutoff(std::size_t size, double level) {
  return static_cast<double>(size) * (1.0 - level) / 2.0;
}

}  // namespace

PosteriorPredictive::PosteriorPredictive(const PosteriorSamples& samples) {
  if (samples.draws.empty()) throw UsageError("posterior has no draws");
  draws_.reserve(samples.draws.size());
  for (const auto& d : samples.draws) {
    if (d.components.empty()) throw UsageError("posterior draw without components");
    Draw draw;
    double acc = 0.0;
    for (const auto& c : d.components) {
      acc += c.pi;
      draw.cdf.push_back(acc);
      draw.beta.push_back(c.beta);
      draw.sigma.push_back(std::sqrt(c.sigma2));
    }
    if (!(acc > 0.0)) throw UsageError("posterior draw with zero total weight");
    for (auto& v : draw.cdf) v /= acc;
    draw.cdf.back() = 1.0;
    draws_.push_back(std::move(draw));
  }
}

std::vector<double> PosteriorPredictive::sample(const std::array<double, 3>& x, std::size_t count,
                                                Rng& rng) const {
  std::vector<double> out;
  out.reserve(count);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  const auto n_draws = static_cast<double>(draws_.size());
  for (std::size_t s = 0; s < count; ++s) {
    const auto d = std::min(draws_.size() - 1, static_cast<std::size_t>(rng.uniform() * n_draws));
    const auto& draw = draws_[d];
    const double u = rng.uniform();
    const auto j = static_cast<std::size_t>(
        std::upper_bound(draw.cdf.begin(), draw.cdf.end(), u) - draw.cdf.begin());
    const auto k = std::min(j, draw.cdf.size() - 1);
    const auto& b = draw.beta[k];
    const double mean = x[0] * b[0] + x[1] * b[1] + x[2] * b[2];
    out.push_back(mean + draw.sigma[k] * std_normal(rng));
  }
  return out;
}

PredictiveSampleSet::PredictiveSampleSet(std::vector<double> samples) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw UsageError("empty predictive sample set");
  std::sort(sorted_.begin(), sorted_.end());
}

std::pair<double, double> PredictiveSampleSet::range(double level) const {
  check_level(level);
  const double cutoff = tail_cutoff(sorted_.size(), level);
  const auto k = static_cast<std::size_t>(std::max(0.0, std::ceil(cutoff) - 1.0));
  return {sorted_[k], sorted_[sorted_.size() - 1 - k]};
}

double PredictiveSampleSet::score(double y) const {
  const auto le = static_cast<double>(std::upper_bound(sorted_.begin(), sorted_.end(), y) - sorted_.begin());
  const auto ge = static_cast<double>(sorted_.end() - std::lower_bound(sorted_.begin(), sorted_.end(), y));
  const double size = static_cast<double>(sorted_.size());
  return std::min({le, ge, size / 2.0}) / size;
}

bool PredictiveSampleSet::flagged(double y, double level) const {
  const auto [a, b] = range(level);
  return y < a || y > b;
}

std::vector<double> predictive_samples(const std::array<double, 3>& x,
                                       const PosteriorSamples& samples, std::size_t count, Rng& rng) {
  check_count(count);
  return PosteriorPredictive(samples).sample(x, count, rng);
}

PredictedRange predicted_range(const std::array<double, 3>& x, const PosteriorSamples& samples,
                               double level, std::size_t count, Rng& rng) {
  check_level(level);
  const PredictiveSampleSet set(predictive_samples(x, samples, count, rng));
  const auto [a, b] = set.range(level);
  PredictedRange r;
  r.a = a;
  r.b = b;
  r.level = level;
  return r;
}

Classification classify(const AlignedRecord& record, const PosteriorPredictive& model,
                        double level, std::size_t count, Rng& rng) {
  check_level(level);
  check_count(count);
  const PredictiveSampleSet set(model.sample(record.x, count, rng));
  Classification c;
  const auto [a, b] = set.range(level);
  c.range = {record.t, a, b, level, set.score(record.y)};
  c.score = c.range.score;
  c.flagged = record.y < a || record.y > b;
  return c;
}

Classification classify(const AlignedRecord& record, const PosteriorSamples& samples, double level,
                        std::size_t count, Rng& rng) {
  return classify(record, PosteriorPredictive(samples), level, count, rng);
}

Rng record_rng(std::uint64_t seed, std::int64_t t) {
  return Rng::substream(seed, 0x5eed000000000000ULL ^ static_cast<std::uint64_t>(t));
}

DetectionReport detect_trip(std::span<const AlignedRecord> records, const PosteriorPredictive& model,
                            double level, std::size_t count, std::uint64_t seed) {
  check_level(level);
  check_count(count);
  DetectionReport report;
  report.level = level;
  report.entries.reserve(records.size());
  for (const auto& r : records) {
    Rng rng = record_rng(seed, r.t);
    const auto c = classify(r, model, level, count, rng);
    report.entries.push_back({r.t, r.y, c.range, c.flagged});
    if (c.flagged) ++report.n_flagged;
  }
  return report;
}

DetectionReport detect_trip(std::span<const AlignedRecord> records, const PosteriorSamples& samples,
                            double level, std::size_t count, std::uint64_t seed) {
  if (records.empty()) {
    check_level(level);
    DetectionReport empty;
    empty.level = level;
    return empty;
  }
  return detect_trip(records, PosteriorPredictive(samples), level, count, seed);
}

void write_report(const DetectionReport& report, std::ostream& out) {
  for (const auto& e : report.entries) {
    nlohmann::json j = {{"t", e.t},          {"y", e.y},
                        {"a", e.range.a},    {"b", e.range.b},
                        {"score", e.range.score}, {"flagged", e.flagged},
                        {"level", e.range.level}};
    out << j.dump() << '\n';
  }
}

void write_report(const DetectionReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_report(report, out);
  if (!out) throw IoError("write to " + path.string() + " failed");
}

DetectionReport read_report(std::istream& in) {
  DetectionReport report;
  std::string line;
  std::size_t line_no = 0;
  bool level_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DetectionEntry e;
      e.t = j.at("t").get<std::int64_t>();
      e.y = j.at("y").get<double>();
      e.range.t = e.t;
      e.range.a = j.at("a").get<double>();
      e.range.b = j.at("b").get<double>();
      e.range.score = j.at("score").get<double>();
      e.range.level = j.value("level", 0.95);
      e.flagged = j.at("flagged").get<bool>();
      if (!level_seen) {
        report.level = e.range.level;
        level_seen = true;
      }
      if (e.flagged) ++report.n_flagged;
      report.entries.push_back(e);
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(ex.what(), line_no);
    }
  }
  return report;
}

DetectionReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  try {
    return read_report(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace odbguard
