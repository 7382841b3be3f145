#include "odbguard/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "odbguard/error.hpp"

namespace odbguard {

namespace {

constexpr double kOverlapEps = 1e-9;

}  // namespace

void PreprocessConfig::validate() const {
  if (!(window_s > 0.0) || !std::isfinite(window_s)) throw UsageError("window_s must be > 0");
  if (min_samples_per_window < 1) throw UsageError("min_samples_per_window must be >= 1");
}

std::vector<SpeedVariation> derive_speed_variation(const std::vector<SpeedSample>& speed,
                                                   const PreprocessConfig& cfg) {
  cfg.validate();
  std::vector<SpeedVariation> out;
  if (speed.size() < 2) return out;
  out.reserve(speed.size() - 1);
  for (std::size_t i = 1; i < speed.size(); ++i) {
    const double dt = speed[i].t - speed[i - 1].t;
    if (dt == 0.0) {
      throw UsageError("zero time gap between speed samples at t=" + std::to_string(speed[i].t));
    }
    if (dt < 0.0) throw UsageError("speed timestamps decrease at t=" + std::to_string(speed[i].t));
    const double y = (speed[i].v_kmh - speed[i - 1].v_kmh) * PreprocessConfig::kSpeedUnitFactor / dt;
    out.push_back({speed[i - 1].t, speed[i].t, y, i});
  }
  return out;
}

std::vector<AccelWindow> average_accel_windows(const std::vector<AccelSample>& accel,
                                               const PreprocessConfig& cfg) {
  cfg.validate();
  std::vector<AccelWindow> windows;
  if (accel.empty()) return windows;
  const auto last = static_cast<std::int64_t>(std::floor(accel.back().t / cfg.window_s));
  windows.resize(static_cast<std::size_t>(last + 1));
  for (std::int64_t k = 0; k <= last; ++k) windows[static_cast<std::size_t>(k)].index = k;

  double prev_t = -1.0;
  for (const auto& s : accel) {
    if (!(s.t > prev_t)) throw UsageError("accel timestamps not strictly increasing at t=" + std::to_string(s.t));
    prev_t = s.t;
    if (s.t < 0.0) continue;
    auto& w = windows[static_cast<std::size_t>(std::floor(s.t / cfg.window_s))];
    w.x[0] += s.ax;
    w.x[1] += s.ay;
    w.x[2] += s.az;
    ++w.n_samples;
  }
  for (auto& w : windows) {
    if (w.n_samples > 0) {
      for (auto& c : w.x) c /= w.n_samples;
    }
    w.missing = w.n_samples < cfg.min_samples_per_window;
  }
  return windows;
}

AlignResult align_records(const std::vector<SpeedVariation>& variations,
                          const std::vector<AccelWindow>& windows, const PreprocessConfig& cfg,
                          const std::optional<std::vector<bool>>& speed_labels) {
  cfg.validate();
  AlignResult result;
  const auto n_windows = static_cast<std::int64_t>(windows.size());
  for (const auto& v : variations) {
    const auto first = static_cast<std::int64_t>(std::floor(v.t_start / cfg.window_s));
    const auto last = static_cast<std::int64_t>(std::ceil(v.t_end / cfg.window_s)) - 1;
    std::array<double, 3> acc{};
    double weight = 0.0;
    bool complete = true;
    for (std::int64_t k = first; k <= last; ++k) {
      const double lo = std::max(v.t_start, static_cast<double>(k) * cfg.window_s);
      const double hi = std::min(v.t_end, static_cast<double>(k + 1) * cfg.window_s);
      const double overlap = hi - lo;
      if (overlap <= kOverlapEps) continue;
      if (k < 0 || k >= n_windows || windows[static_cast<std::size_t>(k)].missing) {
        complete = false;
        break;
      }
      const auto& w = windows[static_cast<std::size_t>(k)];
      for (int c = 0; c < 3; ++c) acc[c] += overlap * w.x[c];
      weight += overlap;
    }
    if (!complete || weight <= 0.0) {
      ++result.dropped;
      continue;
    }
    AlignedRecord r;
    r.t = std::llround(v.t_end);
    r.y = v.y;
    for (int c = 0; c < 3; ++c) r.x[c] = acc[c] / weight;
    if (speed_labels) {
      const auto& labels = *speed_labels;
      if (v.index >= labels.size()) throw UsageError("speed label index out of range");
      r.label = labels[v.index] || (v.index > 0 && labels[v.index - 1]);
    }
    result.records.push_back(r);
  }
  return result;
}

AlignResult preprocess_trip(const RawTrip& trip, const PreprocessConfig& cfg) {
  const auto variations = derive_speed_variation(trip.speed_series, cfg);
  const auto windows = average_accel_windows(trip.accel_series, cfg);
  return align_records(variations, windows, cfg, trip.truth_labels);
}

}  // namespace odbguard
