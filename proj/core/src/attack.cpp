#include "odbguard/attack.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "odbguard/error.hpp"

namespace odbguard {

void FlattenConfig::validate() const {
  if (threshold_kmh_per_s < 1) throw UsageError("flatten threshold must be >= 1 km/h");
}

SpeedFlattener::SpeedFlattener(FlattenConfig cfg) : cfg_(cfg) { cfg_.validate(); }

int SpeedFlattener::feed(int raw_kmh) {
  int out = raw_kmh;
  if (prev_ && *prev_ - raw_kmh >= cfg_.threshold_kmh_per_s) {
    out = *prev_ - (cfg_.threshold_kmh_per_s - 1);
  }
  prev_ = out;
  return out;
}

FlattenResult flatten_attack(std::span<const int> raw_kmh, const FlattenConfig& cfg) {
  if (raw_kmh.empty()) throw UsageError("flatten_attack needs a non-empty stream");
  SpeedFlattener flattener(cfg);
  FlattenResult result;
  result.speeds.reserve(raw_kmh.size());
  result.labels.reserve(raw_kmh.size());
  for (int v : raw_kmh) {
    const int out = flattener.feed(v);
    result.speeds.push_back(out);
    result.labels.push_back(out != v);
  }
  return result;
}

RawTrip flatten_trip(const RawTrip& trip, const FlattenConfig& cfg) {
  validate(trip);
  RawTrip out = trip;
  if (trip.speed_series.empty()) return out;
  std::vector<int> raw;
  raw.reserve(trip.speed_series.size());
  for (const auto& s : trip.speed_series) raw.push_back(static_cast<int>(std::lround(s.v_kmh)));
  const auto flat = flatten_attack(raw, cfg);
  std::vector<bool> labels(trip.speed_series.size(), false);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.speed_series[i].v_kmh = flat.speeds[i];
    labels[i] = flat.labels[i] || (trip.truth_labels && (*trip.truth_labels)[i]);
  }
  out.truth_labels = std::move(labels);
  return out;
}

ResponseFilter flatten_filter(FlattenConfig cfg) {
  auto flattener = std::make_shared<SpeedFlattener>(cfg);
  return [flattener](const ObdRequest& req, const ObdResponse& genuine) {
    if (req.mode != obd::kModeCurrentData || req.pid != obd::kPidSpeed || genuine.negative() ||
        genuine.payload.size() != 1) {
      return genuine;
    }
    ObdResponse forged = genuine;
    forged.payload[0] = static_cast<std::uint8_t>(flattener->feed(genuine.payload[0]));
    return forged;
  };
}

RawTrip replay_attack(const RawTrip& live, const ReplayConfig& cfg) {
  validate(live);
  const auto& rec = cfg.recorded;
  if (rec.speed_series.empty()) throw UsageError("replay recording has no speed samples");
  if (rec.truth_labels &&
      std::any_of(rec.truth_labels->begin(), rec.truth_labels->end(), [](bool b) { return b; })) {
    throw UsageError("replay recording must be clean (no manipulated samples)");
  }
  RawTrip out = live;
  std::vector<bool> labels(live.speed_series.size(), false);
  for (std::size_t i = 0; i < live.speed_series.size(); ++i) {
    const double replayed = rec.speed_series[i % rec.speed_series.size()].v_kmh;
    labels[i] = replayed != live.speed_series[i].v_kmh ||
                (live.truth_labels && (*live.truth_labels)[i]);
    out.speed_series[i].v_kmh = replayed;
  }
  out.truth_labels = std::move(labels);
  return out;
}

}  // namespace odbguard
