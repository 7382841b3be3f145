#include "odbguard/trace.hpp"

#include <cmath>
#include <string>

#include "odbguard/error.hpp"

namespace odbguard {

namespace {

std::string at(double t) { return " at t=" + std::to_string(t); }

}  // namespace

void validate(const RawTrip& trip) {
  if (!trip.vin.empty() && trip.vin.size() != 17) {
    throw UsageError("VIN must have 17 characters, got " + std::to_string(trip.vin.size()));
  }
  for (std::size_t i = 0; i < trip.speed_series.size(); ++i) {
    const auto& s = trip.speed_series[i];
    if (!std::isfinite(s.t) || s.t < 0.0) throw UsageError("invalid speed timestamp" + at(s.t));
    if (i > 0 && !(s.t > trip.speed_series[i - 1].t)) {
      throw UsageError("speed timestamps not strictly increasing" + at(s.t));
    }
    if (!std::isfinite(s.v_kmh) || s.v_kmh < 0.0 || s.v_kmh > kMaxObdSpeedKmh) {
      throw UsageError("speed outside [0, 255] km/h" + at(s.t));
    }
  }
  for (std::size_t i = 0; i < trip.accel_series.size(); ++i) {
    const auto& a = trip.accel_series[i];
    if (!std::isfinite(a.t) || a.t < 0.0) throw UsageError("invalid accel timestamp" + at(a.t));
    if (i > 0 && !(a.t > trip.accel_series[i - 1].t)) {
      throw UsageError("accel timestamps not strictly increasing" + at(a.t));
    }
    if (!std::isfinite(a.ax) || !std::isfinite(a.ay) || !std::isfinite(a.az)) {
      throw UsageError("non-finite acceleration" + at(a.t));
    }
  }
  if (!trip.speed_series.empty() && !trip.accel_series.empty()) {
    const bool disjoint = trip.speed_series.back().t < trip.accel_series.front().t ||
                          trip.accel_series.back().t < trip.speed_series.front().t;
    if (disjoint) throw UsageError("speed and accel series cover disjoint time spans");
  }
  if (trip.truth_labels && trip.truth_labels->size() != trip.speed_series.size()) {
    throw UsageError("truth label count differs from speed sample count");
  }
}

}  // namespace odbguard
