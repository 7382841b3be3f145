#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace odbguard {

/// Largest speed the one-byte OBD-2 speed PID can carry, km/h.
inline constexpr double kMaxObdSpeedKmh = 255.0;

/// One OBD speed reading. `t` in seconds since trip start, `v_kmh` in km/h.
struct SpeedSample {
  double t = 0.0;
  double v_kmh = 0.0;

  friend bool operator==(const SpeedSample&, const SpeedSample&) = default;
};

/// One accelerometer reading in m/s^2: ax forward, ay lateral, az
/// perpendicular to the ground.
struct AccelSample {
  double t = 0.0;
  double ax = 0.0;
  double ay = 0.0;
  double az = 0.0;

  friend bool operator==(const AccelSample&, const AccelSample&) = default;
};

struct TripMeta {
  std::string scenario;
  std::uint64_t seed = 0;

  friend bool operator==(const TripMeta&, const TripMeta&) = default;
};

/// A recorded trip: the untrusted OBD speed channel, the trusted accelerometer
/// channel and optional ground truth (true = speed sample was manipulated).
struct RawTrip {
  std::string vin;
  std::vector<SpeedSample> speed_series;
  std::vector<AccelSample> accel_series;
  std::optional<std::vector<bool>> truth_labels;
  TripMeta meta;

  friend bool operator==(const RawTrip&, const RawTrip&) = default;
};

/// Per-second observation unit of the detector: `y` is the speed variation
/// derived from OBD speed (m/s^2), `x` the mean trusted acceleration over the
/// same interval (m/s^2).
struct AlignedRecord {
  std::int64_t t = 0;
  double y = 0.0;
  std::array<double, 3> x{};
  std::optional<bool> label;

  friend bool operator==(const AlignedRecord&, const AlignedRecord&) = default;
};

/// Throws UsageError when the trip violates its invariants: timestamps
/// non-negative and strictly increasing per channel, speeds within the OBD
/// byte range, finite accelerations, label count equal to speed count, and a
/// VIN that is empty or 17 characters long.
void validate(const RawTrip& trip);

// Trace CSV: `t,v_kmh,ax,ay,az,label`, optionally preceded by `#` metadata
// lines. Speed-only rows leave ax..az empty, accel-only rows leave v_kmh
// empty. Numbers are written in shortest round-trip form.

RawTrip read_trip(std::istream& in);
RawTrip read_trip(const std::filesystem::path& path);
void write_trip(const RawTrip& trip, std::ostream& out);
void write_trip(const RawTrip& trip, const std::filesystem::path& path);

// Aligned-records CSV: `t,y,x1,x2,x3,label`.

std::vector<AlignedRecord> read_aligned(std::istream& in);
std::vector<AlignedRecord> read_aligned(const std::filesystem::path& path);
void write_aligned(const std::vector<AlignedRecord>& records, std::ostream& out);
void write_aligned(const std::vector<AlignedRecord>& records, const std::filesystem::path& path);

}  // namespace odbguard
