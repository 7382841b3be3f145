#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "odbguard/trace.hpp"

namespace odbguard {

struct PreprocessConfig {
  /// km/h -> m/s. Brings the OBD speed channel onto the accelerometer's units.
  static constexpr double kSpeedUnitFactor = 1000.0 / 3600.0;

  double window_s = 1.0;
  int min_samples_per_window = 1;

  void validate() const;
};

/// Mean rate of speed change over (t_start, t_end], m/s^2. `index` is the
/// position of the later speed sample in the source series.
struct SpeedVariation {
  double t_start = 0.0;
  double t_end = 0.0;
  double y = 0.0;
  std::size_t index = 0;
};

/// Per-axis mean of the accelerometer samples in [k*window_s, (k+1)*window_s).
struct AccelWindow {
  std::int64_t index = 0;
  std::array<double, 3> x{};
  int n_samples = 0;
  bool missing = true;
};

struct AlignResult {
  std::vector<AlignedRecord> records;
  std::size_t dropped = 0;  ///< variations without a complete acceleration side
};

/// Difference quotients of consecutive speed samples in m/s^2. Fewer than two
/// samples give an empty result; a zero time gap throws UsageError.
std::vector<SpeedVariation> derive_speed_variation(const std::vector<SpeedSample>& speed,
                                                   const PreprocessConfig& cfg = {});

/// Windows 0..floor(t_last / window_s). Windows holding fewer than
/// `min_samples_per_window` samples are marked missing.
std::vector<AccelWindow> average_accel_windows(const std::vector<AccelSample>& accel,
                                               const PreprocessConfig& cfg = {});

/// Pairs every speed variation with the overlap-weighted mean of the windows
/// covering its interval. A variation touching a missing window is dropped.
/// A record is labelled manipulated when either speed sample bounding its
/// interval is.
AlignResult align_records(const std::vector<SpeedVariation>& variations,
                          const std::vector<AccelWindow>& windows, const PreprocessConfig& cfg = {},
                          const std::optional<std::vector<bool>>& speed_labels = std::nullopt);

/// derive_speed_variation + average_accel_windows + align_records.
AlignResult preprocess_trip(const RawTrip& trip, const PreprocessConfig& cfg = {});

}  // namespace odbguard
