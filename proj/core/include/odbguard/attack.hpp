#pragma once

#include <optional>
#include <span>
#include <vector>

#include "odbguard/obdlink.hpp"
#include "odbguard/trace.hpp"

namespace odbguard {

struct FlattenConfig {
  /// Hard-brake threshold of the targeted insurer, km/h per reading.
  int threshold_kmh_per_s = 11;

  void validate() const;
};

/// Online speed flattener. Remembers the last value it let through and caps
/// every drop at threshold - 1 km/h, the largest drop the dongle will not
/// count as a hard brake.
class SpeedFlattener {
 public:
  explicit SpeedFlattener(FlattenConfig cfg = {});

  /// Returns the value to forward for a genuine reading of `raw_kmh`.
  int feed(int raw_kmh);
  void reset() { prev_.reset(); }

 private:
  FlattenConfig cfg_;
  std::optional<int> prev_;
};

struct FlattenResult {
  std::vector<int> speeds;
  std::vector<bool> labels;  ///< true where the forwarded value differs from the raw one
};

FlattenResult flatten_attack(std::span<const int> raw_kmh, const FlattenConfig& cfg = {});

/// Applies flatten_attack to the trip's (rounded) speed channel. Existing
/// truth labels are kept and OR-ed with the new ones.
RawTrip flatten_trip(const RawTrip& trip, const FlattenConfig& cfg = {});

/// Response filter rewriting speed replies on the fly, for use with
/// run_session. Mirrors the man-in-the-middle box between port and dongle.
ResponseFilter flatten_filter(FlattenConfig cfg = {});

struct ReplayConfig {
  RawTrip recorded;  ///< clean trace to play back; must carry no true labels
};

/// Puts the recorded speed values on the live trip's clock, looping the
/// recording when the live trip is longer. Accelerations stay live. Labels are
/// true where the replayed value differs from the live one.
RawTrip replay_attack(const RawTrip& live, const ReplayConfig& cfg);

}  // namespace odbguard
