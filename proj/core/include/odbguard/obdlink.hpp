#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "odbguard/trace.hpp"
#include "odbguard/vehsim.hpp"

namespace odbguard {

namespace obd {

inline constexpr std::uint8_t kModeCurrentData = 0x01;
inline constexpr std::uint8_t kModeStoredDtc = 0x03;
inline constexpr std::uint8_t kModeVehicleInfo = 0x09;
inline constexpr std::uint8_t kModeNegative = 0x7F;

inline constexpr std::uint8_t kPidRpm = 0x0C;
inline constexpr std::uint8_t kPidSpeed = 0x0D;
inline constexpr std::uint8_t kPidMaf = 0x10;
inline constexpr std::uint8_t kPidVin = 0x02;

/// serviceNotSupported / requestOutOfRange, as carried in negative replies.
inline constexpr std::uint8_t kNrcServiceNotSupported = 0x11;
inline constexpr std::uint8_t kNrcRequestOutOfRange = 0x31;

}  // namespace obd

struct ObdRequest {
  std::uint8_t mode = obd::kModeCurrentData;
  std::uint8_t pid = obd::kPidSpeed;

  friend bool operator==(const ObdRequest&, const ObdRequest&) = default;
};

/// A reply. Negative replies carry mode 0x7F and payload {mode, pid, NRC}.
struct ObdResponse {
  std::uint8_t mode = 0;
  std::uint8_t pid = 0;
  std::vector<std::uint8_t> payload;

  bool negative() const { return mode == obd::kModeNegative; }

  friend bool operator==(const ObdResponse&, const ObdResponse&) = default;
};

inline ObdRequest speed_request() { return {obd::kModeCurrentData, obd::kPidSpeed}; }
inline ObdRequest rpm_request() { return {obd::kModeCurrentData, obd::kPidRpm}; }
inline ObdRequest maf_request() { return {obd::kModeCurrentData, obd::kPidMaf}; }
inline ObdRequest vin_request() { return {obd::kModeVehicleInfo, obd::kPidVin}; }
inline ObdRequest dtc_request() { return {obd::kModeStoredDtc, 0x00}; }

bool is_supported(const ObdRequest& req);

/// ECU side: answers a request from the current vehicle snapshot.
ObdResponse handle_obd_request(const VehicleState& vehicle, const ObdRequest& req);

// Encoders/decoders for the individual PIDs. Decoders throw ParseError on a
// negative reply or a payload of the wrong length.

std::vector<std::uint8_t> encode_speed(double kmh);
std::vector<std::uint8_t> encode_rpm(double rpm);
std::vector<std::uint8_t> encode_maf(double grams_per_s);
std::vector<std::uint8_t> encode_dtc(const std::string& code);

int decode_speed(const ObdResponse& resp);
double decode_rpm(const ObdResponse& resp);
double decode_maf(const ObdResponse& resp);
std::string decode_vin(const ObdResponse& resp);
std::vector<std::string> decode_dtcs(const ObdResponse& resp);

enum class DevicePhase { kIdle, kIgnitionDetected, kInTrip, kShutoffPending };

enum class TripEventKind { kTripStart, kVinRead, kDtcRead, kHardBrakeBeep, kTripEnd };

const char* to_string(DevicePhase phase);
const char* to_string(TripEventKind kind);

struct TripEvent {
  double t = 0.0;
  TripEventKind kind = TripEventKind::kTripStart;
  std::string detail;

  friend bool operator==(const TripEvent&, const TripEvent&) = default;
};

/// Insurer dongle. The hard-brake threshold is an integer because the
/// comparison runs on integer OBD speed; 11 km/h per second is 7 mph per
/// second rounded down.
struct DeviceState {
  DevicePhase phase = DevicePhase::kIdle;
  std::optional<int> last_reported_speed_kmh;
  int hard_brake_threshold_kmh_per_s = 11;
  bool read_dtc = true;
  std::vector<TripEvent> events;
};

/// Voltage at which the dongle considers the engine running.
inline constexpr double kIgnitionVoltage = 13.3;

/// Whatever answers the dongle's requests: the ECU, or something sitting in
/// between.
using Responder = std::function<ObdResponse(const ObdRequest&)>;

struct TickResult {
  DeviceState device;
  std::vector<ObdRequest> requests;
  std::vector<TripEvent> events;            ///< emitted during this tick
  std::optional<SpeedSample> speed_report;  ///< speed the dongle logged this tick
};

/// One polling cycle (one simulated second). Supply voltage is read directly
/// from the vehicle; everything else goes through `responder`, which defaults
/// to the vehicle's own ECU.
TickResult device_tick(const DeviceState& device, const VehicleState& vehicle,
                       const Responder& responder = {});

struct SessionResult {
  std::vector<SpeedSample> observed;          ///< speeds as logged by the dongle
  std::vector<std::size_t> observed_indices;  ///< source tick of each logged speed
  std::vector<TripEvent> events;
  std::size_t requests = 0;
  DeviceState final_device;
};

/// Hook that lets an interposed box rewrite the reply to each request. It
/// receives the request and the genuine ECU reply.
using ResponseFilter = std::function<ObdResponse(const ObdRequest&, const ObdResponse&)>;

/// Drives a dongle over a sequence of vehicle snapshots, one tick each.
SessionResult run_session(const std::vector<VehicleState>& states, const DeviceState& config = {},
                          const ResponseFilter& filter = {});

struct TripSession {
  RawTrip observed;  ///< accel unchanged; speeds (and labels) as logged
  std::vector<TripEvent> events;
};

/// Replays a recorded trip's speed channel through a dongle. The engine is
/// taken to be running for the trip's span: a warm-up tick at the first
/// timestamp raises the ignition, and two shutdown ticks after the last sample
/// close the trip.
TripSession run_session(const RawTrip& trip, const DeviceState& config = {});

void write_events(const std::vector<TripEvent>& events, std::ostream& out);
void write_events(const std::vector<TripEvent>& events, const std::filesystem::path& path);
std::vector<TripEvent> read_events(std::istream& in);

}  // namespace odbguard
