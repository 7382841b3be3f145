#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "odbguard/trace.hpp"

namespace odbguard {

enum class SegmentKind { kAccelerate, kCruise, kBrake, kStop };

/// One leg of a scripted drive.
///
/// accelerate / brake move toward `target_speed_kmh` at up to `rate_ms2` and
/// hold the target once reached. cruise holds the speed the vehicle had when
/// the segment began (`rate_ms2` then bounds the driver's corrections). stop
/// brakes to standstill at `rate_ms2` and switches the engine off.
struct Segment {
  SegmentKind kind = SegmentKind::kCruise;
  double target_speed_kmh = 0.0;
  double rate_ms2 = 0.0;
  double duration_s = 1.0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Physical disturbances on the accelerometer and on the driven speed.
struct NoiseConfig {
  double road_sigma = 0.3;          ///< white noise std on every axis, m/s^2
  double vibration_amp = 0.1;       ///< engine-frequency sinusoid amplitude, m/s^2
  double lateral_event_rate = 2.0;  ///< turn pulses per minute while moving
  double gravity_z = 9.81;          ///< constant on az, m/s^2
  double drive_sigma = 0.25;        ///< std of the driver's throttle wander, m/s^2

  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

struct Scenario {
  std::string name = "scenario";
  std::string vin = "1HGCM82633A004352";
  std::vector<Segment> segments;
  NoiseConfig noise;
  std::uint64_t seed = 0;
  double accel_rate_hz = 16.7;
  double obd_rate_hz = 1.0;
  /// OBD speed is reported as whole km/h, like the one-byte speed PID.
  bool quantize_speed = true;

  void validate() const;
  double duration_s() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

struct VehicleState {
  double t = 0.0;
  double speed_kmh = 0.0;
  double rpm = 0.0;
  double maf = 0.0;
  double voltage = 12.0;
  std::string vin;
  std::vector<std::string> dtc_codes;

  bool engine_running() const { return rpm > 0.0; }

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

inline constexpr double kIdleRpm = 800.0;
inline constexpr double kRunningVoltage = 13.3;
inline constexpr double kRestingVoltage = 12.0;

/// Fresh vehicle at standstill with the engine idling.
VehicleState idling_vehicle(std::string vin, double t = 0.0);

/// Sets rpm, maf and voltage from speed and the engine flag.
void set_engine(VehicleState& state, bool running);

struct StepResult {
  VehicleState state;
  double accel_ms2 = 0.0;  ///< constant acceleration applied over the step
};

/// Advances the vehicle by `dt` under `segment` with an extra throttle
/// perturbation. `hold_kmh` is the reference speed of a cruise segment.
StepResult advance_vehicle(const VehicleState& state, const Segment& segment, double dt,
                           double hold_kmh, double perturbation_ms2 = 0.0);

/// Noise-free single step; cruise holds the current speed.
VehicleState step_vehicle(const VehicleState& state, const Segment& segment, double dt);

struct Simulation {
  RawTrip trip;
  std::vector<VehicleState> obd_states;  ///< vehicle snapshot at every OBD poll time
};

/// Runs the scenario. Deterministic in the scenario (including its seed).
Simulation simulate(const Scenario& scenario);

/// simulate(scenario).trip
RawTrip generate_trip(const Scenario& scenario);

/// Options for randomly scripted mixed urban/suburban driving.
struct MixedDriveOptions {
  double duration_s = 600.0;
  double hard_brakes = 3.0;  ///< expected hard-brake legs per trip
  double hard_brake_min_ms2 = 4.0;
  double hard_brake_max_ms2 = 6.0;
  NoiseConfig noise;
};

/// A random but seed-deterministic scenario of accelerate / cruise / brake
/// legs with occasional stoplight waits, ending with an engine stop. All
/// segment durations are whole seconds.
Scenario make_mixed_scenario(std::uint64_t seed, const MixedDriveOptions& options = {});

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

}  // namespace odbguard
