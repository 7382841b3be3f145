#include "odbguard/vehsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "json.hpp"
#include "json_convert.hpp"
#include "odbguard/error.hpp"
#include "odbguard/rng.hpp"

namespace odbguard {

namespace {

constexpr double kKmhPerMs = 3.6;
constexpr double kRpmPerKmh = 40.0;
constexpr double kMafPerRpm = 0.005;  // g/s per rev/min
constexpr double kDefaultStopRate = 3.0;
constexpr double kCruiseCorrection = 2.0;
constexpr double kControlStep = 1.0;
constexpr double kWanderTau = 3.0;
constexpr double kSnapKmh = 1e-9;

// Substream ids.
constexpr std::uint64_t kStreamSensor = 1;
constexpr std::uint64_t kStreamWander = 2;
constexpr std::uint64_t kStreamLateral = 3;
constexpr std::uint64_t kStreamPhase = 4;
constexpr std::uint64_t kStreamScript = 5;

struct Step {
  double t0 = 0.0;
  double t1 = 0.0;
  double v0 = 0.0;
  double v1 = 0.0;
  double accel = 0.0;
  bool engine_on = true;
  bool engine_on_end = true;

  double speed_at(double t) const {
    if (t >= t1) return v1;
    return std::max(0.0, v0 + accel * kKmhPerMs * (t - t0));
  }
};

struct LateralPulse {
  double start = 0.0;
  double duration = 1.0;
  double amplitude = 0.0;
};

double lateral_at(const std::vector<LateralPulse>& pulses, double t) {
  double sum = 0.0;
  for (const auto& p : pulses) {
    if (t >= p.start && t < p.start + p.duration) {
      sum += p.amplitude * std::sin(std::numbers::pi * (t - p.start) / p.duration);
    }
  }
  return sum;
}

std::size_t step_index(const std::vector<Step>& steps, double t, bool closed_right) {
  // first step with t1 > t (or >= t for closed intervals)
  auto it = std::partition_point(steps.begin(), steps.end(), [&](const Step& s) {
    return closed_right ? s.t1 < t : s.t1 <= t;
  });
  if (it == steps.end()) return steps.size() - 1;
  return static_cast<std::size_t>(it - steps.begin());
}

}  // namespace

void Scenario::validate() const {
  if (!vin.empty() && vin.size() != 17) throw UsageError("scenario VIN must have 17 characters");
  if (!(accel_rate_hz > 0.0) || !(obd_rate_hz > 0.0)) throw UsageError("sample rates must be > 0");
  const auto& n = noise;
  if (n.road_sigma < 0.0 || n.vibration_amp < 0.0 || n.lateral_event_rate < 0.0 ||
      n.gravity_z < 0.0 || n.drive_sigma < 0.0) {
    throw UsageError("noise parameters must be non-negative");
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    const auto where = " (segment " + std::to_string(i) + ")";
    if (!(s.duration_s > 0.0) || !std::isfinite(s.duration_s)) {
      throw UsageError("segment duration must be > 0" + where);
    }
    if (!(s.target_speed_kmh >= 0.0 && s.target_speed_kmh <= kMaxObdSpeedKmh)) {
      throw UsageError("target speed must lie in [0, 255] km/h" + where);
    }
    if (!(s.rate_ms2 >= 0.0) || !std::isfinite(s.rate_ms2)) throw UsageError("rate must be >= 0" + where);
    if ((s.kind == SegmentKind::kAccelerate || s.kind == SegmentKind::kBrake) && s.rate_ms2 <= 0.0) {
      throw UsageError("accelerate/brake segments need a positive rate" + where);
    }
  }
}

double Scenario::duration_s() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.duration_s;
  return total;
}

void set_engine(VehicleState& state, bool running) {
  if (running) {
    state.rpm = kIdleRpm + kRpmPerKmh * state.speed_kmh;
    state.maf = kMafPerRpm * state.rpm;
    state.voltage = kRunningVoltage;
  } else {
    state.rpm = 0.0;
    state.maf = 0.0;
    state.voltage = kRestingVoltage;
  }
}

VehicleState idling_vehicle(std::string vin, double t) {
  VehicleState s;
  s.t = t;
  s.vin = std::move(vin);
  set_engine(s, true);
  return s;
}

StepResult advance_vehicle(const VehicleState& state, const Segment& segment, double dt,
                           double hold_kmh, double perturbation_ms2) {
  if (!(dt > 0.0)) throw UsageError("step length must be > 0");
  const double v = state.speed_kmh;
  double target = segment.target_speed_kmh;
  double bound = segment.rate_ms2;
  switch (segment.kind) {
    case SegmentKind::kAccelerate:
    case SegmentKind::kBrake:
      break;
    case SegmentKind::kCruise:
      target = hold_kmh;
      if (bound <= 0.0) bound = kCruiseCorrection;
      break;
    case SegmentKind::kStop:
      target = 0.0;
      if (bound <= 0.0) bound = kDefaultStopRate;
      perturbation_ms2 = 0.0;
      break;
  }
  if (target == 0.0 && v == 0.0) perturbation_ms2 = 0.0;

  const double base = (target - v) / kKmhPerMs / dt;
  double a = std::clamp(base + perturbation_ms2, -bound, bound);
  a = std::clamp(a, -v / kKmhPerMs / dt, (kMaxObdSpeedKmh - v) / kKmhPerMs / dt);

  StepResult out;
  out.state = state;
  double v_new = v + a * kKmhPerMs * dt;
  if (std::abs(v_new - target) < kSnapKmh) v_new = target;
  v_new = std::clamp(v_new, 0.0, kMaxObdSpeedKmh);
  out.accel_ms2 = (v_new - v) / kKmhPerMs / dt;
  out.state.speed_kmh = v_new;
  out.state.t = state.t + dt;
  const bool running = segment.kind != SegmentKind::kStop || v_new > 0.0;
  set_engine(out.state, running);
  return out;
}

VehicleState step_vehicle(const VehicleState& state, const Segment& segment, double dt) {
  return advance_vehicle(state, segment, dt, state.speed_kmh).state;
}

Simulation simulate(const Scenario& scenario) {
  scenario.validate();
  const auto& noise = scenario.noise;

  // Kinematics on a one-second control grid; a segment's last step may be
  // shorter.
  std::vector<Step> steps;
  VehicleState state = idling_vehicle(scenario.vin);
  Rng wander_rng = Rng::substream(scenario.seed, kStreamWander);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  const double rho = std::exp(-kControlStep / kWanderTau);
  double wander = 0.0;
  for (const auto& seg : scenario.segments) {
    const double hold = state.speed_kmh;
    double remaining = seg.duration_s;
    while (remaining > 1e-12) {
      const double h = std::min(kControlStep, remaining);
      wander = rho * wander + std::sqrt(1.0 - rho * rho) * noise.drive_sigma * std_normal(wander_rng);
      const auto r = advance_vehicle(state, seg, h, hold, wander);
      Step s;
      s.t0 = state.t;
      s.t1 = r.state.t;
      s.v0 = state.speed_kmh;
      s.v1 = r.state.speed_kmh;
      s.accel = r.accel_ms2;
      s.engine_on = seg.kind != SegmentKind::kStop || s.v0 > 0.0;
      s.engine_on_end = r.state.engine_running();
      steps.push_back(s);
      state = r.state;
      remaining -= h;
    }
  }
  const double total = state.t;

  Simulation sim;
  RawTrip& trip = sim.trip;
  trip.vin = scenario.vin;
  trip.meta = {scenario.name, scenario.seed};

  // OBD polls, including t = 0 and the end of the scenario.
  for (std::int64_t n = 0;; ++n) {
    const double t = static_cast<double>(n) / scenario.obd_rate_hz;
    if (t > total + 1e-9) break;
    double v = 0.0;
    bool engine_on = true;
    if (!steps.empty()) {
      const auto& s = steps[step_index(steps, t, true)];
      v = s.speed_at(t);
      engine_on = t >= s.t1 ? s.engine_on_end : s.engine_on;
    }
    VehicleState snap;
    snap.t = t;
    snap.speed_kmh = v;
    snap.vin = scenario.vin;
    set_engine(snap, engine_on);
    sim.obd_states.push_back(snap);

    double reported = scenario.quantize_speed ? std::round(v) : v;
    trip.speed_series.push_back({t, std::clamp(reported, 0.0, kMaxObdSpeedKmh)});
  }
  trip.truth_labels = std::vector<bool>(trip.speed_series.size(), false);

  // Turn pulses while moving.
  std::vector<LateralPulse> pulses;
  if (noise.lateral_event_rate > 0.0 && !steps.empty()) {
    Rng rng = Rng::substream(scenario.seed, kStreamLateral);
    std::exponential_distribution<double> gap(noise.lateral_event_rate / 60.0);
    std::uniform_real_distribution<double> amp(1.0, 3.0);
    std::uniform_real_distribution<double> dur(2.0, 5.0);
    std::bernoulli_distribution left(0.5);
    for (double t = gap(rng); t < total; t += gap(rng)) {
      LateralPulse p{t, dur(rng), amp(rng) * (left(rng) ? 1.0 : -1.0)};
      if (steps[step_index(steps, t, false)].speed_at(t) > 10.0) pulses.push_back(p);
    }
  }

  Rng phase_rng = Rng::substream(scenario.seed, kStreamPhase);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  const std::array<double, 3> phase{phase_dist(phase_rng), phase_dist(phase_rng),
                                    phase_dist(phase_rng)};

  Rng sensor_rng = Rng::substream(scenario.seed, kStreamSensor);
  auto sensor_noise = [&]() { return noise.road_sigma * std_normal(sensor_rng); };
  for (std::int64_t m = 0;; ++m) {
    const double t = static_cast<double>(m) / scenario.accel_rate_hz;
    if (t >= total) break;
    const auto& s = steps[step_index(steps, t, false)];
    std::array<double, 3> vib{};
    if (s.engine_on && noise.vibration_amp > 0.0) {
      const double rpm = kIdleRpm + kRpmPerKmh * s.speed_at(t);
      for (int c = 0; c < 3; ++c) {
        vib[c] = noise.vibration_amp * std::sin(2.0 * std::numbers::pi * rpm / 60.0 * t + phase[c]);
      }
    }
    AccelSample a;
    a.t = t;
    a.ax = s.accel + sensor_noise() + vib[0];
    a.ay = lateral_at(pulses, t) + sensor_noise() + vib[1];
    a.az = noise.gravity_z + sensor_noise() + vib[2];
    trip.accel_series.push_back(a);
  }
  return sim;
}

RawTrip generate_trip(const Scenario& scenario) { return simulate(scenario).trip; }

Scenario make_mixed_scenario(std::uint64_t seed, const MixedDriveOptions& options) {
  Rng rng = Rng::substream(seed, kStreamScript);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  auto whole = [](double x) { return std::max(1.0, std::ceil(x)); };

  Scenario sc;
  sc.name = "mixed-" + std::to_string(seed);
  sc.seed = seed;
  sc.noise = options.noise;

  constexpr double kMeanLegSeconds = 70.0;
  const double p_hard =
      std::clamp(options.hard_brakes * kMeanLegSeconds / options.duration_s, 0.0, 1.0);

  double t = 0.0;
  double v = 0.0;
  auto push = [&](SegmentKind kind, double target, double rate, double duration) {
    sc.segments.push_back({kind, target, rate, duration});
    t += duration;
  };

  push(SegmentKind::kCruise, 0.0, 0.0, whole(uniform(3.0, 8.0)));
  while (t < options.duration_s - 40.0) {
    double target = std::round(uniform(30.0, 100.0));
    if (target < v + 10.0) target = std::min(120.0, v + 20.0);
    const double up = std::round(uniform(1.0, 2.5) * 10.0) / 10.0;
    push(SegmentKind::kAccelerate, target, up, whole((target - v) / kKmhPerMs / up) + 1.0);
    v = target;
    push(SegmentKind::kCruise, v, 0.0, whole(uniform(10.0, 40.0)));

    double next = 0.0;
    double down = 0.0;
    if (uniform(0.0, 1.0) < p_hard) {
      down = std::round(uniform(options.hard_brake_min_ms2, options.hard_brake_max_ms2) * 10.0) / 10.0;
      next = std::round(uniform(0.0, std::max(0.0, v - 40.0)));
    } else {
      down = std::round(uniform(0.8, 2.5) * 10.0) / 10.0;
      next = uniform(0.0, 1.0) < 0.3 ? 0.0 : std::round(uniform(20.0, std::max(20.0, v - 10.0)));
    }
    push(SegmentKind::kBrake, next, down, whole((v - next) / kKmhPerMs / down) + 1.0);
    v = next;
    if (v == 0.0) push(SegmentKind::kCruise, 0.0, 0.0, whole(uniform(5.0, 20.0)));
  }
  if (v > 0.0) push(SegmentKind::kBrake, 0.0, 2.0, whole(v / kKmhPerMs / 2.0) + 1.0);
  push(SegmentKind::kStop, 0.0, 2.0, 5.0);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  try {
    auto sc = nlohmann::json::parse(in).get<Scenario>();
    sc.validate();
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << nlohmann::json(scenario).dump(2) << '\n';
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace odbguard
