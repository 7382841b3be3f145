#pragma once

// nlohmann::json bindings for the configuration types. Missing keys keep
// their defaults so hand-written files may be partial.

#include "json.hpp"
#include "odbguard/error.hpp"
#include "odbguard/model.hpp"
#include "odbguard/preprocess.hpp"
#include "odbguard/vehsim.hpp"

namespace odbguard {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) field = it->get<T>();
}

inline void to_json(nlohmann::json& j, const HyperParams& hp) {
  j = {{"e", hp.e},           {"f", hp.f},           {"mu_beta", hp.mu_beta},
       {"lambda", hp.lambda}, {"a", hp.a},           {"b", hp.b},
       {"J_max", hp.j_max},   {"n_iter", hp.n_iter}, {"burn_in", hp.burn_in},
       {"thin", hp.thin},     {"seed", hp.seed}};
}

inline void from_json(const nlohmann::json& j, HyperParams& hp) {
  read_opt(j, "e", hp.e);
  read_opt(j, "f", hp.f);
  read_opt(j, "mu_beta", hp.mu_beta);
  read_opt(j, "lambda", hp.lambda);
  read_opt(j, "a", hp.a);
  read_opt(j, "b", hp.b);
  read_opt(j, "J_max", hp.j_max);
  read_opt(j, "n_iter", hp.n_iter);
  read_opt(j, "burn_in", hp.burn_in);
  read_opt(j, "thin", hp.thin);
  read_opt(j, "seed", hp.seed);
}

NLOHMANN_JSON_SERIALIZE_ENUM(SegmentKind, {
                                              {SegmentKind::kAccelerate, "accelerate"},
                                              {SegmentKind::kCruise, "cruise"},
                                              {SegmentKind::kBrake, "brake"},
                                              {SegmentKind::kStop, "stop"},
                                          })

inline void to_json(nlohmann::json& j, const Segment& s) {
  j = {{"kind", s.kind},
       {"target_speed_kmh", s.target_speed_kmh},
       {"rate_ms2", s.rate_ms2},
       {"duration_s", s.duration_s}};
}

inline void from_json(const nlohmann::json& j, Segment& s) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind != "accelerate" && kind != "cruise" && kind != "brake" && kind != "stop") {
    throw UsageError("unknown segment kind '" + kind + "'");
  }
  s.kind = j.at("kind").get<SegmentKind>();
  read_opt(j, "target_speed_kmh", s.target_speed_kmh);
  read_opt(j, "rate_ms2", s.rate_ms2);
  read_opt(j, "duration_s", s.duration_s);
}

inline void to_json(nlohmann::json& j, const NoiseConfig& n) {
  j = {{"road_sigma", n.road_sigma},
       {"vibration_amp", n.vibration_amp},
       {"lateral_event_rate", n.lateral_event_rate},
       {"gravity_z", n.gravity_z},
       {"drive_sigma", n.drive_sigma}};
}

inline void from_json(const nlohmann::json& j, NoiseConfig& n) {
  read_opt(j, "road_sigma", n.road_sigma);
  read_opt(j, "vibration_amp", n.vibration_amp);
  read_opt(j, "lateral_event_rate", n.lateral_event_rate);
  read_opt(j, "gravity_z", n.gravity_z);
  read_opt(j, "drive_sigma", n.drive_sigma);
}

inline void to_json(nlohmann::json& j, const Scenario& s) {
  j = {{"name", s.name},
       {"vin", s.vin},
       {"segments", s.segments},
       {"noise", s.noise},
       {"seed", s.seed},
       {"accel_rate_hz", s.accel_rate_hz},
       {"obd_rate_hz", s.obd_rate_hz},
       {"quantize_speed", s.quantize_speed}};
}

inline void from_json(const nlohmann::json& j, Scenario& s) {
  read_opt(j, "name", s.name);
  read_opt(j, "vin", s.vin);
  read_opt(j, "segments", s.segments);
  read_opt(j, "noise", s.noise);
  read_opt(j, "seed", s.seed);
  read_opt(j, "accel_rate_hz", s.accel_rate_hz);
  read_opt(j, "obd_rate_hz", s.obd_rate_hz);
  read_opt(j, "quantize_speed", s.quantize_speed);
}

inline void to_json(nlohmann::json& j, const PreprocessConfig& c) {
  j = {{"window_s", c.window_s}, {"min_samples_per_window", c.min_samples_per_window}};
}

inline void from_json(const nlohmann::json& j, PreprocessConfig& c) {
  read_opt(j, "window_s", c.window_s);
  read_opt(j, "min_samples_per_window", c.min_samples_per_window);
}

}  // namespace odbguard
