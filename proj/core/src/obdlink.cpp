#include "odbguard/obdlink.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"
#include "odbguard/error.hpp"

namespace odbguard {

namespace {

constexpr std::string_view kDtcLetters = "PCBU";

ObdResponse negative_reply(const ObdRequest& req, std::uint8_t nrc) {
  return {obd::kModeNegative, req.pid, {req.mode, req.pid, nrc}};
}

std::uint16_t to_u16(double scaled) {
  return static_cast<std::uint16_t>(std::clamp(std::round(scaled), 0.0, 65535.0));
}

void expect(const ObdResponse& resp, std::uint8_t mode, std::uint8_t pid, std::size_t length,
            const char* what) {
  if (resp.negative()) throw ParseError(std::string("negative reply to ") + what + " request");
  if (resp.mode != mode || resp.pid != pid) {
    throw ParseError(std::string("reply does not answer the ") + what + " request");
  }
  if (resp.payload.size() != length) {
    throw ParseError(std::string(what) + " payload must have " + std::to_string(length) + " bytes");
  }
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

bool is_supported(const ObdRequest& req) {
  switch (req.mode) {
    case obd::kModeCurrentData:
      return req.pid == obd::kPidRpm || req.pid == obd::kPidSpeed || req.pid == obd::kPidMaf;
    case obd::kModeVehicleInfo:
      return req.pid == obd::kPidVin;
    case obd::kModeStoredDtc:
      return true;
    default:
      return false;
  }
}

std::vector<std::uint8_t> encode_speed(double kmh) {
  return {static_cast<std::uint8_t>(std::clamp(std::round(kmh), 0.0, 255.0))};
}

std::vector<std::uint8_t> encode_rpm(double rpm) {
  const auto raw = to_u16(rpm * 4.0);
  return {static_cast<std::uint8_t>(raw >> 8), static_cast<std::uint8_t>(raw & 0xFF)};
}

std::vector<std::uint8_t> encode_maf(double grams_per_s) {
  const auto raw = to_u16(grams_per_s * 100.0);
  return {static_cast<std::uint8_t>(raw >> 8), static_cast<std::uint8_t>(raw & 0xFF)};
}

std::vector<std::uint8_t> encode_dtc(const std::string& code) {
  const auto letter = code.empty() ? std::string_view::npos : kDtcLetters.find(code[0]);
  if (code.size() != 5 || letter == std::string_view::npos) {
    throw UsageError("malformed DTC '" + code + "'");
  }
  const int d1 = hex_digit(code[1]);
  const int d2 = hex_digit(code[2]);
  const int d3 = hex_digit(code[3]);
  const int d4 = hex_digit(code[4]);
  if (d1 < 0 || d1 > 3 || d2 < 0 || d3 < 0 || d4 < 0) throw UsageError("malformed DTC '" + code + "'");
  return {static_cast<std::uint8_t>((letter << 6) | (d1 << 4) | d2),
          static_cast<std::uint8_t>((d3 << 4) | d4)};
}

ObdResponse handle_obd_request(const VehicleState& vehicle, const ObdRequest& req) {
  if (!is_supported(req)) return negative_reply(req, obd::kNrcServiceNotSupported);
  ObdResponse resp{req.mode, req.pid, {}};
  switch (req.mode) {
    case obd::kModeCurrentData:
      if (req.pid == obd::kPidSpeed) resp.payload = encode_speed(vehicle.speed_kmh);
      if (req.pid == obd::kPidRpm) resp.payload = encode_rpm(vehicle.rpm);
      if (req.pid == obd::kPidMaf) resp.payload = encode_maf(vehicle.maf);
      break;
    case obd::kModeVehicleInfo:
      if (vehicle.vin.size() != 17) return negative_reply(req, obd::kNrcRequestOutOfRange);
      resp.payload.assign(vehicle.vin.begin(), vehicle.vin.end());
      break;
    case obd::kModeStoredDtc:
      for (const auto& code : vehicle.dtc_codes) {
        const auto bytes = encode_dtc(code);
        resp.payload.insert(resp.payload.end(), bytes.begin(), bytes.end());
      }
      break;
  }
  return resp;
}

int decode_speed(const ObdResponse& resp) {
  expect(resp, obd::kModeCurrentData, obd::kPidSpeed, 1, "speed");
  return resp.payload[0];
}

double decode_rpm(const ObdResponse& resp) {
  expect(resp, obd::kModeCurrentData, obd::kPidRpm, 2, "rpm");
  return (256.0 * resp.payload[0] + resp.payload[1]) / 4.0;
}

double decode_maf(const ObdResponse& resp) {
  expect(resp, obd::kModeCurrentData, obd::kPidMaf, 2, "maf");
  return (256.0 * resp.payload[0] + resp.payload[1]) / 100.0;
}

std::string decode_vin(const ObdResponse& resp) {
  expect(resp, obd::kModeVehicleInfo, obd::kPidVin, 17, "VIN");
  return std::string(resp.payload.begin(), resp.payload.end());
}

std::vector<std::string> decode_dtcs(const ObdResponse& resp) {
  if (resp.negative() || resp.mode != obd::kModeStoredDtc) throw ParseError("not a DTC reply");
  if (resp.payload.size() % 2 != 0) throw ParseError("DTC payload must hold byte pairs");
  constexpr char kHex[] = "0123456789ABCDEF";
  std::vector<std::string> codes;
  for (std::size_t i = 0; i < resp.payload.size(); i += 2) {
    const auto a = resp.payload[i];
    const auto b = resp.payload[i + 1];
    std::string code(5, '0');
    code[0] = kDtcLetters[a >> 6];
    code[1] = kHex[(a >> 4) & 0x3];
    code[2] = kHex[a & 0xF];
    code[3] = kHex[b >> 4];
    code[4] = kHex[b & 0xF];
    codes.push_back(code);
  }
  return codes;
}

const char* to_string(DevicePhase phase) {
  switch (phase) {
    case DevicePhase::kIdle: return "Idle";
    case DevicePhase::kIgnitionDetected: return "IgnitionDetected";
    case DevicePhase::kInTrip: return "InTrip";
    case DevicePhase::kShutoffPending: return "ShutoffPending";
  }
  return "?";
}

const char* to_string(TripEventKind kind) {
  switch (kind) {
    case TripEventKind::kTripStart: return "TripStart";
    case TripEventKind::kVinRead: return "VinRead";
    case TripEventKind::kDtcRead: return "DtcRead";
    case TripEventKind::kHardBrakeBeep: return "HardBrakeBeep";
    case TripEventKind::kTripEnd: return "TripEnd";
  }
  return "?";
}

TickResult device_tick(const DeviceState& device, const VehicleState& vehicle,
                       const Responder& responder) {
  TickResult out;
  out.device = device;
  auto& dev = out.device;

  auto ask = [&](const ObdRequest& req) {
    out.requests.push_back(req);
    return responder ? responder(req) : handle_obd_request(vehicle, req);
  };
  // A missing or garbled reply reads as "no value".
  auto ask_number = [&](const ObdRequest& req, auto decode) -> std::optional<double> {
    try {
      return static_cast<double>(decode(ask(req)));
    } catch (const ParseError&) {
      return std::nullopt;
    }
  };
  auto emit = [&](TripEventKind kind, std::string detail) {
    TripEvent ev{vehicle.t, kind, std::move(detail)};
    out.events.push_back(ev);
    dev.events.push_back(std::move(ev));
  };
  auto poll_speed = [&]() {
    const auto v = ask_number(speed_request(), decode_speed);
    if (!v) return;
    const int kmh = static_cast<int>(*v);
    if (dev.last_reported_speed_kmh) {
      const int drop = *dev.last_reported_speed_kmh - kmh;
      if (drop >= dev.hard_brake_threshold_kmh_per_s) {
        emit(TripEventKind::kHardBrakeBeep, "drop " + std::to_string(drop) + " km/h");
      }
    }
    dev.last_reported_speed_kmh = kmh;
    out.speed_report = SpeedSample{vehicle.t, static_cast<double>(kmh)};
  };

  const bool powered = vehicle.voltage >= kIgnitionVoltage;
  switch (device.phase) {
    case DevicePhase::kIdle:
      if (powered) dev.phase = DevicePhase::kIgnitionDetected;
      break;

    case DevicePhase::kIgnitionDetected: {
      if (!powered) {
        dev.phase = DevicePhase::kIdle;
        break;
      }
      const auto rpm = ask_number(rpm_request(), decode_rpm);
      if (!rpm || *rpm <= 0.0) break;
      dev.phase = DevicePhase::kInTrip;
      dev.last_reported_speed_kmh.reset();
      emit(TripEventKind::kTripStart, "");
      std::string vin = "unavailable";
      try {
        vin = decode_vin(ask(vin_request()));
      } catch (const ParseError&) {
      }
      emit(TripEventKind::kVinRead, vin);
      if (dev.read_dtc) {
        std::string joined;
        try {
          for (const auto& code : decode_dtcs(ask(dtc_request()))) {
            if (!joined.empty()) joined += ' ';
            joined += code;
          }
        } catch (const ParseError&) {
          joined = "unavailable";
        }
        emit(TripEventKind::kDtcRead, joined);
      }
      poll_speed();
      break;
    }

    case DevicePhase::kInTrip:
      if (!powered) {
        dev.phase = DevicePhase::kShutoffPending;
        dev.last_reported_speed_kmh.reset();
        break;
      }
      poll_speed();
      break;

    case DevicePhase::kShutoffPending: {
      const auto rpm = ask_number(rpm_request(), decode_rpm);
      const auto maf = ask_number(maf_request(), decode_maf);
      const bool engine_stopped = rpm.value_or(0.0) == 0.0 && maf.value_or(0.0) == 0.0;
      if (!powered && engine_stopped) {
        dev.phase = DevicePhase::kIdle;
        emit(TripEventKind::kTripEnd, "");
      } else if (powered) {
        dev.phase = DevicePhase::kInTrip;
      }
      break;
    }
  }
  return out;
}

SessionResult run_session(const std::vector<VehicleState>& states, const DeviceState& config,
                          const ResponseFilter& filter) {
  SessionResult result;
  DeviceState dev = config;
  dev.events.clear();
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& vehicle = states[i];
    Responder responder;
    if (filter) {
      responder = [&](const ObdRequest& req) { return filter(req, handle_obd_request(vehicle, req)); };
    }
    auto tick = device_tick(dev, vehicle, responder);
    result.requests += tick.requests.size();
    if (tick.speed_report) {
      result.observed.push_back(*tick.speed_report);
      result.observed_indices.push_back(i);
    }
    result.events.insert(result.events.end(), tick.events.begin(), tick.events.end());
    dev = std::move(tick.device);
  }
  result.final_device = std::move(dev);
  return result;
}

TripSession run_session(const RawTrip& trip, const DeviceState& config) {
  validate(trip);
  TripSession session;
  session.observed.vin = trip.vin;
  session.observed.meta = trip.meta;
  session.observed.accel_series = trip.accel_series;
  if (trip.speed_series.empty()) {
    if (trip.truth_labels) session.observed.truth_labels = std::vector<bool>{};
    return session;
  }

  std::vector<VehicleState> states;
  states.reserve(trip.speed_series.size() + 3);
  auto running_at = [&](double t, double kmh) {
    VehicleState s;
    s.t = t;
    s.speed_kmh = kmh;
    s.vin = trip.vin;
    set_engine(s, true);
    return s;
  };
  states.push_back(running_at(trip.speed_series.front().t, trip.speed_series.front().v_kmh));
  for (const auto& s : trip.speed_series) states.push_back(running_at(s.t, s.v_kmh));
  const double t_end = trip.speed_series.back().t;
  for (double dt : {1.0, 2.0}) {
    VehicleState off;
    off.t = t_end + dt;
    off.vin = trip.vin;
    set_engine(off, false);
    states.push_back(off);
  }

  auto result = run_session(states, config);
  std::vector<bool> labels;
  for (std::size_t k = 0; k < result.observed.size(); ++k) {
    const std::size_t src = result.observed_indices[k] - 1;  // skip the warm-up tick
    session.observed.speed_series.push_back(result.observed[k]);
    if (trip.truth_labels) labels.push_back((*trip.truth_labels)[src]);
  }
  if (trip.truth_labels) session.observed.truth_labels = std::move(labels);
  session.events = std::move(result.events);
  return session;
}

void write_events(const std::vector<TripEvent>& events, std::ostream& out) {
  for (const auto& ev : events) {
    nlohmann::json j = {{"t", ev.t}, {"kind", to_string(ev.kind)}, {"detail", ev.detail}};
    out << j.dump() << '\n';
  }
}

void write_events(const std::vector<TripEvent>& events, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_events(events, out);
  if (!out) throw IoError("write to " + path.string() + " failed");
}

std::vector<TripEvent> read_events(std::istream& in) {
  static const std::pair<const char*, TripEventKind> kKinds[] = {
      {"TripStart", TripEventKind::kTripStart},   {"VinRead", TripEventKind::kVinRead},
      {"DtcRead", TripEventKind::kDtcRead},       {"HardBrakeBeep", TripEventKind::kHardBrakeBeep},
      {"TripEnd", TripEventKind::kTripEnd},
  };
  std::vector<TripEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      TripEvent ev;
      ev.t = j.at("t").get<double>();
      ev.detail = j.at("detail").get<std::string>();
      const auto kind = j.at("kind").get<std::string>();
      const auto it = std::find_if(std::begin(kKinds), std::end(kKinds),
                                   [&](const auto& k) { return kind == k.first; });
      if (it == std::end(kKinds)) throw ParseError("unknown event kind '" + kind + "'", line_no);
      ev.kind = it->second;
      events.push_back(std::move(ev));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return events;
}

}  // namespace odbguard
