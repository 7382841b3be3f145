#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "odbguard/error.hpp"
#include "odbguard/trace.hpp"
#include "text_format.hpp"

namespace odbguard {

namespace {

constexpr std::string_view kTraceHeader = "t,v_kmh,ax,ay,az,label";
constexpr std::string_view kTraceHeaderNoLabel = "t,v_kmh,ax,ay,az";
constexpr std::string_view kTraceMagic = "odbguard-trace";
constexpr std::string_view kAlignedHeader = "t,y,x1,x2,x3,label";
constexpr std::string_view kAlignedHeaderNoLabel = "t,y,x1,x2,x3";
constexpr std::string_view kAlignedMagic = "odbguard-aligned";
constexpr std::string_view kSchemaVersion = "v1";

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void check_written(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

// Handles a `# key: value` metadata line. Returns false for plain comments.
bool parse_meta(std::string_view body, std::string_view& key, std::string_view& value) {
  const auto colon = body.find(':');
  if (colon == std::string_view::npos) return false;
  key = detail::trim(body.substr(0, colon));
  value = detail::trim(body.substr(colon + 1));
  return true;
}

void check_magic(std::string_view body, std::string_view magic, std::size_t line) {
  if (body.substr(0, magic.size()) != magic) return;
  const auto version = detail::trim(body.substr(magic.size()));
  if (version != kSchemaVersion) {
    throw VersionMismatch("line " + std::to_string(line) + ": unsupported " +
                          std::string(magic) + " schema '" + std::string(version) + "', expected " +
                          std::string(kSchemaVersion));
  }
}

}  // namespace

RawTrip read_trip(std::istream& in) {
  RawTrip trip;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t n_fields = 6;
  std::vector<std::optional<bool>> labels;

  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line.front() == '#') {
        const auto body = detail::trim(line.substr(1));
        check_magic(body, kTraceMagic, line_no);
        std::string_view key, value;
        if (parse_meta(body, key, value)) {
          if (key == "vin") {
            trip.vin = std::string(value);
          } else if (key == "scenario") {
            trip.meta.scenario = std::string(value);
          } else if (key == "seed") {
            trip.meta.seed = detail::parse_int<std::uint64_t>(value, line_no, "seed");
          }
        }
        continue;
      }
      if (line != kTraceHeader && line != kTraceHeaderNoLabel) {
        throw ParseError("expected header '" + std::string(kTraceHeader) + "'", line_no);
      }
      n_fields = line == kTraceHeader ? 6 : 5;
      header_seen = true;
      continue;
    }

    const auto fields = detail::split_csv(line);
    if (fields.size() != n_fields) {
      throw ParseError("expected " + std::to_string(n_fields) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    const double t = detail::parse_double(fields[0], line_no, "t");
    if (!std::isfinite(t) || t < 0.0) throw ParseError("timestamp must be finite and >= 0", line_no);
    const auto v = detail::parse_optional_double(fields[1], line_no, "v_kmh");
    const auto ax = detail::parse_optional_double(fields[2], line_no, "ax");
    const auto ay = detail::parse_optional_double(fields[3], line_no, "ay");
    const auto az = detail::parse_optional_double(fields[4], line_no, "az");
    const auto label = n_fields == 6 ? detail::parse_label(fields[5], line_no) : std::nullopt;

    const int accel_fields = int(ax.has_value()) + int(ay.has_value()) + int(az.has_value());
    if (accel_fields != 0 && accel_fields != 3) {
      throw ParseError("ax, ay, az must be all present or all empty", line_no);
    }
    if (!v && accel_fields == 0) throw ParseError("row carries neither speed nor acceleration", line_no);
    if (!v && label) throw ParseError("label on a row without speed", line_no);

    if (v) {
      if (!std::isfinite(*v) || *v < 0.0 || *v > kMaxObdSpeedKmh) {
        throw ParseError("speed outside [0, 255] km/h", line_no);
      }
      if (!trip.speed_series.empty() && !(t > trip.speed_series.back().t)) {
        throw ParseError("speed timestamp " + detail::format_double(t) +
                             " does not increase (previous " +
                             detail::format_double(trip.speed_series.back().t) + ")",
                         line_no);
      }
      trip.speed_series.push_back({t, *v});
      labels.push_back(label);
    }
    if (accel_fields == 3) {
      if (!std::isfinite(*ax) || !std::isfinite(*ay) || !std::isfinite(*az)) {
        throw ParseError("non-finite acceleration", line_no);
      }
      if (!trip.accel_series.empty() && !(t > trip.accel_series.back().t)) {
        throw ParseError("accel timestamp " + detail::format_double(t) +
                             " does not increase (previous " +
                             detail::format_double(trip.accel_series.back().t) + ")",
                         line_no);
      }
      trip.accel_series.push_back({t, *ax, *ay, *az});
    }
  }
  if (!header_seen) throw ParseError("missing header line", line_no);

  std::size_t labelled = 0;
  for (const auto& l : labels) labelled += l.has_value() ? 1 : 0;
  if (labels.empty() && n_fields == 6) {
    trip.truth_labels = std::vector<bool>{};
  } else if (labelled == labels.size() && labelled > 0) {
    std::vector<bool> truth;
    truth.reserve(labels.size());
    for (const auto& l : labels) truth.push_back(*l);
    trip.truth_labels = std::move(truth);
  } else if (labelled != 0) {
    throw ParseError("label column must be filled on every speed row or on none");
  }
  try {
    validate(trip);
  } catch (const UsageError& e) {
    throw ParseError(e.what());
  }
  return trip;
}

RawTrip read_trip(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_trip(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_trip(const RawTrip& trip, std::ostream& out) {
  validate(trip);
  out << "# " << kTraceMagic << ' ' << kSchemaVersion << '\n';
  if (!trip.vin.empty()) out << "# vin: " << trip.vin << '\n';
  if (!trip.meta.scenario.empty()) out << "# scenario: " << trip.meta.scenario << '\n';
  out << "# seed: " << trip.meta.seed << '\n';
  const bool labelled = trip.truth_labels.has_value();
  out << (labelled ? kTraceHeader : kTraceHeaderNoLabel) << '\n';

  const auto& speed = trip.speed_series;
  const auto& accel = trip.accel_series;
  std::size_t i = 0, j = 0;
  while (i < speed.size() || j < accel.size()) {
    const bool take_speed = j == accel.size() || (i < speed.size() && speed[i].t <= accel[j].t);
    if (take_speed) {
      out << detail::format_double(speed[i].t) << ',' << detail::format_double(speed[i].v_kmh)
          << ",,,";
      if (labelled) out << ',' << ((*trip.truth_labels)[i] ? '1' : '0');
      out << '\n';
      ++i;
    } else {
      const auto& a = accel[j];
      out << detail::format_double(a.t) << ",," << detail::format_double(a.ax) << ','
          << detail::format_double(a.ay) << ',' << detail::format_double(a.az)
          << (labelled ? ",\n" : "\n");
      ++j;
    }
  }
}

void write_trip(const RawTrip& trip, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_trip(trip, out);
  check_written(out, path);
}

std::vector<AlignedRecord> read_aligned(std::istream& in) {
  std::vector<AlignedRecord> records;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t n_fields = 6;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line.front() == '#') {
        check_magic(detail::trim(line.substr(1)), kAlignedMagic, line_no);
        continue;
      }
      if (line != kAlignedHeader && line != kAlignedHeaderNoLabel) {
        throw ParseError("expected header '" + std::string(kAlignedHeader) + "'", line_no);
      }
      n_fields = line == kAlignedHeader ? 6 : 5;
      header_seen = true;
      continue;
    }
    const auto fields = detail::split_csv(line);
    if (fields.size() != n_fields) {
      throw ParseError("expected " + std::to_string(n_fields) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    AlignedRecord r;
    r.t = detail::parse_int(fields[0], line_no, "t");
    r.y = detail::parse_double(fields[1], line_no, "y");
    r.x = {detail::parse_double(fields[2], line_no, "x1"),
           detail::parse_double(fields[3], line_no, "x2"),
           detail::parse_double(fields[4], line_no, "x3")};
    if (n_fields == 6) r.label = detail::parse_label(fields[5], line_no);
    if (!std::isfinite(r.y) || !std::isfinite(r.x[0]) || !std::isfinite(r.x[1]) ||
        !std::isfinite(r.x[2])) {
      throw ParseError("non-finite value", line_no);
    }
    records.push_back(r);
  }
  if (!header_seen) throw ParseError("missing header line", line_no);
  return records;
}

std::vector<AlignedRecord> read_aligned(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_aligned(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_aligned(const std::vector<AlignedRecord>& records, std::ostream& out) {
  out << "# " << kAlignedMagic << ' ' << kSchemaVersion << '\n' << kAlignedHeader << '\n';
  for (const auto& r : records) {
    out << r.t << ',' << detail::format_double(r.y) << ',' << detail::format_double(r.x[0]) << ','
        << detail::format_double(r.x[1]) << ',' << detail::format_double(r.x[2]) << ',';
    if (r.label) out << (*r.label ? '1' : '0');
    out << '\n';
  }
}

void write_aligned(const std::vector<AlignedRecord>& records, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_aligned(records, out);
  check_written(out, path);
}

}  // namespace odbguard
